"""Hyperparameter schedules and derived smoothness constants.

Every (method, regime) pair has a closed-form horizon-dependent schedule:
the stepsize gamma, the momentum/estimator weight eta, and (for the
variance-reduced method) a sharp-initialization batch size N_init.  The
exponents are what the convergence analysis prescribes; the caller chooses
only the scale knobs gamma0 / eta0.

``derived_constants`` evaluates the constants that the alpha-parameterized
generalized-smoothness analysis builds out of (alpha, L0, L1); they feed the
step-size conditions checked by ``validate_conditions`` and the closed-form
rate bounds in :mod:`driftopt.analysis`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Schedule",
    "ConstantsLedger",
    "derived_constants",
    "nsgdm_schedule",
    "nstorm_schedule",
    "validate_conditions",
    "default_lambda0",
]

NSGDM_REGIMES = ("bg0", "bounded_variance", "deterministic")
NSTORM_REGIMES = ("mss", "expected_sym_alpha", "expected_sym_one", "bounded_variance")


@dataclass(frozen=True)
class Schedule:
    """Resolved hyperparameters for one run.

    ``knobs`` records the user-facing scale parameters exactly as provided
    (entries are ``None`` when a regime does not take them), so serialized
    results are self-describing.
    """

    method: str
    regime: str
    T: int
    gamma: float
    eta: float
    n_init: int = 1
    knobs: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ValueError("horizon T must be a positive integer")
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        if self.n_init < 1:
            raise ValueError("n_init must be at least 1")

    def to_metadata(self) -> dict:
        """JSON-serializable record of every resolved value."""
        return {
            "method": self.method,
            "regime": self.regime,
            "T": self.T,
            "gamma": self.gamma,
            "eta": self.eta,
            "n_init": self.n_init,
            "knobs": dict(self.knobs),
        }


@dataclass(frozen=True)
class ConstantsLedger:
    """Constants derived from (alpha, L0, L1) for the alpha < 1 analysis.

    The STORM-side family (K0, K1, K2, L_alpha, c_alpha) and the
    momentum-side family (Lbar0, Lbar1, Lbar2, C_alpha, Ctilde_alpha) are
    kept together since both are pure functions of the same three inputs.
    ``p = alpha / (1 - alpha)`` is the exponent that recurs throughout.
    """

    alpha: float
    L0: float
    L1: float
    K0: float
    K1: float
    K2: float
    L_alpha: float
    c_alpha: float
    p: float
    Lbar0: float
    Lbar1: float
    Lbar2: float
    C_alpha: float
    Ctilde_alpha: float


def derived_constants(alpha: float, L0: float, L1: float) -> ConstantsLedger:
    """Evaluate the alpha-family constants.

    Rejects alpha outside (0, 1): the alpha = 1 analysis states its constants
    directly in terms of (L0, L1) and never routes through this ledger.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
    if L0 <= 0.0 or L1 <= 0.0:
        raise ValueError("L0 and L1 must be positive")

    one_minus = 1.0 - alpha
    p = alpha / one_minus

    try:
        K0 = 2.0 ** ((2.0 - alpha) / one_minus) * L0
        K1 = 2.0 ** ((2.0 - alpha) / one_minus) * L1
        K2 = (5.0 * L1) ** (1.0 / one_minus)
        L_alpha = 2.0 ** (alpha / 2.0) * K1
        c_alpha = one_minus * alpha**p

        pow2 = 2.0 ** (alpha**2 / one_minus)
        Lbar0 = L0 * (pow2 + 1.0)
        Lbar1 = L1 * pow2 * 3.0**alpha
        Lbar2 = L1 ** (1.0 / one_minus) * pow2 * 3.0**alpha * one_minus**p
        C_alpha = Lbar2 + 0.5 * one_minus * (2.0 * alpha) ** p * Lbar1 ** (1.0 / one_minus)
        Ctilde_alpha = Lbar0 + Lbar2 + one_minus * (8.0 * alpha) ** p * Lbar1 ** (1.0 / one_minus)
    except OverflowError as exc:
        raise ValueError(
            f"derived constants exceed double range at alpha={alpha:g} with "
            f"L0={L0:g}, L1={L1:g}; the 1/(1-alpha) exponents are too steep"
        ) from exc
    values = (K0, K1, K2, L_alpha, c_alpha, Lbar0, Lbar1, Lbar2, C_alpha, Ctilde_alpha)
    if not all(math.isfinite(v) for v in values):
        raise ValueError(
            f"derived constants exceed double range at alpha={alpha:g} with "
            f"L0={L0:g}, L1={L1:g}; the 1/(1-alpha) exponents are too steep"
        )

    return ConstantsLedger(
        alpha=alpha,
        L0=L0,
        L1=L1,
        K0=K0,
        K1=K1,
        K2=K2,
        L_alpha=L_alpha,
        c_alpha=c_alpha,
        p=p,
        Lbar0=Lbar0,
        Lbar1=Lbar1,
        Lbar2=Lbar2,
        C_alpha=C_alpha,
        Ctilde_alpha=Ctilde_alpha,
    )


def nsgdm_schedule(regime: str, T: int, gamma0: float) -> Schedule:
    """Momentum schedules: one fresh sample per iteration, n_init is always 1.

    bg0:              eta = T^(-2/3),  gamma = gamma0 * T^(-5/6)
    bounded_variance: eta = T^(-1/2),  gamma = gamma0 * T^(-3/4)
    deterministic:    eta = 1,         gamma = gamma0 * T^(-1/2)
    """
    if regime not in NSGDM_REGIMES:
        raise ValueError(f"unknown momentum regime {regime!r}; expected one of {NSGDM_REGIMES}")
    if T < 1:
        raise ValueError("horizon T must be a positive integer")
    if not gamma0 > 0.0:
        raise ValueError("gamma0 must be positive")

    t = float(T)
    if regime == "bg0":
        eta, gamma = t ** (-2.0 / 3.0), gamma0 * t ** (-5.0 / 6.0)
    elif regime == "bounded_variance":
        eta, gamma = t ** (-0.5), gamma0 * t ** (-0.75)
    else:
        eta, gamma = 1.0, gamma0 * t ** (-0.5)

    knobs = {"gamma0": gamma0, "eta0": None, "lambda0": None, "alpha": None, "G": None}
    return Schedule(method="nsgdm", regime=regime, T=T, gamma=gamma, eta=eta, n_init=1, knobs=knobs)


def nstorm_schedule(
    regime: str,
    alpha: float | None,
    T: int,
    gamma0: float,
    eta0: float = 1.0,
    G: float = 0.0,
) -> Schedule:
    """Variance-reduction schedules with sharp initialization.

    mss:                eta = T^(-1),               gamma = gamma0 * T^(-3/4),
                        N_init = max{1, ceil(G^2 * T^(1/2))}
    expected_sym_alpha: eta = eta0 * T^(-4/(4+a)),  gamma = gamma0 * T^(-(3+a)/(4+a)),
                        N_init = max{1, ceil(G^2 * T^(2(1-a)/(4+a)))}
    expected_sym_one:   eta = T^(-4/5),             gamma = gamma0 * T^(-4/5),  N_init = 1
    bounded_variance:   eta = eta0 * T^(-2/3),      gamma = gamma0 * T^(-2/3),  N_init = 1
                        (shared by all smoothness classes)
    """
    if regime not in NSTORM_REGIMES:
        raise ValueError(f"unknown estimator regime {regime!r}; expected one of {NSTORM_REGIMES}")
    if T < 1:
        raise ValueError("horizon T must be a positive integer")
    if not gamma0 > 0.0:
        raise ValueError("gamma0 must be positive")
    if not 0.0 < eta0 <= 1.0:
        raise ValueError("eta0 must lie in (0, 1]")
    if G < 0.0:
        raise ValueError("G must be nonnegative")

    t = float(T)
    n_init = 1
    if regime == "mss":
        eta, gamma = 1.0 / t, gamma0 * t ** (-0.75)
        n_init = max(1, math.ceil(G**2 * t**0.5))
    elif regime == "expected_sym_alpha":
        if alpha is None:
            raise ValueError("expected_sym_alpha requires alpha")
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
        eta = eta0 * t ** (-4.0 / (4.0 + alpha))
        gamma = gamma0 * t ** (-(3.0 + alpha) / (4.0 + alpha))
        n_init = max(1, math.ceil(G**2 * t ** (2.0 * (1.0 - alpha) / (4.0 + alpha))))
    elif regime == "expected_sym_one":
        eta, gamma = t ** (-0.8), gamma0 * t ** (-0.8)
    else:  # bounded_variance
        eta, gamma = eta0 * t ** (-2.0 / 3.0), gamma0 * t ** (-2.0 / 3.0)

    knobs = {"gamma0": gamma0, "eta0": eta0, "lambda0": None, "alpha": alpha, "G": G}
    return Schedule(
        method="nstorm", regime=regime, T=T, gamma=gamma, eta=eta, n_init=n_init, knobs=knobs
    )


def default_lambda0(gamma0: float, eta0: float, constants: ConstantsLedger) -> float:
    """Largest auxiliary lambda0 satisfying both expected_sym_alpha conditions.

    lambda enters only the analysis, never the update; this canonical choice
    saturates the binding constraint so the conditions hold with equality.
    """
    a = constants.alpha
    return min(
        1.0 / (2.0 ** (a / 2.0) * constants.K1 * gamma0),
        eta0 / (2.0 ** ((6.0 + a) / 2.0) * constants.K1 * gamma0),
    )


def validate_conditions(schedule, constants, lambda0: float | None = None) -> list[str]:
    """Check the analysis' step-size conditions for a schedule.

    ``constants`` is a :class:`ConstantsLedger` for the alpha < 1 regimes, or
    a plain ``(L0, L1)`` pair for the alpha = 1 regimes (whose conditions use
    L1 directly).  Returns a list of human-readable violation descriptions —
    an empty list means every applicable condition holds.  Violations are
    data: callers decide whether to warn or refuse.
    """
    violations: list[str] = []
    if schedule.method not in ("nsgdm", "nstorm"):
        return violations
    gamma0 = schedule.knobs.get("gamma0")
    if gamma0 is None:
        raise ValueError("schedule carries no gamma0 knob; nothing to validate against")
    ledger = constants if isinstance(constants, ConstantsLedger) else None
    pair = None if ledger is not None else tuple(constants)
    slack = 1.0 + 1e-12  # boundary comparisons tolerate round-off

    if schedule.method == "nsgdm":
        if ledger is not None:
            if gamma0 > slack:
                violations.append(
                    f"gamma0 = {gamma0:g} exceeds 1, the ceiling for the "
                    "alpha-generalized-smoothness momentum analysis"
                )
        elif pair is not None:
            _, L1 = pair
            limit = 1.0 / (8.0 * L1)
            if gamma0 > limit * slack:
                violations.append(
                    f"gamma0 = {gamma0:g} exceeds 1/(8*L1) = {limit:g} required by the "
                    "alpha = 1 momentum analysis"
                )
    elif schedule.method == "nstorm":
        if schedule.regime == "expected_sym_alpha":
            if ledger is None:
                alpha = schedule.knobs.get("alpha")
                if alpha is None:
                    raise ValueError("expected_sym_alpha validation needs alpha via constants or knobs")
                ledger = derived_constants(alpha, *pair)
            if lambda0 is not None:
                a, K1 = ledger.alpha, ledger.K1
                eta0 = schedule.knobs.get("eta0") or 1.0
                c1 = 2.0 ** (a / 2.0) * K1 * lambda0 * gamma0
                c2 = 2.0 ** ((6.0 + a) / 2.0) * K1 * lambda0 * gamma0 / eta0
                if c1 > slack:
                    violations.append(f"2^(a/2) K1 lambda0 gamma0 = {c1:g} exceeds 1")
                if c2 > slack:
                    violations.append(f"2^((6+a)/2) K1 lambda0 gamma0 / eta0 = {c2:g} exceeds 1")
        elif schedule.regime == "expected_sym_one":
            if pair is None:
                pair = (ledger.L0, ledger.L1)
            _, L1 = pair
            limit = 1.0 / (16.0 * math.sqrt(2.0 * math.exp(0.75)) * L1)
            if gamma0 > limit * slack:
                violations.append(
                    f"gamma0 = {gamma0:g} exceeds 1/(16*sqrt(2e^(3/4))*L1) = {limit:g} "
                    "required by the alpha = 1 estimator analysis"
                )
        # mss and bounded_variance place no condition on gamma0
    return violations
