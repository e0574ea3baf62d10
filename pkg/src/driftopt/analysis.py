"""Rate-slope fits, closed-form convergence bounds, and run comparisons.

Pure post-processing over :class:`~driftopt.optimizers.Trace` objects and
plain numbers:

* ``fit_rate_slope`` turns (horizon, value) pairs into an estimated rate
  exponent via least squares on the log-log scale.
* ``theorem_bound_nsgdm`` / ``theorem_bound_nstorm`` evaluate the displayed
  upper bounds on E||grad f(x_hat)|| for each smoothness regime, addend by
  addend.  Step-size conditions are checked through
  :func:`driftopt.schedules.validate_conditions`; violations are attached to
  the result as warnings and the bound is still evaluated.
* ``aggregate_traces`` / ``compare_runs`` reduce seed batches to mean/std
  curves on a shared SFO grid and report whether one method's curve sits
  below another's by more than one pooled standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .objectives import Array
from .schedules import (
    default_lambda0,
    derived_constants,
    nsgdm_schedule,
    nstorm_schedule,
    validate_conditions,
)

__all__ = [
    "RateFit",
    "BoundEvaluation",
    "AggregatedCurve",
    "ComparisonReport",
    "fit_rate_slope",
    "theorem_bound_nsgdm",
    "theorem_bound_nstorm",
    "aggregate_traces",
    "compare_runs",
]

NSGDM_BOUND_REGIMES = ("smooth", "sym_alpha", "sym_one")
NSTORM_BOUND_REGIMES = ("mss", "expected_sym_alpha", "expected_sym_one")


@dataclass(frozen=True)
class RateFit:
    """Least-squares power-law fit value ~ C * T^slope on the log-log scale."""

    points: tuple[tuple[int, float], ...]
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return {
            "points": [[t, v] for t, v in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
        }


@dataclass(frozen=True)
class BoundEvaluation:
    """One evaluated convergence bound, split into its displayed addends.

    ``value`` always equals the sum of ``term_breakdown`` (checked at
    construction to 1e-12 relative).  ``condition_violations`` carries the
    step-size condition report; a nonempty tuple means the schedule knobs sit
    outside the analysis' validity region, in which case the number is the
    formula evaluated anyway, not a proven bound.
    """

    method: str
    regime: str
    params: dict
    value: float
    term_breakdown: dict
    condition_violations: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        total = float(sum(self.term_breakdown.values()))
        if abs(total - self.value) > 1e-12 * max(1.0, abs(self.value)):
            raise ValueError(
                f"term breakdown sums to {total!r}, not the reported value {self.value!r}"
            )

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "regime": self.regime,
            "params": dict(self.params),
            "value": self.value,
            "term_breakdown": dict(self.term_breakdown),
            "condition_violations": list(self.condition_violations),
        }


@dataclass(frozen=True)
class AggregatedCurve:
    """Mean/std of one trace series across seeds on the union SFO grid.

    Each seed's series is stepped forward onto the grid (last value carried
    forward) and contributes NaN beyond its own final budget; ``n_seeds``
    counts the contributors at each grid point.  ``std`` is the ddof-1 sample
    deviation, 0 where only one seed contributes.
    """

    label: str
    series: str
    sfo: Array
    mean: Array
    std: Array
    n_seeds: Array


@dataclass(frozen=True)
class ComparisonReport:
    """Mean +- std of two curves at a budget, and whether they separate.

    Separation means the curve means differ by more than one pooled standard
    deviation sqrt((std_a^2 + std_b^2) / 2); ``lower`` names the smaller mean
    ("a"/"b") or is None on an exact tie.
    """

    at_sfo: int
    label_a: str
    label_b: str
    sfo_a: int
    sfo_b: int
    mean_a: float
    std_a: float
    mean_b: float
    std_b: float
    pooled_std: float
    lower: str | None
    separated: bool

    def to_dict(self) -> dict:
        return {
            "at_sfo": self.at_sfo,
            "a": {"label": self.label_a, "sfo": self.sfo_a, "mean": self.mean_a, "std": self.std_a},
            "b": {"label": self.label_b, "sfo": self.sfo_b, "mean": self.mean_b, "std": self.std_b},
            "pooled_std": self.pooled_std,
            "lower": self.lower,
            "separated": self.separated,
        }


# ---------------------------------------------------------------------------
# rate fitting
# ---------------------------------------------------------------------------


def fit_rate_slope(points) -> RateFit:
    """Fit log10(value) = slope * log10(T) + intercept by ordinary least squares.

    Requires at least three points with distinct positive horizons and
    strictly positive values; the slope is the estimated rate exponent (the
    base of the logarithm does not affect it).
    """
    pts = [(int(t), float(v)) for t, v in points]
    if len(pts) < 3:
        raise ValueError("rate fit needs at least 3 points")
    horizons = [t for t, _ in pts]
    if len(set(horizons)) != len(horizons):
        raise ValueError("rate fit needs distinct horizons")
    if any(t < 1 for t in horizons):
        raise ValueError("horizons must be positive integers")
    if any(v <= 0.0 for _, v in pts):
        raise ValueError("rate fit needs strictly positive values")

    log_t = np.log10([t for t, _ in pts])
    log_v = np.log10([v for _, v in pts])
    fit = stats.linregress(log_t, log_v)
    return RateFit(
        points=tuple(pts),
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue) ** 2,
    )


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------


def _require_positive(name: str, value) -> float:
    if value is None or not float(value) > 0.0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return float(value)


def _require_nonnegative(name: str, value) -> float:
    if value is None or float(value) < 0.0:
        raise ValueError(f"{name} must be nonnegative, got {value!r}")
    return float(value)


def theorem_bound_nsgdm(
    regime: str,
    delta: float,
    gamma0: float,
    *,
    T: int,
    b0: float | None = None,
    L0: float | None = None,
    L1: float | None = None,
    alpha: float | None = None,
    B: float = 0.0,
    G: float = 0.0,
) -> BoundEvaluation:
    """Upper bound on E||grad f(x_hat)|| for the momentum method.

    All three regimes assume the momentum schedule eta = T^(-2/3),
    gamma = gamma0 * T^(-5/6):

    smooth:     L0-smooth objectives; three displayed addends.
    sym_alpha:  (L0, L1, alpha)-generalized smoothness with alpha < 1; six
                addends built from the derived-constants ledger; requires
                gamma0 <= 1.
    sym_one:    alpha = 1 generalized smoothness; the smooth addends plus a
                64 L1^2 gamma0 correction bracket (nine addends in all);
                requires gamma0 <= 1/(8 L1).

    ``b0`` is accepted for signature parity with the estimator bound but does
    not enter any momentum regime.
    """
    if regime not in NSGDM_BOUND_REGIMES:
        raise ValueError(f"unknown bound regime {regime!r}; expected one of {NSGDM_BOUND_REGIMES}")
    delta = _require_nonnegative("delta", delta)
    gamma0 = _require_positive("gamma0", gamma0)
    B = _require_nonnegative("B", B)
    G = _require_nonnegative("G", G)
    if T < 1:
        raise ValueError("horizon T must be a positive integer")
    t = float(T)

    params = {
        "delta": delta, "gamma0": gamma0, "b0": b0, "L0": L0, "L1": L1,
        "alpha": alpha, "B": B, "G": G, "T": T,
    }
    schedule = nsgdm_schedule("bg0", T, gamma0)

    if regime == "smooth":
        L0 = _require_positive("L0", L0)
        terms = {
            "init_and_smoothness": (2.0 * delta / gamma0 + 16.0 * L0 * gamma0 + 2.0 * B * gamma0)
            * t ** (-1.0 / 6.0),
            "noise_floor": 8.0 * G * t ** (-1.0 / 3.0),
            "stepsize_tail": 2.0 * L0 * gamma0 * t ** (-5.0 / 6.0),
        }
        violations: tuple[str, ...] = ()
    elif regime == "sym_alpha":
        L0 = _require_positive("L0", L0)
        L1 = _require_positive("L1", L1)
        if alpha is None:
            raise ValueError("sym_alpha bound requires alpha")
        ledger = derived_constants(alpha, L0, L1)
        terms = {
            "init": 2.0 * delta / gamma0 * t ** (-1.0 / 6.0),
            "smoothness": 4.0 * ledger.Ctilde_alpha * gamma0 * t ** (-1.0 / 6.0),
            "drift_noise": 2.0 * B * gamma0 * t ** (-1.0 / 6.0),
            "noise_floor": 8.0 * G * t ** (-1.0 / 3.0),
            "stepsize_tail": ledger.Lbar0 * gamma0 * t ** (-5.0 / 6.0),
            "alpha_tail": 2.0 * ledger.C_alpha * gamma0 ** (1.0 / (1.0 - alpha))
            * t ** (-5.0 / (6.0 * (1.0 - alpha))),
        }
        violations = tuple(validate_conditions(schedule, ledger))
    else:  # sym_one
        L0 = _require_positive("L0", L0)
        L1 = _require_positive("L1", L1)
        corr = 64.0 * L1**2 * gamma0 * t ** (-1.0 / 6.0)
        terms = {
            "init": 2.0 * delta / gamma0 * t ** (-1.0 / 6.0),
            "smoothness": 16.0 * L0 * gamma0 * t ** (-1.0 / 6.0),
            "drift_noise": 2.0 * B * gamma0 * t ** (-1.0 / 6.0),
            "noise_floor": 8.0 * G * t ** (-1.0 / 3.0),
            "stepsize_tail": 2.0 * L0 * gamma0 * t ** (-5.0 / 6.0),
            "grad_corr_init": corr * 4.0 * delta,
            "grad_corr_smoothness": corr * (16.0 * L0 + 2.0 * B) * gamma0**2,
            "grad_corr_noise_floor": corr * 8.0 * gamma0 * G * t ** (-1.0 / 6.0),
            "grad_corr_tail": corr * 2.0 * L0 * gamma0**2 * t ** (-2.0 / 3.0),
        }
        violations = tuple(validate_conditions(schedule, (L0, L1)))

    value = float(sum(terms.values()))
    return BoundEvaluation(
        method="nsgdm", regime=regime, params=params, value=value,
        term_breakdown=terms, condition_violations=violations,
    )


def theorem_bound_nstorm(
    regime: str,
    delta: float,
    gamma0: float,
    *,
    T: int,
    eta0: float = 1.0,
    lambda0: float | None = None,
    b0: float | None = None,
    L: float | None = None,
    L0: float | None = None,
    L1: float | None = None,
    alpha: float | None = None,
    B: float = 0.0,
    G: float = 0.0,
) -> BoundEvaluation:
    """Upper bound on E||grad f(x_hat)|| for the variance-reduced method.

    mss:                mean-squared smooth objectives with constant ``L``;
                        the mss schedule; three displayed addends.
    expected_sym_alpha: alpha < 1 generalized smoothness in expectation;
                        fourteen addends (the drift terms vanish when B = 0,
                        leaving the eleven displayed ones); the auxiliary
                        ``lambda0`` defaults to the largest value passing both
                        step-size conditions.
    expected_sym_one:   alpha = 1; four addends; ``b0`` bounds the initial
                        estimator error and is required here; requires
                        gamma0 <= 1/(16 sqrt(2 e^(3/4)) L1).
    """
    if regime not in NSTORM_BOUND_REGIMES:
        raise ValueError(f"unknown bound regime {regime!r}; expected one of {NSTORM_BOUND_REGIMES}")
    delta = _require_nonnegative("delta", delta)
    gamma0 = _require_positive("gamma0", gamma0)
    eta0 = _require_positive("eta0", eta0)
    B = _require_nonnegative("B", B)
    G = _require_nonnegative("G", G)
    if T < 1:
        raise ValueError("horizon T must be a positive integer")
    t = float(T)

    params = {
        "delta": delta, "gamma0": gamma0, "eta0": eta0, "lambda0": lambda0, "b0": b0,
        "L": L, "L0": L0, "L1": L1, "alpha": alpha, "B": B, "G": G, "T": T,
    }

    if regime == "mss":
        L = _require_positive("L", L)
        terms = {
            "init_and_smoothness": (delta / gamma0 + 2.0 * (1.0 + L * gamma0 + B * gamma0))
            * t ** (-1.0 / 4.0),
            "noise_floor": 2.0 * G * t ** (-1.0 / 2.0),
            "stepsize_tail": 0.5 * L * gamma0 * t ** (-3.0 / 4.0),
        }
        violations: tuple[str, ...] = ()
    elif regime == "expected_sym_alpha":
        L0 = _require_positive("L0", L0)
        L1 = _require_positive("L1", L1)
        if alpha is None:
            raise ValueError("expected_sym_alpha bound requires alpha")
        ledger = derived_constants(alpha, L0, L1)
        if lambda0 is None:
            lambda0 = default_lambda0(gamma0, eta0, ledger)
        params["lambda0"] = lambda0
        lam_pow = lambda0 ** (-ledger.p)
        theta = 1.0 / (4.0 + alpha)
        g_pow, b_pow = G**alpha, B**alpha
        sqrt_eta0 = math.sqrt(eta0)
        L_a, c_a = ledger.L_alpha, ledger.c_alpha
        terms = {
            "init": 4.0 * delta / gamma0 * t**-theta,
            "momentum": 8.0 / eta0 * t**-theta,
            "lambda_drift": 8.0 * c_a * L_a * gamma0 * lam_pow / sqrt_eta0 * t**-theta,
            "drift_noise_mix": 8.0 * L_a * b_pow * gamma0 ** (1.0 + alpha) / sqrt_eta0 * t**-theta,
            "drift_noise": 8.0 * sqrt_eta0 * B * gamma0 * t**-theta,
            "smoothness_mix": 8.0 * ledger.K0 * gamma0 / sqrt_eta0 * t ** (-(1.0 + alpha) * theta),
            "noise_floor_mix": 8.0 * L_a * g_pow * gamma0 / sqrt_eta0 * t ** (-(1.0 + alpha) * theta),
            "noise_floor": 8.0 * sqrt_eta0 * G * t ** (-2.0 * theta),
            "steep_tail_mix": 8.0 * ledger.K2 * gamma0 ** (1.0 / (1.0 - alpha)) / sqrt_eta0
            * t ** (-(1.0 + 3.0 * alpha) / ((1.0 - alpha) * (4.0 + alpha))),
            "smoothness_tail": 2.0 * ledger.K0 * gamma0 * t ** (-(3.0 + alpha) * theta),
            "lambda_tail": 2.0 * c_a * L_a * gamma0 * lam_pow * t ** (-3.0 * theta),
            "steep_tail": 4.0 * ledger.K2 * gamma0 ** (1.0 / (1.0 - alpha))
            * t ** (-(3.0 + alpha) / ((1.0 - alpha) * (4.0 + alpha))),
            "noise_floor_tail": 2.0 * L_a * g_pow * gamma0 * t ** (-(3.0 + alpha) * theta),
            "drift_tail": 2.0 * L_a * b_pow * gamma0 ** (1.0 + alpha) * t ** (-3.0 * theta),
        }
        schedule = nstorm_schedule("expected_sym_alpha", alpha, T, gamma0, eta0=eta0, G=G)
        violations = tuple(validate_conditions(schedule, ledger, lambda0=lambda0))
    else:  # expected_sym_one
        L0 = _require_positive("L0", L0)
        L1 = _require_positive("L1", L1)
        if b0 is None:
            raise ValueError("expected_sym_one bound requires b0 (initial estimator error bound)")
        b0 = _require_nonnegative("b0", b0)
        c1 = math.sqrt(2.0 * math.exp(0.75))
        terms = {
            "init_and_drift": (4.0 * delta / gamma0 + 8.0 * b0 + 8.0 * B * gamma0
                               + 16.0 * c1 * L1 * B * gamma0**2) * t ** (-1.0 / 5.0),
            "smoothness_and_noise": (8.0 * c1 * gamma0 * (L0 + 2.0 * L1 * G) + 8.0 * G)
            * t ** (-2.0 / 5.0),
            "drift_mid": 8.0 * math.sqrt(2.0) * L1 * B * gamma0**2 * t ** (-3.0 / 5.0),
            "stepsize_tail": (4.0 * math.sqrt(2.0) * L0 * gamma0
                              + 8.0 * math.sqrt(2.0) * L1 * G * gamma0) * t ** (-4.0 / 5.0),
        }
        schedule = nstorm_schedule("expected_sym_one", None, T, gamma0)
        violations = tuple(validate_conditions(schedule, (L0, L1)))

    value = float(sum(terms.values()))
    return BoundEvaluation(
        method="nstorm", regime=regime, params=params, value=value,
        term_breakdown=terms, condition_violations=violations,
    )


# ---------------------------------------------------------------------------
# curve aggregation and comparison
# ---------------------------------------------------------------------------


def aggregate_traces(
    traces,
    series: str = "grad_norm",
    label: str | None = None,
    grid: Array | None = None,
) -> AggregatedCurve:
    """Reduce a seed batch of traces to mean/std on a shared SFO grid.

    The grid defaults to the union of the traces' own recorded budgets; pass
    ``grid`` to align several methods onto one axis.  Each trace contributes
    its series stepped forward in SFO (last value carried forward between its
    recorded budgets) and NaN outside its own coverage, so aborted seeds drop
    out of the statistics instead of freezing.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace to aggregate")
    if grid is None:
        grid = np.unique(np.concatenate([t.sfo_cum for t in traces]))
    else:
        grid = np.asarray(grid)
    rows = np.full((len(traces), grid.size), np.nan)
    for i, trace in enumerate(traces):
        vals = getattr(trace, series)
        if vals is None:
            raise ValueError(f"trace {trace.method_tag!r} has no series {series!r}")
        vals = np.asarray(vals, dtype=np.float64)
        idx = np.searchsorted(trace.sfo_cum, grid, side="right") - 1
        ok = (idx >= 0) & (grid <= trace.sfo_cum[-1])
        rows[i, ok] = vals[idx[ok]]
    valid = ~np.isnan(rows)
    n_seeds = valid.sum(axis=0)
    filled = np.where(valid, rows, 0.0)
    mean = np.where(n_seeds > 0, filled.sum(axis=0) / np.maximum(n_seeds, 1), np.nan)
    spread = np.where(valid, rows - mean, 0.0)
    ss = (spread**2).sum(axis=0)
    std = np.where(n_seeds >= 2, np.sqrt(ss / np.maximum(n_seeds - 1, 1)), 0.0)
    return AggregatedCurve(
        label=label if label is not None else traces[0].method_tag,
        series=series,
        sfo=grid.astype(np.int64),
        mean=mean,
        std=std,
        n_seeds=n_seeds.astype(np.int64),
    )


def _curve_at(curve: AggregatedCurve, at_sfo: int) -> tuple[int, float, float]:
    covered = (curve.sfo <= at_sfo) & np.isfinite(curve.mean)
    if not covered.any():
        raise ValueError(
            f"curve {curve.label!r} starts at SFO {int(curve.sfo[0])}, "
            f"beyond the requested budget {at_sfo}"
        )
    idx = int(np.flatnonzero(covered)[-1])
    return int(curve.sfo[idx]), float(curve.mean[idx]), float(curve.std[idx])


def compare_runs(a: AggregatedCurve, b: AggregatedCurve, at_sfo: int) -> ComparisonReport:
    """Compare two aggregated curves at the nearest recorded budget <= at_sfo."""
    sfo_a, mean_a, std_a = _curve_at(a, at_sfo)
    sfo_b, mean_b, std_b = _curve_at(b, at_sfo)
    pooled = math.sqrt(0.5 * (std_a**2 + std_b**2))
    if mean_a < mean_b:
        lower = "a"
    elif mean_b < mean_a:
        lower = "b"
    else:
        lower = None
    return ComparisonReport(
        at_sfo=int(at_sfo),
        label_a=a.label,
        label_b=b.label,
        sfo_a=sfo_a,
        sfo_b=sfo_b,
        mean_a=mean_a,
        std_a=std_a,
        mean_b=mean_b,
        std_b=std_b,
        pooled_std=pooled,
        lower=lower,
        separated=abs(mean_a - mean_b) > pooled,
    )
