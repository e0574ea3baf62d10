"""Deterministic test objectives with analytic gradients and smoothness metadata.

Each objective is a plain ``f: R^d -> R`` together with its exact gradient.
These are the clean functions that the noise oracle later wraps; nothing in
this module is stochastic except the one-time seeded construction of the
phase-retrieval instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Array = np.ndarray

__all__ = [
    "Array",
    "SmoothnessMeta",
    "Objective",
    "make_phase_retrieval",
    "make_power_poly",
    "make_quadratic",
]

#: Recognised smoothness classes. ``standard`` means a plain gradient-Lipschitz
#: bound with constant L0; the ``sym_alpha`` classes let the local constant grow
#: like L0 + L1 * ||grad||^alpha along segments; ``mss`` / ``expected_sym_alpha``
#: are the mean-square sample-level analogues.
CLASS_TAGS = ("standard", "sym_alpha", "mss", "expected_sym_alpha")


@dataclass(frozen=True)
class SmoothnessMeta:
    """Smoothness class of an objective.

    ``L0`` / ``L1`` are ``None`` when no numerical constant is certified for
    the instance; consumers that need them must take them as explicit inputs.
    """

    alpha: float
    L0: float | None
    L1: float | None
    class_tag: str

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.class_tag not in CLASS_TAGS:
            raise ValueError(f"unknown class_tag {self.class_tag!r}")
        if self.class_tag == "standard" and self.L1 not in (None, 0.0):
            raise ValueError("standard smoothness admits no gradient-dependent term")


@dataclass(frozen=True)
class Objective:
    """A deterministic objective with its analytic gradient.

    ``value_and_grad`` returns ``(eval(x), grad(x))`` sharing intermediate
    work; ``min_value`` is the known infimum when one is certified (all three
    built-in objectives attain 0), else ``None``. ``data`` exposes the frozen
    construction arrays of seeded instances so determinism can be checked
    bitwise.
    """

    dimension: int
    eval: Callable[[Array], float]
    grad: Callable[[Array], Array]
    meta: SmoothnessMeta | None = None
    value_and_grad: Callable[[Array], tuple[float, Array]] | None = None
    min_value: float | None = None
    name: str = "objective"
    data: dict[str, Array] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")


def make_phase_retrieval(d: int, m: int, meas_std: float, signal_seed: int) -> Objective:
    """Noiseless quartic phase-retrieval least squares.

    f(x) = (1/2m) * sum_r (y_r - (a_r^T x)^2)^2 with sensing rows a_r drawn
    i.i.d. N(0, meas_std^2), a standard-Gaussian planted signal, and targets
    y_r = (a_r^T x*)^2.  The residuals vanish at the planted signal, so
    f(x*) = 0 and f >= 0 everywhere.
    """
    if d < 1 or m < 1:
        raise ValueError("phase retrieval needs d >= 1 and m >= 1")
    if meas_std <= 0.0:
        raise ValueError("meas_std must be positive")

    rng = np.random.default_rng(signal_seed)
    A = rng.normal(0.0, meas_std, size=(m, d))
    x_star = rng.standard_normal(d)
    y = (A @ x_star) ** 2

    def value_and_grad(x: Array) -> tuple[float, Array]:
        z = A @ x
        resid = z * z - y
        value = 0.5 * float(resid @ resid) / m
        g = (2.0 / m) * (A.T @ (resid * z))
        return value, g

    def eval_(x: Array) -> float:
        z = A @ x
        resid = z * z - y
        return 0.5 * float(resid @ resid) / m

    def grad(x: Array) -> Array:
        z = A @ x
        return (2.0 / m) * (A.T @ ((z * z - y) * z))

    meta = SmoothnessMeta(alpha=2.0 / 3.0, L0=None, L1=None, class_tag="sym_alpha")
    return Objective(
        dimension=d,
        eval=eval_,
        grad=grad,
        meta=meta,
        value_and_grad=value_and_grad,
        min_value=0.0,
        name="phase_retrieval",
        data={"A": A, "x_star": x_star, "y": y},
    )


def make_power_poly(alpha: float) -> Objective:
    """One-dimensional power objective f(x) = |x|^p with p = (2-alpha)/(1-alpha).

    The exponent is chosen so that the local curvature grows like the gradient
    norm to the power ``alpha``: alpha=1/2 gives the cubic |x|^3, alpha=2/3 the
    quartic |x|^4.  The gradient at exactly 0 is defined as 0 (p > 2 keeps it
    continuous there).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")

    p = (2.0 - alpha) / (1.0 - alpha)

    def eval_(x: Array) -> float:
        return float(np.abs(x[0]) ** p)

    def grad(x: Array) -> Array:
        t = x[0]
        if t == 0.0:
            return np.zeros(1)
        return np.array([p * np.abs(t) ** (p - 1.0) * np.sign(t)])

    def value_and_grad(x: Array) -> tuple[float, Array]:
        return eval_(x), grad(x)

    meta = SmoothnessMeta(alpha=alpha, L0=None, L1=None, class_tag="sym_alpha")
    return Objective(
        dimension=1,
        eval=eval_,
        grad=grad,
        meta=meta,
        value_and_grad=value_and_grad,
        min_value=0.0,
        name="power_poly",
    )


def make_quadratic(dimension: int, curvature: float) -> Objective:
    """Isotropic quadratic f(x) = (curvature/2) * ||x||^2 — the smooth sanity case."""
    if dimension < 1:
        raise ValueError("dimension must be a positive integer")
    if curvature <= 0.0:
        raise ValueError("curvature must be positive")

    c = float(curvature)

    def eval_(x: Array) -> float:
        return 0.5 * c * float(x @ x)

    def grad(x: Array) -> Array:
        return c * x

    def value_and_grad(x: Array) -> tuple[float, Array]:
        return 0.5 * c * float(x @ x), c * x

    meta = SmoothnessMeta(alpha=1.0, L0=c, L1=0.0, class_tag="standard")
    return Objective(
        dimension=dimension,
        eval=eval_,
        grad=grad,
        meta=meta,
        value_and_grad=value_and_grad,
        min_value=0.0,
        name="quadratic",
    )
