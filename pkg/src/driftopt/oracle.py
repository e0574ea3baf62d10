"""Stochastic first-order oracle with distance-dependent gradient noise.

Wraps a deterministic objective into an unbiased stochastic oracle whose
gradient variance is *exactly*

    E ||g(x) - grad f(x)||^2  =  B^2 ||x - x0||^2 + G^2,

the classical Blum-Gladyshev growth condition: noise scales with the squared
distance ("drift") from the reference point x0, with a baseline floor G^2.
B = 0 recovers bounded variance; B = G = 0 is deterministic.

The construction perturbs the loss with a random quadratic and a random
linear term,

    f_xi(x) = f(x) + (B rho / 2) ||x - x0||^2 + G <u, x - x0>,

with rho uniform on {-1, +1} and u ~ N(0, I_d / d), so the variance identity
above holds exactly rather than as an upper bound.  The oracle also owns the
cumulative SFO counter, so every method is charged by one ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .objectives import Array, Objective

__all__ = ["OracleSample", "Bg0Oracle", "wrap"]


@dataclass(frozen=True)
class OracleSample:
    """One noise draw xi = (rho, u): a sign flip and a Gaussian direction.

    rho is exactly +-1; u has i.i.d. N(0, 1/d) entries so that E||u||^2 = 1.
    """

    rho: float
    u: Array


@dataclass
class Bg0Oracle:
    """Stochastic gradient oracle over a fixed base objective.

    Mutable only through ``sfo_counter``, which counts stochastic gradient
    evaluations: 1 per single-sample call, b per size-b batch, 2 (or 2b) per
    paired evaluation.  Loss evaluations are free.  One oracle instance
    serves exactly one run; distinct runs over the same base objective use
    distinct instances.
    """

    base: Objective
    B: float
    G: float
    x0: Array
    sfo_counter: int = 0

    # -- sampling ---------------------------------------------------------

    def draw_sample(self, rng: np.random.Generator) -> OracleSample:
        """Draw xi = (rho, u); does not touch the SFO counter."""
        d = self.base.dimension
        rho = float(2 * rng.integers(0, 2) - 1)
        u = rng.standard_normal(d) / math.sqrt(d)
        return OracleSample(rho=rho, u=u)

    def _draw_batch_average(self, batch: int, rng: np.random.Generator) -> tuple[float, Array]:
        """Exact law of the average of ``batch`` independent (rho, u) pairs.

        The noise is linear in (rho, u), so the batch average is determined
        by the mean sign rho_bar = (2*Binomial(batch, 1/2) - batch)/batch and
        the mean direction u_bar ~ N(0, I_d/(d*batch)).  Drawing these
        directly keeps a size-10^5 batch at O(d) cost.
        """
        d = self.base.dimension
        rho_bar = float(2 * rng.binomial(batch, 0.5) - batch) / batch
        u_bar = rng.standard_normal(d) / math.sqrt(d * batch)
        return rho_bar, u_bar

    # -- evaluations ------------------------------------------------------

    def stoch_grad(self, x: Array, sample: OracleSample, base_grad: Array | None = None) -> Array:
        """grad f(x) + B rho (x - x0) + G u; charges 1 SFO.

        ``base_grad`` may carry a precomputed grad f(x) so callers that
        already hold the true gradient (e.g. for trace recording) do not pay
        for it twice; the charge is identical either way.
        """
        self._check_dim(x)
        g = self.base.grad(x) if base_grad is None else base_grad
        self.sfo_counter += 1
        return g + (self.B * sample.rho) * (x - self.x0) + self.G * sample.u

    def stoch_grad_batch(
        self,
        x: Array,
        batch: int,
        rng: np.random.Generator,
        base_grad: Array | None = None,
    ) -> Array:
        """Average of ``batch`` independent stochastic gradients; charges ``batch`` SFO."""
        self._check_dim(x)
        if batch < 1:
            raise ValueError("batch must be a positive integer")
        g = self.base.grad(x) if base_grad is None else base_grad
        rho_bar, u_bar = self._draw_batch_average(batch, rng)
        self.sfo_counter += batch
        return g + (self.B * rho_bar) * (x - self.x0) + self.G * u_bar

    def paired_stoch_grads(
        self,
        x: Array,
        y: Array,
        sample: OracleSample,
        base_grad_x: Array | None = None,
        base_grad_y: Array | None = None,
    ) -> tuple[Array, Array]:
        """Evaluate the same sample xi at two points; charges 2 SFO.

        Sharing (rho, u) across the pair is what makes recursive estimators
        contract: the G u term cancels in the difference and the B rho term
        reduces to B rho (y - x).
        """
        self._check_dim(x)
        self._check_dim(y)
        gx = self.base.grad(x) if base_grad_x is None else base_grad_x
        gy = self.base.grad(y) if base_grad_y is None else base_grad_y
        corr = self.B * sample.rho
        noise_x = corr * (x - self.x0) + self.G * sample.u
        noise_y = corr * (y - self.x0) + self.G * sample.u
        self.sfo_counter += 2
        return gx + noise_x, gy + noise_y

    def paired_stoch_grads_batch(
        self,
        x: Array,
        y: Array,
        batch: int,
        rng: np.random.Generator,
        base_grad_x: Array | None = None,
        base_grad_y: Array | None = None,
    ) -> tuple[Array, Array]:
        """Paired evaluation reusing one mini-batch at both points; charges 2*batch SFO."""
        self._check_dim(x)
        self._check_dim(y)
        if batch < 1:
            raise ValueError("batch must be a positive integer")
        gx = self.base.grad(x) if base_grad_x is None else base_grad_x
        gy = self.base.grad(y) if base_grad_y is None else base_grad_y
        rho_bar, u_bar = self._draw_batch_average(batch, rng)
        corr = self.B * rho_bar
        self.sfo_counter += 2 * batch
        return (
            gx + corr * (x - self.x0) + self.G * u_bar,
            gy + corr * (y - self.x0) + self.G * u_bar,
        )

    def stoch_loss(self, x: Array, sample: OracleSample) -> float:
        """f(x) + (B rho / 2)||x - x0||^2 + G <u, x - x0>; free of SFO charge."""
        self._check_dim(x)
        diff = x - self.x0
        return (
            self.base.eval(x)
            + 0.5 * self.B * sample.rho * float(diff @ diff)
            + self.G * float(sample.u @ diff)
        )

    # -- helpers ----------------------------------------------------------

    def variance_at(self, x: Array) -> float:
        """The exact single-sample gradient variance B^2 ||x - x0||^2 + G^2."""
        diff = x - self.x0
        return self.B**2 * float(diff @ diff) + self.G**2

    def _check_dim(self, x: Array) -> None:
        if x.shape != (self.base.dimension,):
            raise ValueError(
                f"point of shape {x.shape} does not match oracle dimension {self.base.dimension}"
            )


def wrap(base: Objective, B: float, G: float, x0: Array) -> Bg0Oracle:
    """Build the exact-variance oracle around ``base`` anchored at ``x0``."""
    if B < 0.0 or G < 0.0:
        raise ValueError("noise coefficients B and G must be nonnegative")
    x0 = np.array(x0, dtype=np.float64)
    if x0.shape != (base.dimension,):
        raise ValueError(
            f"x0 of shape {x0.shape} does not match objective dimension {base.dimension}"
        )
    return Bg0Oracle(base=base, B=float(B), G=float(G), x0=x0)
