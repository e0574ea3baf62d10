"""Normalized stochastic methods, baselines, and run traces.

Two normalized single-sample methods (momentum and recursive variance
reduction), their deterministic limit, and the step-based baselines they are
compared against (SGD and unnormalized STORM, optionally with dynamic
batching).  Every runner produces a :class:`Trace` recording the true
gradient norm, drift from the start point, batch sizes, and the cumulative
SFO charge at each recorded state.

Conventions shared by all runners:

* A horizon-T run records states x^0 .. x^{K} with K = T - 1; x^{K+1} is
  never formed.  Each state carries the oracle cost of the estimate computed
  there, so the single-sample methods charge K+1 (momentum) and
  N_init + 2K (variance reduction) in total — the estimator update is cut
  off after the last recorded state ("transition-cutoff", flagged in the
  trace events).
* Step-based baselines draw a batch only when a step is taken; their final
  state repeats the previous cumulative SFO and reports the batch the policy
  *would* prescribe there.
* A NaN/Inf iterate, loss, or gradient aborts the run: the offending state
  is not recorded, the trace ends at the last healthy state, and the abort
  is described in ``trace.events``.  Aborts are data, not exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .objectives import Array, Objective
from .oracle import Bg0Oracle
from .schedules import Schedule

__all__ = [
    "Trace",
    "BatchPolicy",
    "UniformOutput",
    "run_nsgdm",
    "run_nstorm",
    "run_normalized_gd",
    "run_sgd",
    "run_storm_dynamic",
    "uniform_output",
]

#: Norms below this are treated as exactly zero when normalizing a direction
#: (the zero-direction convention); triggering it is recorded as an event.
ZERO_DIRECTION_THRESHOLD = 1e-300

#: How iterates are thinned: full history for dimension <= this bound, else
#: the first/last iterates plus every 100th (scalar series are never thinned).
FULL_ITERATE_DIM = 16


@dataclass
class Trace:
    """Recorded history of one run.

    All scalar sequences share one length (the number of recorded states).
    ``iterates[i]`` is the iterate at step ``iterate_steps[i]``; for
    dimensions above ``FULL_ITERATE_DIM`` only a thinned subset is kept.
    ``grad_norm`` is the norm of the *true* gradient of the base objective,
    ``drift_sq`` the squared distance from the start point, ``step_norm[k]``
    the length of the step into state k (0 at k = 0), and ``estimator_err``
    (when the method maintains an estimator v) the norm of v - grad f.
    """

    method_tag: str
    seed: int | None
    schedule: Schedule
    iterates: list[Array]
    iterate_steps: list[int]
    grad_norm: Array
    drift_sq: Array
    step_norm: Array
    loss: Array
    batch_size: Array
    sfo_cum: Array
    estimator_err: Array | None = None
    events: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.grad_norm)
        for name in ("drift_sq", "step_norm", "loss", "batch_size", "sfo_cum"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"trace series {name} has length != {n}")
        if self.estimator_err is not None and len(self.estimator_err) != n:
            raise ValueError(f"trace series estimator_err has length != {n}")
        if len(self.iterates) != len(self.iterate_steps):
            raise ValueError("iterates and iterate_steps must pair up")
        if n == 0:
            raise ValueError("a trace must record at least the initial state")

    @property
    def n_states(self) -> int:
        return len(self.grad_norm)

    @property
    def aborted(self) -> bool:
        return bool(self.events.get("aborted", False))

    def final_grad_norm(self) -> float:
        return float(self.grad_norm[-1])


@dataclass(frozen=True)
class BatchPolicy:
    """Mini-batch sizing rule for the step-based baselines.

    ``fixed`` always uses ``fixed_size``; ``dynamic`` scales the batch with
    the local variance bound, b = min(cap, max(1, ceil((B^2 ||x - x0||^2 +
    G^2) / sigma_sq))), evaluated at the current iterate.
    """

    kind: str
    fixed_size: int | None = None
    sigma_sq: float | None = None
    cap: int = 100_000

    def __post_init__(self) -> None:
        if self.kind == "fixed":
            if self.fixed_size is None or self.fixed_size < 1:
                raise ValueError("fixed policy needs fixed_size >= 1")
        elif self.kind == "dynamic":
            if self.sigma_sq is None or not self.sigma_sq > 0.0:
                raise ValueError("dynamic policy needs sigma_sq > 0")
            if self.cap < 1:
                raise ValueError("cap must be at least 1")
        else:
            raise ValueError(f"unknown batch policy kind {self.kind!r}")

    @classmethod
    def fixed(cls, size: int) -> "BatchPolicy":
        return cls(kind="fixed", fixed_size=size)

    @classmethod
    def dynamic(cls, sigma_sq: float, cap: int = 100_000) -> "BatchPolicy":
        return cls(kind="dynamic", sigma_sq=sigma_sq, cap=cap)

    def size_at(self, oracle: Bg0Oracle, x: Array) -> int:
        if self.kind == "fixed":
            return int(self.fixed_size)
        return min(self.cap, max(1, math.ceil(oracle.variance_at(x) / self.sigma_sq)))


@dataclass(frozen=True)
class UniformOutput:
    """Uniformly drawn report state: its index, gradient norm, and the trace mean."""

    index: int
    grad_norm: float
    trace_mean: float


# ---------------------------------------------------------------------------
# recording machinery
# ---------------------------------------------------------------------------


class _Recorder:
    """Accumulates per-state series and applies the iterate-thinning rule."""

    def __init__(self, dimension: int) -> None:
        self.full = dimension <= FULL_ITERATE_DIM
        self.iterates: list[Array] = []
        self.iterate_steps: list[int] = []
        self.grad_norm: list[float] = []
        self.drift_sq: list[float] = []
        self.step_norm: list[float] = []
        self.loss: list[float] = []
        self.batch_size: list[int] = []
        self.sfo_cum: list[int] = []
        self.estimator_err: list[float] = []
        self._last: tuple[int, Array] | None = None

    def record(
        self,
        k: int,
        x: Array,
        loss: float,
        grad_norm: float,
        drift_sq: float,
        step_norm: float,
        batch: int,
        sfo: int,
        estimator_err: float | None = None,
    ) -> None:
        if self.full or k % 100 == 0:
            self.iterates.append(x.copy())
            self.iterate_steps.append(k)
            self._last = None
        else:
            self._last = (k, x.copy())
        self.grad_norm.append(grad_norm)
        self.drift_sq.append(drift_sq)
        self.step_norm.append(step_norm)
        self.loss.append(loss)
        self.batch_size.append(batch)
        self.sfo_cum.append(sfo)
        if estimator_err is not None:
            self.estimator_err.append(estimator_err)

    def build(self, method_tag: str, seed: int | None, schedule: Schedule, events: dict) -> Trace:
        if self._last is not None:  # keep the final iterate even when thinned away
            self.iterate_steps.append(self._last[0])
            self.iterates.append(self._last[1])
        has_est = len(self.estimator_err) == len(self.grad_norm) and self.grad_norm
        return Trace(
            method_tag=method_tag,
            seed=seed,
            schedule=schedule,
            iterates=self.iterates,
            iterate_steps=self.iterate_steps,
            grad_norm=np.asarray(self.grad_norm, dtype=np.float64),
            drift_sq=np.asarray(self.drift_sq, dtype=np.float64),
            step_norm=np.asarray(self.step_norm, dtype=np.float64),
            loss=np.asarray(self.loss, dtype=np.float64),
            batch_size=np.asarray(self.batch_size, dtype=np.int64),
            sfo_cum=np.asarray(self.sfo_cum, dtype=np.int64),
            estimator_err=np.asarray(self.estimator_err, dtype=np.float64) if has_est else None,
            events=events,
        )


def _value_and_grad(objective: Objective, x: Array) -> tuple[float, Array]:
    if objective.value_and_grad is not None:
        return objective.value_and_grad(x)
    return objective.eval(x), objective.grad(x)


def _normalized_direction(v: Array) -> tuple[Array, bool]:
    norm = float(np.linalg.norm(v))
    if norm < ZERO_DIRECTION_THRESHOLD:
        return np.zeros_like(v), True
    return v / norm, False


def _state_is_finite(x: Array, loss: float, grad: Array) -> bool:
    return bool(np.isfinite(x).all() and math.isfinite(loss) and np.isfinite(grad).all())


def _base_events() -> dict:
    return {
        "aborted": False,
        "abort_reason": None,
        "abort_state": None,
        "zero_direction_steps": 0,
        "batch_cap_hits": 0,
        "sfo_convention": "transition-cutoff",
    }


def _check_start(oracle: Bg0Oracle, x0: Array) -> Array:
    x0 = np.asarray(x0, dtype=np.float64)
    if not np.array_equal(oracle.x0, x0):
        raise ValueError("run start point must equal the oracle reference point x0")
    return x0.copy()


# ---------------------------------------------------------------------------
# normalized single-sample methods
# ---------------------------------------------------------------------------


def run_nsgdm(
    oracle: Bg0Oracle,
    schedule: Schedule,
    x0: Array,
    rng: np.random.Generator,
    seed: int | None = None,
    method_tag: str = "nsgdm",
) -> Trace:
    """Normalized SGD with momentum: one fresh sample per recorded state.

    x^{k+1} = x^k - gamma * v^k / ||v^k||   (zero direction when v^k = 0)
    v^{k+1} = (1 - eta) v^k + eta * g(x^{k+1}; xi^{k+1})
    """
    if schedule.method != "nsgdm":
        raise ValueError(f"schedule is for {schedule.method!r}, not nsgdm")
    x = _check_start(oracle, x0)
    gamma, eta, T = schedule.gamma, schedule.eta, schedule.T

    rec = _Recorder(oracle.base.dimension)
    events = _base_events()
    sfo_start = oracle.sfo_counter

    loss, g = _value_and_grad(oracle.base, x)
    if not _state_is_finite(x, loss, g):
        raise ValueError("objective is not finite at the start point")
    v = oracle.stoch_grad(x, oracle.draw_sample(rng), base_grad=g)
    rec.record(
        0, x, loss, float(np.linalg.norm(g)), 0.0, 0.0, 1, oracle.sfo_counter - sfo_start,
        estimator_err=float(np.linalg.norm(v - g)),
    )

    for k in range(1, T):
        direction, was_zero = _normalized_direction(v)
        if was_zero:
            events["zero_direction_steps"] += 1
        x_new = x - gamma * direction
        loss, g = _value_and_grad(oracle.base, x_new)
        if not _state_is_finite(x_new, loss, g):
            events.update(aborted=True, abort_reason="non-finite iterate or objective", abort_state=k)
            break
        v = (1.0 - eta) * v + eta * oracle.stoch_grad(x_new, oracle.draw_sample(rng), base_grad=g)
        diff = x_new - oracle.x0
        rec.record(
            k, x_new, loss, float(np.linalg.norm(g)), float(diff @ diff),
            float(np.linalg.norm(x_new - x)), 1, oracle.sfo_counter - sfo_start,
            estimator_err=float(np.linalg.norm(v - g)),
        )
        x = x_new
    return rec.build(method_tag, seed, schedule, events)


def run_nstorm(
    oracle: Bg0Oracle,
    schedule: Schedule,
    x0: Array,
    rng: np.random.Generator,
    seed: int | None = None,
    method_tag: str = "nstorm",
) -> Trace:
    """Normalized recursive variance reduction with sharp initialization.

    v^0 averages n_init independent stochastic gradients at x^0; each
    transition evaluates one fresh sample at both endpoints (2 SFO):

    v^{k+1} = g(x^{k+1}; xi) + (1 - eta)(v^k - g(x^k; xi))
    """
    if schedule.method != "nstorm":
        raise ValueError(f"schedule is for {schedule.method!r}, not nstorm")
    x = _check_start(oracle, x0)
    gamma, eta, T = schedule.gamma, schedule.eta, schedule.T

    rec = _Recorder(oracle.base.dimension)
    events = _base_events()
    sfo_start = oracle.sfo_counter

    loss, g = _value_and_grad(oracle.base, x)
    if not _state_is_finite(x, loss, g):
        raise ValueError("objective is not finite at the start point")
    v = oracle.stoch_grad_batch(x, schedule.n_init, rng, base_grad=g)
    rec.record(
        0, x, loss, float(np.linalg.norm(g)), 0.0, 0.0, 1, oracle.sfo_counter - sfo_start,
        estimator_err=float(np.linalg.norm(v - g)),
    )

    g_prev = g
    for k in range(1, T):
        direction, was_zero = _normalized_direction(v)
        if was_zero:
            events["zero_direction_steps"] += 1
        x_new = x - gamma * direction
        loss, g_new = _value_and_grad(oracle.base, x_new)
        if not _state_is_finite(x_new, loss, g_new):
            events.update(aborted=True, abort_reason="non-finite iterate or objective", abort_state=k)
            break
        sample = oracle.draw_sample(rng)
        g_old_s, g_new_s = oracle.paired_stoch_grads(
            x, x_new, sample, base_grad_x=g_prev, base_grad_y=g_new
        )
        v = g_new_s + (1.0 - eta) * (v - g_old_s)
        diff = x_new - oracle.x0
        rec.record(
            k, x_new, loss, float(np.linalg.norm(g_new)), float(diff @ diff),
            float(np.linalg.norm(x_new - x)), 1, oracle.sfo_counter - sfo_start,
            estimator_err=float(np.linalg.norm(v - g_new)),
        )
        x, g_prev = x_new, g_new
    return rec.build(method_tag, seed, schedule, events)


def run_normalized_gd(
    objective: Objective,
    gamma: float,
    T: int,
    x0: Array,
    seed: int | None = None,
    method_tag: str = "normalized_gd",
) -> Trace:
    """Deterministic normalized gradient descent; SFO counts exact gradient evaluations."""
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    if T < 1:
        raise ValueError("horizon T must be a positive integer")
    x = np.asarray(x0, dtype=np.float64).copy()
    start = x.copy()
    schedule = Schedule(
        method="normalized_gd", regime="deterministic", T=T, gamma=gamma, eta=1.0,
        knobs={"gamma0": None, "eta0": None, "lambda0": None, "alpha": None, "G": None},
    )

    rec = _Recorder(objective.dimension)
    events = _base_events()

    loss, g = _value_and_grad(objective, x)
    if not _state_is_finite(x, loss, g):
        raise ValueError("objective is not finite at the start point")
    rec.record(0, x, loss, float(np.linalg.norm(g)), 0.0, 0.0, 1, 1)

    for k in range(1, T):
        direction, was_zero = _normalized_direction(g)
        if was_zero:
            events["zero_direction_steps"] += 1
        x_new = x - gamma * direction
        loss, g = _value_and_grad(objective, x_new)
        if not _state_is_finite(x_new, loss, g):
            events.update(aborted=True, abort_reason="non-finite iterate or objective", abort_state=k)
            break
        diff = x_new - start
        rec.record(
            k, x_new, loss, float(np.linalg.norm(g)), float(diff @ diff),
            float(np.linalg.norm(x_new - x)), 1, k + 1,
        )
        x = x_new
    return rec.build(method_tag, seed, schedule, events)


# ---------------------------------------------------------------------------
# step-based baselines
# ---------------------------------------------------------------------------


def run_sgd(
    oracle: Bg0Oracle,
    lr: float,
    policy: BatchPolicy,
    T: int,
    x0: Array,
    rng: np.random.Generator,
    seed: int | None = None,
    method_tag: str = "sgd",
) -> Trace:
    """Plain SGD with a fixed or dynamic mini-batch: x^{k+1} = x^k - lr * g_b(x^k)."""
    if not lr > 0.0:
        raise ValueError("lr must be positive")
    if T < 1:
        raise ValueError("horizon T must be a positive integer")
    x = _check_start(oracle, x0)

    rec = _Recorder(oracle.base.dimension)
    events = _base_events()
    schedule = Schedule(
        method="sgd", regime=policy.kind, T=T, gamma=lr, eta=1.0,
        knobs={"gamma0": None, "eta0": None, "lambda0": None, "alpha": None, "G": None},
    )

    sfo_start = oracle.sfo_counter
    prev = x
    for k in range(T):
        loss, g = _value_and_grad(oracle.base, x)
        if not _state_is_finite(x, loss, g):
            if k == 0:
                raise ValueError("objective is not finite at the start point")
            events.update(aborted=True, abort_reason="non-finite iterate or objective", abort_state=k)
            break
        batch = policy.size_at(oracle, x)
        if policy.kind == "dynamic" and batch == policy.cap:
            events["batch_cap_hits"] += 1
        stepping = k < T - 1
        if stepping:
            g_b = oracle.stoch_grad_batch(x, batch, rng, base_grad=g)
        diff = x - oracle.x0
        rec.record(
            k, x, loss, float(np.linalg.norm(g)), float(diff @ diff),
            float(np.linalg.norm(x - prev)) if k else 0.0, batch, oracle.sfo_counter - sfo_start,
        )
        if stepping:
            prev = x
            x = x - lr * g_b
    return rec.build(method_tag, seed, schedule, events)


def run_storm_dynamic(
    oracle: Bg0Oracle,
    lr: float,
    eta: float,
    policy: BatchPolicy,
    T: int,
    x0: Array,
    rng: np.random.Generator,
    seed: int | None = None,
    method_tag: str = "storm_dynamic",
) -> Trace:
    """Unnormalized recursive estimator with batched paired transitions.

    The estimator recursion matches the normalized method, but steps are
    x^{k+1} = x^k - lr * v^k and every transition reuses one mini-batch at
    both endpoints (2b SFO), with b from the batch policy at the new point.
    """
    if not lr > 0.0:
        raise ValueError("lr must be positive")
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    if T < 1:
        raise ValueError("horizon T must be a positive integer")
    x = _check_start(oracle, x0)

    rec = _Recorder(oracle.base.dimension)
    events = _base_events()
    schedule = Schedule(
        method="storm_dynamic", regime=policy.kind, T=T, gamma=lr, eta=eta,
        knobs={"gamma0": None, "eta0": None, "lambda0": None, "alpha": None, "G": None},
    )

    sfo_start = oracle.sfo_counter
    loss, g = _value_and_grad(oracle.base, x)
    if not _state_is_finite(x, loss, g):
        raise ValueError("objective is not finite at the start point")
    batch = policy.size_at(oracle, x)
    if policy.kind == "dynamic" and batch == policy.cap:
        events["batch_cap_hits"] += 1
    v = oracle.stoch_grad_batch(x, batch, rng, base_grad=g)
    rec.record(
        0, x, loss, float(np.linalg.norm(g)), 0.0, 0.0, batch, oracle.sfo_counter - sfo_start,
        estimator_err=float(np.linalg.norm(v - g)),
    )

    g_prev = g
    for k in range(1, T):
        x_new = x - lr * v
        loss, g_new = _value_and_grad(oracle.base, x_new)
        if not _state_is_finite(x_new, loss, g_new):
            events.update(aborted=True, abort_reason="non-finite iterate or objective", abort_state=k)
            break
        batch = policy.size_at(oracle, x_new)
        if policy.kind == "dynamic" and batch == policy.cap:
            events["batch_cap_hits"] += 1
        g_old_s, g_new_s = oracle.paired_stoch_grads_batch(
            x, x_new, batch, rng, base_grad_x=g_prev, base_grad_y=g_new
        )
        v = g_new_s + (1.0 - eta) * (v - g_old_s)
        diff = x_new - oracle.x0
        rec.record(
            k, x_new, loss, float(np.linalg.norm(g_new)), float(diff @ diff),
            float(np.linalg.norm(x_new - x)), batch, oracle.sfo_counter - sfo_start,
            estimator_err=float(np.linalg.norm(v - g_new)),
        )
        x, g_prev = x_new, g_new
    return rec.build(method_tag, seed, schedule, events)


def uniform_output(trace: Trace, rng: np.random.Generator) -> UniformOutput:
    """Report state drawn uniformly from the recorded trajectory.

    The trace mean of the gradient norms equals the conditional expectation
    of the reported gradient norm given the trajectory, which is what the
    uniform-output convergence statements control.
    """
    n = trace.n_states
    index = int(rng.integers(0, n))
    return UniformOutput(
        index=index,
        grad_norm=float(trace.grad_norm[index]),
        trace_mean=float(trace.grad_norm.mean()),
    )
