"""Configuration-driven experiment runner with export and seed management.

An experiment is: one objective, one noise wrapper (B, G), a list of method
specifications, a horizon, and a seed list.  ``run_experiment`` executes
every (method, seed) run, grid-searches baseline learning rates with common
random numbers, and aligns all completed runs onto one shared cumulative-SFO
grid so downstream comparisons never extrapolate.

Randomness policy: the run for method index m and seed index s draws from
``SeedSequence([root_seed, m, s])``, and the start point for seed index s
from ``SeedSequence([root_seed, INIT_STREAM_TAG, s])`` (shared by all
methods), so results are reproducible regardless of execution order or
worker-pool width.

Exports: a flat CSV (one row per recorded state, 17-significant-digit
floats) and a JSON document carrying the resolved schedules, grid-search
records, abort reports, and aggregated curves.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from configparser import ConfigParser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import AggregatedCurve, aggregate_traces
from .objectives import Objective, make_phase_retrieval, make_power_poly, make_quadratic
from .optimizers import (
    BatchPolicy,
    Trace,
    run_normalized_gd,
    run_nsgdm,
    run_nstorm,
    run_sgd,
    run_storm_dynamic,
)
from .oracle import wrap
from .schedules import nsgdm_schedule, nstorm_schedule

__all__ = [
    "MethodSpec",
    "ExperimentConfig",
    "MethodResult",
    "ExperimentResult",
    "parse_config",
    "run_experiment",
    "export",
    "CSV_HEADER",
]

CSV_HEADER = "method,seed,iter,sfo,grad_norm,drift_sq,batch_size,loss"

#: Tag separating the start-point stream from per-method run streams.
INIT_STREAM_TAG = 0xA11CE

METHOD_KINDS = ("nsgdm", "nstorm", "normalized_gd", "sgd", "storm_dynamic")
OBJECTIVES = ("phase_retrieval", "power_poly", "quadratic")

#: Default per-objective start-point distributions (mean, std of i.i.d. entries).
DEFAULT_INIT = {
    "phase_retrieval": (5.0, 1.0),
    "power_poly": (5.0, 0.1),
    "quadratic": (1.0, 0.0),
}


@dataclass(frozen=True)
class MethodSpec:
    """One method entry of an experiment.

    Normalized methods (``nsgdm``, ``nstorm``, ``normalized_gd``) take their
    step sizes from the theorem schedules via ``gamma0``/``eta0``; baselines
    (``sgd``, ``storm_dynamic``) take a fixed ``lr`` or an ``lr_grid`` to
    search, plus a batch policy.
    """

    kind: str
    tag: str
    regime: str | None = None
    gamma0: float | None = None
    eta0: float = 1.0
    alpha: float | None = None
    lr: float | None = None
    lr_grid: tuple[float, ...] | None = None
    eta: float = 0.1
    batch: str = "fixed"
    batch_size: int = 1
    sigma_sq: float = 1.0
    cap: int = 100_000

    def __post_init__(self) -> None:
        if self.kind not in METHOD_KINDS:
            raise ValueError(f"unknown method kind {self.kind!r}; expected one of {METHOD_KINDS}")
        if self.kind in ("nsgdm", "nstorm", "normalized_gd"):
            if self.gamma0 is None or not self.gamma0 > 0.0:
                raise ValueError(f"method {self.tag!r} needs gamma0 > 0")
        else:
            has_lr = self.lr is not None
            has_grid = self.lr_grid is not None and len(self.lr_grid) > 0
            if has_lr == has_grid:
                raise ValueError(f"method {self.tag!r} needs exactly one of lr / lr_grid")
            if has_lr and not self.lr > 0.0:
                raise ValueError(f"method {self.tag!r} needs lr > 0")
            if has_grid and any(not v > 0.0 for v in self.lr_grid):
                raise ValueError(f"method {self.tag!r} grid entries must be positive")

    def batch_policy(self) -> BatchPolicy:
        if self.batch == "dynamic":
            return BatchPolicy.dynamic(sigma_sq=self.sigma_sq, cap=self.cap)
        return BatchPolicy.fixed(self.batch_size)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "tag": self.tag, "regime": self.regime,
            "gamma0": self.gamma0, "eta0": self.eta0, "alpha": self.alpha,
            "lr": self.lr, "lr_grid": list(self.lr_grid) if self.lr_grid else None,
            "eta": self.eta, "batch": self.batch, "batch_size": self.batch_size,
            "sigma_sq": self.sigma_sq, "cap": self.cap,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment end to end."""

    name: str
    objective: str
    dimension: int
    B: float
    G: float
    T: int
    methods: tuple[MethodSpec, ...]
    seeds: tuple[int, ...] = (0, 1, 2)
    root_seed: int = 0
    signal_seed: int = 7
    measurements: int = 3000
    meas_std: float = 0.1
    curvature: float = 1.0
    alpha: float = 0.5
    init_mean: float | None = None
    init_std: float | None = None
    out_dir: str = "results"
    formats: tuple[str, ...] = ("csv", "json")
    n_workers: int = 1

    def __post_init__(self) -> None:
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVES}")
        if not self.methods:
            raise ValueError("config needs at least one method")
        if not self.seeds:
            raise ValueError("config needs at least one seed")
        if self.T < 2:
            raise ValueError("config needs horizon T >= 2")
        if self.B < 0.0 or self.G < 0.0:
            raise ValueError("noise coefficients B and G must be nonnegative")
        tags = [m.tag for m in self.methods]
        if len(set(tags)) != len(tags):
            raise ValueError(f"method tags must be unique, got {tags}")
        bad = [f for f in self.formats if f not in ("csv", "json")]
        if bad:
            raise ValueError(f"unknown export formats {bad}; expected csv/json")

    def init_distribution(self) -> tuple[float, float]:
        mean, std = DEFAULT_INIT[self.objective]
        if self.init_mean is not None:
            mean = self.init_mean
        if self.init_std is not None:
            std = self.init_std
        return mean, std

    def to_dict(self) -> dict:
        mean, std = self.init_distribution()
        return {
            "name": self.name, "objective": self.objective, "dimension": self.dimension,
            "B": self.B, "G": self.G, "T": self.T, "seeds": list(self.seeds),
            "root_seed": self.root_seed, "signal_seed": self.signal_seed,
            "measurements": self.measurements, "meas_std": self.meas_std,
            "curvature": self.curvature, "alpha": self.alpha,
            "init_mean": mean, "init_std": std,
            "out_dir": self.out_dir, "formats": list(self.formats),
            "n_workers": self.n_workers,
            "methods": [m.to_dict() for m in self.methods],
        }


@dataclass
class MethodResult:
    """All runs of one method: winner traces, abort reports, aligned curves."""

    spec: MethodSpec
    schedule_meta: dict | None
    traces: list[Trace]
    aborted: list[dict]
    grid_search: dict | None
    curves: dict[str, AggregatedCurve] = field(default_factory=dict)

    @property
    def completed(self) -> list[Trace]:
        return [t for t in self.traces if not t.aborted]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    methods: list[MethodResult]
    shared_grid: np.ndarray

    def method(self, tag: str) -> MethodResult:
        for m in self.methods:
            if m.spec.tag == tag:
                return m
        raise KeyError(f"no method tagged {tag!r} in this result")


# ---------------------------------------------------------------------------
# objective and run construction
# ---------------------------------------------------------------------------


def build_objective(config: ExperimentConfig) -> Objective:
    if config.objective == "phase_retrieval":
        return make_phase_retrieval(config.dimension, config.measurements,
                                    config.meas_std, config.signal_seed)
    if config.objective == "power_poly":
        if config.dimension != 1:
            raise ValueError("power_poly is one-dimensional")
        return make_power_poly(config.alpha)
    return make_quadratic(config.dimension, config.curvature)


def _start_points(config: ExperimentConfig) -> list[np.ndarray]:
    mean, std = config.init_distribution()
    points = []
    for s in range(len(config.seeds)):
        rng = np.random.default_rng(np.random.SeedSequence([config.root_seed, INIT_STREAM_TAG, s]))
        points.append(mean + std * rng.standard_normal(config.dimension))
    return points


def _run_rng(config: ExperimentConfig, method_index: int, seed_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([config.root_seed, method_index, seed_index])
    )


def _resolve_schedule(spec: MethodSpec, config: ExperimentConfig):
    if spec.kind == "nsgdm":
        return nsgdm_schedule(spec.regime or "bg0", config.T, spec.gamma0)
    if spec.kind == "nstorm":
        regime = spec.regime or "expected_sym_alpha"
        alpha = spec.alpha if spec.alpha is not None else config.alpha
        return nstorm_schedule(regime, alpha, config.T, spec.gamma0,
                               eta0=spec.eta0, G=config.G)
    if spec.kind == "normalized_gd":
        return nsgdm_schedule("deterministic", config.T, spec.gamma0)
    return None


def _run_one(spec: MethodSpec, schedule, objective: Objective,
             config: ExperimentConfig, x0: np.ndarray, rng: np.random.Generator,
             seed: int, lr: float | None = None) -> Trace:
    """Execute a single (method, seed[, lr]) run on a fresh oracle."""
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.kind == "normalized_gd":
            return run_normalized_gd(objective, schedule.gamma, config.T, x0,
                                     seed=seed, method_tag=spec.tag)
        oracle = wrap(objective, config.B, config.G, x0)
        if spec.kind == "nsgdm":
            return run_nsgdm(oracle, schedule, x0, rng, seed=seed, method_tag=spec.tag)
        if spec.kind == "nstorm":
            return run_nstorm(oracle, schedule, x0, rng, seed=seed, method_tag=spec.tag)
        if spec.kind == "sgd":
            return run_sgd(oracle, lr, spec.batch_policy(), config.T, x0, rng,
                           seed=seed, method_tag=spec.tag)
        return run_storm_dynamic(oracle, lr, spec.eta, spec.batch_policy(),
                                 config.T, x0, rng, seed=seed, method_tag=spec.tag)


def _run_method_seed(spec: MethodSpec, schedule, objective, config,
                     method_index: int, seed_index: int, x0) -> dict[float | None, Trace]:
    """One (method, seed) job: all learning-rate candidates on the same stream."""
    seed = config.seeds[seed_index]
    if spec.kind in ("nsgdm", "nstorm", "normalized_gd"):
        rng = _run_rng(config, method_index, seed_index)
        return {None: _run_one(spec, schedule, objective, config, x0, rng, seed)}
    grid = spec.lr_grid if spec.lr_grid is not None else (spec.lr,)
    out = {}
    for lr in grid:
        rng = _run_rng(config, method_index, seed_index)  # common random numbers
        out[lr] = _run_one(spec, schedule, objective, config, x0, rng, seed, lr=lr)
    return out


def _select_lr(spec: MethodSpec, runs_per_seed: list[dict]) -> tuple[float | None, dict | None]:
    """Pick the grid entry with the best mean final gradient norm.

    Aborted runs score infinity; ties go to the smaller learning rate (the
    grid is scanned in ascending order).  Falls back to the smallest rate
    when every candidate aborts somewhere.
    """
    if spec.kind in ("nsgdm", "nstorm", "normalized_gd"):
        return None, None
    if spec.lr_grid is None:
        return spec.lr, None
    grid = sorted(spec.lr_grid)
    scores = {}
    for lr in grid:
        finals = [seed_runs[lr].final_grad_norm() if not seed_runs[lr].aborted else math.inf
                  for seed_runs in runs_per_seed]
        scores[lr] = float(np.mean(finals))
    finite = [lr for lr in grid if math.isfinite(scores[lr])]
    chosen = min(finite, key=lambda lr: scores[lr]) if finite else grid[0]
    record = {
        "grid": list(grid),
        "scores": {repr(lr): (scores[lr] if math.isfinite(scores[lr]) else "aborted")
                   for lr in grid},
        "chosen": chosen,
        "rule": "min mean final grad_norm over seeds; aborted runs score inf; "
                "ties and all-aborted fall back to the smallest rate",
    }
    return chosen, record


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every (method, seed) pair and aggregate onto the shared SFO grid.

    Baselines run once per grid learning rate with common random numbers and
    keep the winner's traces.  A method whose every seed aborts still appears
    in the result (with empty curves) — the aborts are data, not errors.
    """
    objective = build_objective(config)
    x0s = _start_points(config)
    schedules = {m.tag: _resolve_schedule(m, config) for m in config.methods}

    jobs = [(mi, si) for mi in range(len(config.methods)) for si in range(len(config.seeds))]

    def work(job):
        mi, si = job
        spec = config.methods[mi]
        return job, _run_method_seed(spec, schedules[spec.tag], objective, config,
                                     mi, si, x0s[si])

    results: dict[tuple[int, int], dict] = {}
    if config.n_workers > 1:
        with ThreadPoolExecutor(max_workers=config.n_workers) as pool:
            for job, runs in pool.map(work, jobs):
                results[job] = runs
    else:
        for job in jobs:
            job, runs = work(job)
            results[job] = runs

    method_results: list[MethodResult] = []
    for mi, spec in enumerate(config.methods):
        per_seed = [results[(mi, si)] for si in range(len(config.seeds))]
        chosen_lr, grid_record = _select_lr(spec, per_seed)
        traces = [seed_runs[chosen_lr] for seed_runs in per_seed]
        aborted = [
            {"seed": t.seed, "reason": t.events.get("abort_reason"),
             "state": t.events.get("abort_state")}
            for t in traces if t.aborted
        ]
        schedule = schedules[spec.tag]
        method_results.append(MethodResult(
            spec=spec,
            schedule_meta=schedule.to_metadata() if schedule is not None else None,
            traces=traces,
            aborted=aborted,
            grid_search=grid_record,
        ))

    completed_all = [t for m in method_results for t in m.completed]
    if completed_all:
        shared_grid = np.unique(np.concatenate([t.sfo_cum for t in completed_all]))
    else:
        shared_grid = np.array([], dtype=np.int64)
    for m in method_results:
        if m.completed and shared_grid.size:
            m.curves = {
                series: aggregate_traces(m.completed, series=series, label=m.spec.tag,
                                         grid=shared_grid)
                for series in ("grad_norm", "drift_sq", "batch_size")
            }
    return ExperimentResult(config=config, methods=method_results, shared_grid=shared_grid)


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------


def _parse_lr_grid(text: str) -> tuple[float, ...]:
    """'logspace:lo:hi:n' for a log10 grid, else whitespace-separated rates."""
    text = text.strip()
    if text.startswith("logspace:"):
        _, lo, hi, n = text.split(":")
        return tuple(float(v) for v in np.logspace(float(lo), float(hi), int(n)))
    return tuple(float(v) for v in text.split())


def parse_config(path) -> ExperimentConfig:
    """Read one experiment from an INI file.

    The ``[experiment]`` section carries the objective, noise, horizon, and
    bookkeeping keys; each ``[method:TAG]`` section contributes one method
    whose keys mirror :class:`MethodSpec`.
    """
    parser = ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found or unreadable")
    if "experiment" not in parser:
        raise ValueError("config needs an [experiment] section")
    exp = parser["experiment"]

    methods = []
    for section in parser.sections():
        if not section.startswith("method:"):
            continue
        tag = section.split(":", 1)[1]
        m = parser[section]
        methods.append(MethodSpec(
            kind=m.get("kind", tag),
            tag=tag,
            regime=m.get("regime", fallback=None),
            gamma0=m.getfloat("gamma0", fallback=None),
            eta0=m.getfloat("eta0", fallback=1.0),
            alpha=m.getfloat("alpha", fallback=None),
            lr=m.getfloat("lr", fallback=None),
            lr_grid=_parse_lr_grid(m["lr_grid"]) if "lr_grid" in m else None,
            eta=m.getfloat("eta", fallback=0.1),
            batch=m.get("batch", fallback="fixed"),
            batch_size=m.getint("batch_size", fallback=1),
            sigma_sq=m.getfloat("sigma_sq", fallback=1.0),
            cap=m.getint("cap", fallback=100_000),
        ))

    return ExperimentConfig(
        name=exp.get("name", Path(str(path)).stem),
        objective=exp.get("objective"),
        dimension=exp.getint("dimension", fallback=1),
        B=exp.getfloat("B"),
        G=exp.getfloat("G"),
        T=exp.getint("T"),
        methods=tuple(methods),
        seeds=tuple(int(s) for s in exp.get("seeds", "0 1 2").split()),
        root_seed=exp.getint("root_seed", fallback=0),
        signal_seed=exp.getint("signal_seed", fallback=7),
        measurements=exp.getint("measurements", fallback=3000),
        meas_std=exp.getfloat("meas_std", fallback=0.1),
        curvature=exp.getfloat("curvature", fallback=1.0),
        alpha=exp.getfloat("alpha", fallback=0.5),
        init_mean=exp.getfloat("init_mean", fallback=None),
        init_std=exp.getfloat("init_std", fallback=None),
        out_dir=exp.get("out_dir", "results"),
        formats=tuple(exp.get("formats", "csv json").split()),
        n_workers=exp.getint("n_workers", fallback=1),
    )


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def _f17(x: float) -> str:
    return "%.17g" % x


def _csv_text(result: ExperimentResult) -> str:
    lines = [CSV_HEADER]
    for m in result.methods:
        for trace in m.traces:
            for k in range(trace.n_states):
                lines.append(",".join((
                    m.spec.tag,
                    str(trace.seed),
                    str(k),
                    str(int(trace.sfo_cum[k])),
                    _f17(float(trace.grad_norm[k])),
                    _f17(float(trace.drift_sq[k])),
                    str(int(trace.batch_size[k])),
                    _f17(float(trace.loss[k])),
                )))
    return "\n".join(lines) + "\n"


def _curve_dict(curve: AggregatedCurve) -> dict:
    return {
        "sfo": curve.sfo.tolist(),
        "mean": [None if not math.isfinite(v) else v for v in curve.mean.tolist()],
        "std": curve.std.tolist(),
        "n_seeds": curve.n_seeds.tolist(),
    }


def _json_doc(result: ExperimentResult) -> dict:
    return {
        "config": result.config.to_dict(),
        "shared_sfo_grid": result.shared_grid.tolist(),
        "methods": [
            {
                "tag": m.spec.tag,
                "spec": m.spec.to_dict(),
                "schedule": m.schedule_meta,
                "grid_search": m.grid_search,
                "aborted": m.aborted,
                "traces": [
                    {
                        "seed": t.seed,
                        "n_states": t.n_states,
                        "total_sfo": int(t.sfo_cum[-1]),
                        "final_grad_norm": t.final_grad_norm(),
                        "events": {k: v for k, v in t.events.items()},
                    }
                    for t in m.traces
                ],
                "curves": {name: _curve_dict(c) for name, c in m.curves.items()},
            }
            for m in result.methods
        ],
    }


def export(result: ExperimentResult, fmt: str, out_dir=None) -> Path:
    """Write one export file; the text is fully built before the file is opened.

    CSV: one row per recorded state, schema ``method,seed,iter,sfo,
    grad_norm,drift_sq,batch_size,loss``, floats at 17 significant digits.
    JSON: config, schedules, grid-search records, abort reports, and the
    aggregated curves.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown export format {fmt!r}; expected csv or json")
    if not result.methods or not any(m.traces for m in result.methods):
        raise ValueError("nothing to export: result contains no traces")
    out = Path(out_dir) if out_dir is not None else Path(result.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        text = _csv_text(result)
        path = out / f"{result.config.name}.csv"
    else:
        text = json.dumps(_json_doc(result), indent=2, allow_nan=False)
        path = out / f"{result.config.name}.json"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path
