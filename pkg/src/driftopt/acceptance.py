"""Acceptance checklist: ten numbered criteria covering the whole library.

Each criterion is a function returning ``(passed, detail)``; ``run_criterion``
wraps it into a :class:`CriterionResult` (an exception counts as a failure,
never as a skip), and ``run_all`` executes the whole list.  ``verify_suites``
is the fast subset used by the ``verify`` CLI command.

The expensive experiments (steep-polynomial rate sweep, phase retrieval
reproduction, quadratic bound comparison) are cached at module level, so
criteria that inspect every acceptance run — the trajectory-bound check in
particular — reuse the same traces instead of recomputing them.  Criteria
with a stated wall-clock budget fail when the attributed time (cached
experiment time plus the check's own analysis) exceeds it.
"""

from __future__ import annotations

import contextlib
import functools
import io
import math
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .analysis import compare_runs, fit_rate_slope, theorem_bound_nsgdm, theorem_bound_nstorm
from .harness import ExperimentConfig, MethodSpec, parse_config, run_experiment
from .objectives import make_power_poly, make_quadratic
from .optimizers import run_normalized_gd, run_nsgdm, run_nstorm, uniform_output
from .oracle import wrap
from .schedules import nsgdm_schedule, nstorm_schedule

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "verify_suites"]

_NORMALIZED_KINDS = ("nsgdm", "nstorm", "normalized_gd")

#: Canonical experiment definitions; the files under configs/ carry the same
#: values for command-line use, and the test suite keeps the two in sync.
CUBIC_CFG_TEXT = """\
[experiment]
name = cubic
objective = power_poly
dimension = 1
alpha = 0.5
B = 1.0
G = 0.5
T = 10001
seeds = 0 1 2
root_seed = 0
init_mean = 5.0
init_std = 0.1
out_dir = results/cubic
formats = csv json
n_workers = 1

[method:nsgdm]
kind = nsgdm
regime = bg0
gamma0 = 1.0

[method:nstorm]
kind = nstorm
regime = expected_sym_alpha
gamma0 = 1.0
eta0 = 1.0
"""

PHASE_RETRIEVAL_CFG_TEXT = """\
[experiment]
name = phase_retrieval
objective = phase_retrieval
dimension = 100
measurements = 3000
meas_std = 0.1
signal_seed = 7
B = 1.0
G = 1.0
T = 10001
seeds = 0 1 2
root_seed = 0
init_mean = 5.0
init_std = 1.0
out_dir = results/phase_retrieval
formats = csv json
n_workers = 1

[method:nsgdm]
kind = nsgdm
regime = bg0
gamma0 = 10.0

[method:nstorm]
kind = nstorm
regime = expected_sym_alpha
gamma0 = 7.5
eta0 = 1.0
alpha = 0.6666666666666666

[method:sgd_b1]
kind = sgd
lr_grid = logspace:-4:0:13
batch = fixed
batch_size = 1

[method:sgd_dynamic]
kind = sgd
lr_grid = logspace:-4:0:13
batch = dynamic
sigma_sq = 1.0
cap = 100000

[method:storm_dynamic]
kind = storm_dynamic
lr_grid = logspace:-4:0:13
eta = 0.1
batch = dynamic
sigma_sq = 1.0
cap = 100000
"""


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str


def config_from_text(text: str) -> ExperimentConfig:
    """Parse an embedded config; keeps acceptance independent of the cwd."""
    fd, path = tempfile.mkstemp(suffix=".cfg", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        return parse_config(path)
    finally:
        os.unlink(path)


def _find_config(filename: str) -> Path | None:
    here = Path(__file__).resolve()
    for base in (Path.cwd(), here.parents[2] if len(here.parents) > 2 else here.parent):
        candidate = base / "configs" / filename
        if candidate.is_file():
            return candidate
    return None


# ---------------------------------------------------------------------------
# cached acceptance runs
# ---------------------------------------------------------------------------

CUBIC_HORIZONS = (1000, 3162, 10000)


@functools.lru_cache(maxsize=None)
def _cubic_experiment(T: int):
    config = ExperimentConfig(
        name=f"cubic_rate_T{T}",
        objective="power_poly",
        dimension=1,
        alpha=0.5,
        B=1.0,
        G=0.5,
        T=T,
        methods=(
            MethodSpec(kind="nsgdm", tag="nsgdm", regime="bg0", gamma0=1.0),
            MethodSpec(kind="nstorm", tag="nstorm", regime="expected_sym_alpha",
                       gamma0=2.5, eta0=1.0),
        ),
        seeds=(0, 1, 2),
        init_mean=5.0,
        init_std=0.1,
    )
    start = time.perf_counter()
    result = run_experiment(config)
    return result, time.perf_counter() - start


@functools.lru_cache(maxsize=None)
def _phase_experiment():
    config = config_from_text(PHASE_RETRIEVAL_CFG_TEXT)
    start = time.perf_counter()
    result = run_experiment(config)
    return result, time.perf_counter() - start


@functools.lru_cache(maxsize=None)
def _bound_experiment():
    config = ExperimentConfig(
        name="quadratic_bound",
        objective="quadratic",
        dimension=20,
        curvature=1.0,
        B=1.0,
        G=1.0,
        T=10000,
        methods=(
            MethodSpec(kind="nsgdm", tag="nsgdm", regime="bg0", gamma0=1.0),
            MethodSpec(kind="nstorm", tag="nstorm", regime="mss", gamma0=1.0),
        ),
        seeds=(0, 1, 2),
        init_mean=0.5,
        init_std=0.0,
    )
    start = time.perf_counter()
    result = run_experiment(config)
    return result, time.perf_counter() - start


@functools.lru_cache(maxsize=None)
def _recovery_runs():
    start = time.perf_counter()
    runs = {}
    for label, objective, x0 in (
        ("steep", make_power_poly(0.5), np.array([5.0])),
        ("quadratic", make_quadratic(4, 1.0), np.full(4, 2.5)),
    ):
        entries = []
        for T in (100, 1000, 10000):
            gamma = float(T) ** -0.5
            entries.append((T, run_normalized_gd(objective, gamma, T, x0,
                                                 method_tag=f"ngd_{label}")))
        runs[label] = entries
    return runs, time.perf_counter() - start


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def check_oracle_variance():
    """Sampled gradient variance matches B^2 ||x-x0||^2 + G^2 at five radii."""
    start = time.perf_counter()
    d, n = 100, 100_000
    objective = make_quadratic(d, 1.0)
    x0 = np.zeros(d)
    oracle = wrap(objective, 1.0, 1.0, x0)
    rng = np.random.default_rng(20240501)
    worst = 0.0
    for r in (0.0, 1.0, 2.0, 5.0, 10.0):
        x = x0.copy()
        x[0] += r
        base = objective.grad(x)
        mean = np.zeros(d)
        sumsq = 0.0
        for _ in range(n):
            g = oracle.stoch_grad(x, oracle.draw_sample(rng), base_grad=base)
            mean += g
            sumsq += float(g @ g)
        mean /= n
        sample_var = (sumsq - n * float(mean @ mean)) / (n - 1)
        exact = r * r + 1.0
        worst = max(worst, abs(sample_var - exact) / exact)
    elapsed = time.perf_counter() - start
    passed = worst < 0.03 and elapsed < 30.0
    return passed, (f"max relative error of sampled variance {worst:.2%} "
                    f"(limit 3%) over radii 0,1,2,5,10; {elapsed:.1f}s (limit 30s)")


def _normalized_run_inventory():
    """Every normalized-method trace the acceptance suite produces."""
    items = []

    def harvest(result):
        for m in result.methods:
            if m.spec.kind in _NORMALIZED_KINDS:
                items.extend((t, m.schedule_meta["gamma"]) for t in m.traces)

    for T in CUBIC_HORIZONS:
        harvest(_cubic_experiment(T)[0])
    harvest(_bound_experiment()[0])
    harvest(_phase_experiment()[0])
    runs, _ = _recovery_runs()
    for entries in runs.values():
        for _, trace in entries:
            items.append((trace, trace.schedule.gamma))
    return items


def check_trajectory_bounds():
    """Step <= gamma and drift <= k * gamma on every acceptance run."""
    step_bad = drift_bad = 0
    n_runs = n_states = 0
    for trace, gamma in _normalized_run_inventory():
        n_runs += 1
        n_states += trace.n_states
        step_bad += int(np.sum(trace.step_norm[1:] > gamma + 1e-12))
        k = np.arange(trace.n_states)
        drift_bad += int(np.sum(np.sqrt(trace.drift_sq) > k * gamma + 1e-9))
    passed = step_bad == 0 and drift_bad == 0
    return passed, (f"{step_bad} step and {drift_bad} drift violations across "
                    f"{n_runs} runs / {n_states} states")


def check_schedule_arithmetic():
    """Resolved schedules reproduce the reference values at T = 10001."""
    start = time.perf_counter()
    phase_momentum = nsgdm_schedule("bg0", 10001, 10.0)
    cubic_momentum = nsgdm_schedule("bg0", 10001, 1.0)
    phase_estimator = nstorm_schedule("expected_sym_alpha", 2.0 / 3.0, 10001, 7.5,
                                      eta0=1.0, G=1.0)
    cubic_estimator = nstorm_schedule("expected_sym_alpha", 0.5, 10001, 1.0,
                                      eta0=1.0, G=0.5)
    # stated values are rounded; accept anything within half a unit in the
    # last printed place
    cases = (
        ("phase nsgdm gamma", phase_momentum.gamma, 4.641e-3, 5e-7),
        ("phase nsgdm eta", phase_momentum.eta, 2.154e-3, 5e-7),
        ("cubic nsgdm gamma", cubic_momentum.gamma, 4.641e-4, 5e-8),
        ("phase nstorm gamma", phase_estimator.gamma, 5.397e-3, 5e-7),
        ("phase nstorm eta", phase_estimator.eta, 3.73e-4, 5e-7),
        ("phase nstorm n_init", phase_estimator.n_init, 4, 0.0),
        ("cubic nstorm gamma", cubic_estimator.gamma, 7.742e-4, 5e-8),
        ("cubic nstorm eta", cubic_estimator.eta, 2.782e-4, 5e-8),
        ("cubic nstorm n_init", cubic_estimator.n_init, 2, 0.0),
    )
    bad = [label for label, got, want, tol in cases
           if (got != want if tol == 0.0 else abs(got - want) > tol)]
    elapsed = time.perf_counter() - start
    passed = not bad and elapsed < 1.0
    detail = "all 9 reference values matched" if not bad else f"mismatched: {bad}"
    return passed, f"{detail}; {elapsed:.2f}s (limit 1s)"


def check_sfo_accounting():
    """Exact oracle-call totals: T for momentum, N_init + 2K for the estimator."""
    objective = make_quadratic(2, 1.0)
    x0 = np.ones(2)
    bad = []
    for T in (1, 2, 7, 30):
        oracle = wrap(objective, 1.0, 1.0, x0)
        trace = run_nsgdm(oracle, nsgdm_schedule("bg0", T, 1.0), x0,
                          np.random.default_rng(3))
        if int(trace.sfo_cum[0]) != 1 or int(trace.sfo_cum[-1]) != T:
            bad.append(f"nsgdm T={T}")
        for schedule in (
            nstorm_schedule("mss", None, T, 1.0, G=2.0),
            nstorm_schedule("expected_sym_alpha", 0.5, T, 1.0, G=3.0),
        ):
            oracle = wrap(objective, 1.0, 1.0, x0)
            trace = run_nstorm(oracle, schedule, x0, np.random.default_rng(3))
            expected = schedule.n_init + 2 * (T - 1)
            if int(trace.sfo_cum[0]) != schedule.n_init or int(trace.sfo_cum[-1]) != expected:
                bad.append(f"nstorm {schedule.regime} T={T}")
    passed = not bad
    detail = ("totals exact for T in {1, 2, 7, 30} and three schedules"
              if passed else f"wrong totals: {bad}")
    return passed, detail


def _random_unit(rng, d: int):
    v = rng.standard_normal(d)
    norm = np.linalg.norm(v)
    while norm == 0.0:
        v = rng.standard_normal(d)
        norm = np.linalg.norm(v)
    return v / norm


def check_core_properties():
    """Direction-error and weighted-mean inequalities plus output uniformity."""
    start = time.perf_counter()
    rng = np.random.default_rng(97)
    n = 10_000

    # <a, (a+e)/||a+e||> >= ||a|| - 2||e||, the estimator-error price of
    # following a normalized inexact direction
    dir_bad = 0
    for _ in range(n):
        d = int(rng.integers(1, 21))
        a = 10.0 ** rng.uniform(-8.0, 2.0) * _random_unit(rng, d)
        e = 10.0 ** rng.uniform(-8.0, 2.0) * _random_unit(rng, d)
        s = a + e
        norm = float(np.linalg.norm(s))
        if norm == 0.0:
            continue
        lhs = float(a @ s) / norm
        if lhs < np.linalg.norm(a) - 2.0 * np.linalg.norm(e) - 1e-12:
            dir_bad += 1

    # x^a <= a*rho*x + (1-a)*rho^(-a/(1-a)) for x >= 0, rho > 0, a in (0,1)
    xs = np.concatenate([[0.0], 10.0 ** rng.uniform(-6.0, 3.0, size=n - 1)])
    rho = 10.0 ** rng.uniform(-2.0, 2.0, size=n)
    alpha = rng.uniform(0.05, 0.95, size=n)
    lhs = xs**alpha
    rhs = alpha * rho * xs + (1.0 - alpha) * rho ** (-alpha / (1.0 - alpha))
    young_bad = int(np.sum(lhs > rhs + 1e-12))

    # the reported iterate is uniform over the trajectory
    objective = make_quadratic(3, 1.0)
    x0 = np.ones(3)
    oracle = wrap(objective, 1.0, 1.0, x0)
    trace = run_nsgdm(oracle, nsgdm_schedule("bg0", 40, 1.0), x0,
                      np.random.default_rng(11))
    draws = 100_000
    counts = np.bincount(
        [uniform_output(trace, rng).index for _ in range(draws)],
        minlength=trace.n_states,
    )
    p_value = float(stats.chisquare(counts).pvalue)

    elapsed = time.perf_counter() - start
    passed = dir_bad == 0 and young_bad == 0 and p_value > 0.01 and elapsed < 10.0
    return passed, (f"{dir_bad}/{n} direction and {young_bad}/{n} weighted-mean "
                    f"violations; uniformity p={p_value:.3f} (need >0.01); "
                    f"{elapsed:.1f}s (limit 10s)")


def check_deterministic_recovery():
    """Noise-free normalized descent shows the T^(-1/2) rate on both objectives."""
    runs, experiment_time = _recovery_runs()
    start = time.perf_counter()
    notes = []
    ok = True
    for label, entries in runs.items():
        points = [(T, float(np.mean(trace.grad_norm))) for T, trace in entries]
        fit = fit_rate_slope(points)
        ok = ok and -0.6 <= fit.slope <= -0.4
        notes.append(f"{label} slope {fit.slope:.3f}")
    elapsed = experiment_time + (time.perf_counter() - start)
    passed = ok and elapsed < 60.0
    return passed, f"{'; '.join(notes)} (need [-0.6, -0.4]); {elapsed:.1f}s (limit 60s)"


def check_rate_ordering():
    """Steep objective: momentum shows its slow rate, estimator beats it."""
    experiment_time = 0.0
    points = []
    for T in CUBIC_HORIZONS:
        result, elapsed = _cubic_experiment(T)
        experiment_time += elapsed
        m = result.method("nsgdm")
        points.append((T, float(np.mean([np.mean(t.grad_norm) for t in m.completed]))))
    start = time.perf_counter()
    fit = fit_rate_slope(points)
    slope_ok = -0.35 <= fit.slope <= -0.05
    result, _ = _cubic_experiment(10000)
    budget = min(
        max(int(t.sfo_cum[-1]) for t in result.method(tag).completed)
        for tag in ("nsgdm", "nstorm")
    )
    report = compare_runs(result.method("nsgdm").curves["grad_norm"],
                          result.method("nstorm").curves["grad_norm"], budget)
    order_ok = report.lower == "b" and report.separated
    elapsed = experiment_time + (time.perf_counter() - start)
    passed = slope_ok and order_ok and elapsed < 600.0
    gap = (report.mean_a - report.mean_b) / report.pooled_std if report.pooled_std else math.inf
    return passed, (f"nsgdm slope {fit.slope:.3f} (need [-0.35, -0.05]); at SFO "
                    f"{budget} nstorm {report.mean_b:.4g} vs nsgdm {report.mean_a:.4g} "
                    f"({gap:.1f} pooled stds, need >1); {elapsed:.0f}s (limit 600s)")


def check_phase_retrieval():
    """Full benchmark: method ordering, batch growth, unit batches."""
    result, experiment_time = _phase_experiment()
    start = time.perf_counter()
    # endpoint of each curve: both methods take the same number of steps,
    # the estimator just pays twice per step on the SFO axis
    final_momentum = float(np.mean(
        [t.final_grad_norm() for t in result.method("nsgdm").completed]
    ))
    final_estimator = float(np.mean(
        [t.final_grad_norm() for t in result.method("nstorm").completed]
    ))
    order_ok = final_estimator < final_momentum

    batch_ok = True
    notes = []
    for tag in ("sgd_dynamic", "storm_dynamic"):
        m = result.method(tag)
        if not m.completed:
            batch_ok = False
            notes.append(f"{tag}: no completed seeds")
            continue
        peak = max(int(t.batch_size.max()) for t in m.completed)
        span = min(t.n_states for t in m.completed)
        mean_batch = np.mean(
            np.stack([t.batch_size[:span] for t in m.completed]), axis=0
        )
        growth = float(mean_batch.max() / mean_batch.min())
        batch_ok = batch_ok and peak >= 100 and growth >= 10.0
        notes.append(f"{tag} peak batch {peak}, growth {growth:.0f}x")

    unit_ok = all(
        bool(np.all(t.batch_size == 1))
        for tag in ("nsgdm", "nstorm")
        for t in result.method(tag).traces
    )
    elapsed = experiment_time + (time.perf_counter() - start)
    passed = order_ok and batch_ok and unit_ok and elapsed < 1800.0
    return passed, (f"final grad norm nstorm {final_estimator:.4g} vs nsgdm "
                    f"{final_momentum:.4g}; {'; '.join(notes)}; normalized batches "
                    f"{'all 1' if unit_ok else 'NOT all 1'}; "
                    f"{elapsed:.0f}s (limit 1800s)")


def check_run_versus_bound():
    """Observed trajectory means stay below the theorem values."""
    result, experiment_time = _bound_experiment()
    start = time.perf_counter()
    delta = 0.5 * float(np.full(20, 0.5) @ np.full(20, 0.5))
    evaluations = {
        "nsgdm": theorem_bound_nsgdm("smooth", delta, 1.0, T=10000,
                                     L0=1.0, B=1.0, G=1.0),
        "nstorm": theorem_bound_nstorm("mss", delta, 1.0, T=10000,
                                       L=math.sqrt(2.0), B=1.0, G=1.0),
    }
    ok = True
    notes = []
    for tag, evaluation in evaluations.items():
        means = np.array([float(np.mean(t.grad_norm))
                          for t in result.method(tag).completed])
        avg = float(means.mean())
        stderr = float(means.std(ddof=1) / math.sqrt(means.size))
        ok = ok and avg <= evaluation.value + 3.0 * stderr
        notes.append(f"{tag} mean {avg:.3g} <= bound {evaluation.value:.3g}")
    elapsed = experiment_time + (time.perf_counter() - start)
    passed = ok and elapsed < 300.0
    return passed, f"{'; '.join(notes)} (+3 stderr slack); {elapsed:.0f}s (limit 300s)"


def check_rerun_determinism():
    """The run command is byte-reproducible for a fixed config."""
    from . import cli as cli_module

    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as td:
        config_path = _find_config("cubic.cfg")
        if config_path is None:
            config_path = Path(td) / "cubic.cfg"
            config_path.write_text(CUBIC_CFG_TEXT)
        payloads = []
        codes = []
        for attempt in ("first", "second"):
            out = Path(td) / attempt
            with contextlib.redirect_stdout(io.StringIO()):
                codes.append(cli_module.cli([
                    "run", "--config", str(config_path),
                    "--out", str(out), "--format", "csv",
                ]))
            payloads.append((out / "cubic.csv").read_bytes())
    elapsed = time.perf_counter() - start
    identical = payloads[0] == payloads[1] and len(payloads[0]) > 0
    passed = codes == [0, 0] and identical
    return passed, (f"exit codes {codes}, {len(payloads[0])} bytes, "
                    f"{'byte-identical' if identical else 'DIFFER'}; {elapsed:.0f}s")


CRITERIA = (
    (1, "oracle variance model", check_oracle_variance),
    (2, "trajectory bounds on acceptance runs", check_trajectory_bounds),
    (3, "schedule arithmetic", check_schedule_arithmetic),
    (4, "oracle accounting", check_sfo_accounting),
    (5, "core inequality and output properties", check_core_properties),
    (6, "deterministic rate recovery", check_deterministic_recovery),
    (7, "steep-objective rate ordering", check_rate_ordering),
    (8, "phase retrieval reproduction", check_phase_retrieval),
    (9, "runs within theorem bounds", check_run_versus_bound),
    (10, "rerun determinism", check_rerun_determinism),
)


def run_criterion(number: int) -> CriterionResult:
    for num, name, fn in CRITERIA:
        if num == number:
            try:
                passed, detail = fn()
            except Exception as exc:  # noqa: BLE001 — a crash is a failure
                passed, detail = False, f"raised {exc!r}"
            return CriterionResult(number=num, name=name, passed=passed, detail=detail)
    raise ValueError(f"no criterion numbered {number}")


def run_all() -> list[CriterionResult]:
    return [run_criterion(num) for num, _, _ in CRITERIA]


def _small_trajectory_suite() -> CriterionResult:
    """The criterion-2 inequalities on fresh small stochastic runs."""
    objective = make_quadratic(5, 1.0)
    x0 = np.ones(5)
    bad = 0
    for build in (
        lambda: (nsgdm_schedule("bg0", 400, 1.0), run_nsgdm),
        lambda: (nstorm_schedule("expected_sym_alpha", 0.5, 400, 1.0, G=1.0), run_nstorm),
    ):
        schedule, runner = build()
        oracle = wrap(objective, 1.0, 1.0, x0)
        trace = runner(oracle, schedule, x0, np.random.default_rng(1))
        bad += int(np.sum(trace.step_norm[1:] > schedule.gamma + 1e-12))
        k = np.arange(trace.n_states)
        bad += int(np.sum(np.sqrt(trace.drift_sq) > k * schedule.gamma + 1e-9))
    return CriterionResult(number=2, name="trajectory bounds (small runs)",
                           passed=bad == 0, detail=f"{bad} violations over 2 runs")


def verify_suites() -> list[CriterionResult]:
    """Fast property suites for the verify command (no long experiments)."""
    return [
        run_criterion(1),
        _small_trajectory_suite(),
        run_criterion(3),
        run_criterion(4),
        run_criterion(5),
    ]
