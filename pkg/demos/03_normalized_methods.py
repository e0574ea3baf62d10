"""Momentum versus recursive estimation on a steep one-dimensional objective.

|x|^3 is the classic objective whose gradient Lipschitz constant grows with
the gradient itself (generalized smoothness with alpha = 1/2), so plain SGD
needs a tiny step or it detonates.  The normalized methods cap every step
at gamma regardless of scale.  This script runs both from x0 = 5 under
distance-dependent noise, compares their estimator errors, draws the
uniform output, and fits the empirical convergence rate over three horizons.
"""

import numpy as np

from driftopt.analysis import fit_rate_slope
from driftopt.objectives import make_power_poly
from driftopt.optimizers import run_nsgdm, run_nstorm, uniform_output
from driftopt.oracle import wrap
from driftopt.schedules import nsgdm_schedule, nstorm_schedule

objective = make_power_poly(0.5)  # |x|^3
x0 = np.array([5.0])
B, G = 1.0, 0.5
T = 10_000

momentum = nsgdm_schedule("bg0", T, 1.0)
estimator = nstorm_schedule("expected_sym_alpha", 0.5, T, 1.0, G=G)
print(f"schedules at T = {T}:")
print(f"  momentum   gamma {momentum.gamma:.3e}, eta {momentum.eta:.3e}")
print(f"  estimator  gamma {estimator.gamma:.3e}, eta {estimator.eta:.3e}, "
      f"N_init {estimator.n_init}")

rng = np.random.default_rng(1)
trace_m = run_nsgdm(wrap(objective, B, G, x0), momentum, x0, rng,
                    seed=1, method_tag="nsgdm")
rng = np.random.default_rng(1)
trace_e = run_nstorm(wrap(objective, B, G, x0), estimator, x0, rng,
                     seed=1, method_tag="nstorm")

print()
print("one run each (same seed):")
for trace in (trace_m, trace_e):
    print(f"  {trace.method_tag}: final |grad| {trace.final_grad_norm():.4f}, "
          f"trajectory mean {np.mean(trace.grad_norm):.4f}, "
          f"oracle calls {int(trace.sfo_cum[-1])}, "
          f"max step {trace.step_norm.max():.3e}")

print()
print("the recursive estimator tracks the true gradient far more closely:")
for trace in (trace_m, trace_e):
    err = trace.estimator_err
    print(f"  {trace.method_tag}: mean estimator error {np.mean(err):.4f}, "
          f"final {err[-1]:.4f}")

print()
print("the reported iterate is drawn uniformly from the trajectory, so its")
print("expected gradient norm is the trajectory average:")
rng = np.random.default_rng(7)
picks = [uniform_output(trace_e, rng) for _ in range(5)]
for pick in picks:
    print(f"  index {pick.index:>5}: |grad| {pick.grad_norm:.4f} "
          f"(trajectory mean {pick.trace_mean:.4f})")

print()
print("empirical rate of the momentum method over three horizons")
print("(3 seeds each, trajectory-mean gradient norm):")
points = []
for horizon in (1000, 3162, 10000):
    schedule = nsgdm_schedule("bg0", horizon, 1.0)
    means = []
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        start = x0 + 0.1 * rng.standard_normal(1)
        trace = run_nsgdm(wrap(objective, B, G, start), schedule, start,
                          rng, seed=seed)
        means.append(float(np.mean(trace.grad_norm)))
    points.append((horizon, float(np.mean(means))))
    print(f"  T = {horizon:>6}: {points[-1][1]:.4f}")
fit = fit_rate_slope(points)
print(f"fitted slope {fit.slope:.3f} (theory: -1/6 = -0.167 under this noise)")
