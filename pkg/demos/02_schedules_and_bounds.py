"""Theorem-driven schedules and the bounds they certify.

Every optimizer run takes its step size gamma, momentum/estimator weight
eta, and initialization batch N_init from a closed-form schedule in the
horizon T.  The same constants feed `theorem_bound_*`, which evaluates the
proven gradient-norm guarantee term by term, so a run can be checked
against the number its schedule promises.
"""

import numpy as np

from driftopt.analysis import theorem_bound_nsgdm, theorem_bound_nstorm
from driftopt.schedules import (
    derived_constants,
    nsgdm_schedule,
    nstorm_schedule,
    validate_conditions,
)

print("momentum schedules at a few horizons (gamma0 = 1):")
print(f"{'T':>9} {'regime':>18} {'gamma':>12} {'eta':>12}")
for T in (10**3, 10**4, 10**6):
    for regime in ("bg0", "bounded_variance", "deterministic"):
        s = nsgdm_schedule(regime, T, 1.0)
        print(f"{T:>9} {regime:>18} {s.gamma:>12.4e} {s.eta:>12.4e}")

print()
print("estimator schedules add a sharp-initialization batch N_init:")
print(f"{'T':>9} {'regime':>20} {'gamma':>12} {'eta':>12} {'N_init':>7}")
for regime, alpha, G in (("mss", None, 1.0), ("expected_sym_alpha", 0.5, 1.0),
                         ("expected_sym_one", None, 1.0)):
    s = nstorm_schedule(regime, alpha, 10**4, 1.0, G=G)
    print(f"{10**4:>9} {regime:>20} {s.gamma:>12.4e} {s.eta:>12.4e} {s.n_init:>7}")

print()
print("a guarantee, itemized — momentum on a smooth objective")
print("(gap 1, gamma0 = 1, L0 = 1, no noise, T = 10^6):")
bound = theorem_bound_nsgdm("smooth", delta=1.0, gamma0=1.0, T=10**6,
                            L0=1.0, B=0.0, G=0.0)
for name, term in bound.term_breakdown.items():
    print(f"  {name:<22} {term:.6g}")
print(f"  {'total':<22} {bound.value:.6g}")

print()
print("the same machinery for the estimator under mean-square smoothness:")
bound = theorem_bound_nstorm("mss", delta=1.0, gamma0=1.0, T=10**6,
                             L=1.0, B=0.5, G=1.0)
for name, term in bound.term_breakdown.items():
    print(f"  {name:<22} {term:.6g}")
print(f"  {'total':<22} {bound.value:.6g}")

print()
print("generalized-smoothness regimes carry step-size conditions; the")
print("validator reports violations instead of silently computing:")
constants = derived_constants(alpha=0.5, L0=1.0, L1=1.0)
print(f"  derived constants at alpha=0.5: K0={constants.K0:g}, "
      f"K1={constants.K1:g}, K2={constants.K2:g}")
for gamma0 in (0.1, 5.0):
    schedule = nsgdm_schedule("bg0", 10**4, gamma0)
    problems = validate_conditions(schedule, constants)
    verdict = "ok" if not problems else "; ".join(problems)
    print(f"  gamma0 = {gamma0:<4}: {verdict}")

print()
print("violated conditions surface on the bound object too:")
bound = theorem_bound_nsgdm("sym_alpha", delta=1.0, gamma0=5.0, T=10**4,
                            L0=1.0, L1=1.0, alpha=0.5)
print(f"  value {bound.value:.4g}, violations: {list(bound.condition_violations)}")
