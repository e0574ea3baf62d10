"""Normalized stochastic gradient methods under distance-dependent noise.

The noise model lets the gradient-oracle variance grow with the distance
from the start point (B^2 ||x - x0||^2 + G^2), which breaks the bounded-
variance assumption most step-size rules lean on.  This package provides:

- test objectives with known smoothness structure (``objectives``),
- an exact-variance stochastic oracle implementing that noise model,
  with paired evaluations and closed-form mini-batching (``oracle``),
- horizon-indexed step-size/momentum schedules and their convergence
  guarantees as computable bounds (``schedules``, ``analysis``),
- the normalized optimizers plus non-normalized baselines, all recording
  full diagnostic traces (``optimizers``),
- a seeded, byte-reproducible benchmark harness with CSV/JSON export
  (``harness``) and figure emission (``plots``).

Plotting and the command line front end stay in their submodules
(``driftopt.plots``, ``driftopt.cli``); everything else is re-exported
here.
"""

from __future__ import annotations

from .analysis import (AggregatedCurve, BoundEvaluation, ComparisonReport,
                       RateFit, aggregate_traces, compare_runs,
                       fit_rate_slope, theorem_bound_nsgdm,
                       theorem_bound_nstorm)
from .harness import (ExperimentConfig, ExperimentResult, MethodResult,
                      MethodSpec, export, parse_config, run_experiment)
from .objectives import (Objective, SmoothnessMeta, make_phase_retrieval,
                         make_power_poly, make_quadratic)
from .optimizers import (BatchPolicy, Trace, UniformOutput, run_normalized_gd,
                         run_nsgdm, run_nstorm, run_sgd, run_storm_dynamic,
                         uniform_output)
from .oracle import Bg0Oracle, OracleSample, wrap
from .schedules import (ConstantsLedger, Schedule, default_lambda0,
                        derived_constants, nsgdm_schedule, nstorm_schedule,
                        validate_conditions)

__version__ = "0.1.0"

__all__ = [
    "AggregatedCurve",
    "BatchPolicy",
    "Bg0Oracle",
    "BoundEvaluation",
    "ComparisonReport",
    "ConstantsLedger",
    "ExperimentConfig",
    "ExperimentResult",
    "MethodResult",
    "MethodSpec",
    "Objective",
    "OracleSample",
    "RateFit",
    "Schedule",
    "SmoothnessMeta",
    "Trace",
    "UniformOutput",
    "aggregate_traces",
    "compare_runs",
    "default_lambda0",
    "derived_constants",
    "export",
    "fit_rate_slope",
    "make_phase_retrieval",
    "make_power_poly",
    "make_quadratic",
    "nsgdm_schedule",
    "nstorm_schedule",
    "parse_config",
    "run_experiment",
    "run_normalized_gd",
    "run_nsgdm",
    "run_nstorm",
    "run_sgd",
    "run_storm_dynamic",
    "uniform_output",
    "validate_conditions",
    "wrap",
]
