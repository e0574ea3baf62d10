"""Command-line front end.

Four subcommands:

* ``run``     — execute an experiment from a config file (or inline flags)
                and export CSV/JSON traces, optionally with figures;
* ``verify``  — fast property suites (oracle moments, schedule arithmetic,
                oracle accounting, core inequalities, trajectory bounds);
* ``accept``  — the full acceptance checklist, one PASS/FAIL line each;
* ``bound``   — evaluate a theoretical gradient-norm bound from flags and
                print the value with its per-term breakdown.

All subcommands return 0 on success and a nonzero code on failure; unknown
flags or a malformed config print usage plus a diagnostic.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import sys

from .analysis import (
    NSGDM_BOUND_REGIMES,
    NSTORM_BOUND_REGIMES,
    theorem_bound_nsgdm,
    theorem_bound_nstorm,
)
from .harness import (
    ExperimentConfig,
    MethodSpec,
    export,
    parse_config,
    run_experiment,
)

__all__ = ["cli", "main"]

_INLINE_KINDS = ("nsgdm", "nstorm", "normalized_gd", "sgd", "storm_dynamic")
_DEFAULT_REGIME = {"nsgdm": "bg0", "nstorm": "expected_sym_alpha"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftopt",
        description="normalized stochastic gradient methods under "
                    "distance-dependent (BG-0) gradient noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and export traces")
    run.add_argument("--config", help="INI experiment file; overrides inline flags")
    run.add_argument("--objective", choices=("phase_retrieval", "power_poly", "quadratic"))
    run.add_argument("--dimension", type=int, default=1)
    run.add_argument("--alpha", type=float, default=0.5)
    run.add_argument("--B", type=float, default=0.0)
    run.add_argument("--G", type=float, default=0.0)
    run.add_argument("--T", type=int, default=1001)
    run.add_argument("--method", action="append", metavar="KIND[:REGIME]",
                     help="repeatable; default: nsgdm and nstorm")
    run.add_argument("--gamma0", type=float, default=1.0)
    run.add_argument("--eta0", type=float, default=1.0)
    run.add_argument("--lr", type=float, help="learning rate for inline sgd/storm_dynamic")
    run.add_argument("--seeds", type=int, nargs="+", default=(0, 1, 2))
    run.add_argument("--root-seed", type=int, default=0)
    run.add_argument("--name", help="experiment (and output file) name")
    run.add_argument("--out", help="output directory (default: config out_dir)")
    run.add_argument("--format", nargs="+", choices=("csv", "json"),
                     help="export formats (default: config formats)")
    run.add_argument("--plots", action="store_true", help="also emit figures")

    verify = sub.add_parser("verify", help="run the fast property suites")
    verify.add_argument("--quiet", action="store_true", help="suppress per-suite detail")

    sub.add_parser("accept", help="run the full acceptance checklist")

    bound = sub.add_parser("bound", help="evaluate a theoretical bound")
    bound.add_argument("--method", required=True, choices=("nsgdm", "nstorm"))
    bound.add_argument("--regime", required=True,
                       choices=sorted(set(NSGDM_BOUND_REGIMES) | set(NSTORM_BOUND_REGIMES)))
    bound.add_argument("--delta", type=float, required=True,
                       help="initial optimality gap f(x0) - inf f")
    bound.add_argument("--gamma0", type=float, required=True)
    bound.add_argument("--T", type=int, required=True)
    bound.add_argument("--eta0", type=float, default=1.0)
    bound.add_argument("--lambda0", type=float)
    bound.add_argument("--b0", type=float, help="initial estimator error bound")
    bound.add_argument("--L", type=float, help="mean-square smoothness constant")
    bound.add_argument("--L0", type=float)
    bound.add_argument("--L1", type=float)
    bound.add_argument("--alpha", type=float)
    bound.add_argument("--B", type=float, default=0.0)
    bound.add_argument("--G", type=float, default=0.0)
    return parser


def _parse_inline_method(text: str, args) -> MethodSpec:
    kind, _, regime = text.partition(":")
    if kind not in _INLINE_KINDS:
        raise ValueError(f"unknown method kind {kind!r}; expected one of {_INLINE_KINDS}")
    regime = regime or _DEFAULT_REGIME.get(kind)
    if kind in ("nsgdm", "nstorm", "normalized_gd"):
        return MethodSpec(kind=kind, tag=text, regime=regime,
                          gamma0=args.gamma0, eta0=args.eta0)
    if args.lr is None:
        raise ValueError(f"inline method {kind!r} needs --lr")
    return MethodSpec(kind=kind, tag=text, lr=args.lr,
                      batch="dynamic" if kind == "storm_dynamic" else "fixed",
                      batch_size=1)


def _inline_config(args) -> ExperimentConfig:
    if args.objective is None:
        raise ValueError("run needs --config or at least --objective")
    names = args.method if args.method else ["nsgdm", "nstorm"]
    methods = tuple(_parse_inline_method(m, args) for m in names)
    return ExperimentConfig(
        name=args.name or f"{args.objective}_T{args.T}",
        objective=args.objective,
        dimension=args.dimension,
        alpha=args.alpha,
        B=args.B,
        G=args.G,
        T=args.T,
        methods=methods,
        seeds=tuple(args.seeds),
        root_seed=args.root_seed,
    )


def _cmd_run(args, parser) -> int:
    try:
        if args.config is not None:
            config = parse_config(args.config)
            if args.name:
                config = dataclasses.replace(config, name=args.name)
        else:
            config = _inline_config(args)
    except (ValueError, KeyError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2

    result = run_experiment(config)
    formats = tuple(args.format) if args.format else config.formats
    out_dir = args.out if args.out is not None else config.out_dir
    for fmt in formats:
        path = export(result, fmt, out_dir)
        print(f"wrote {path}")
    if args.plots:
        from .plots import emit_plots

        for svg, csv in emit_plots(result, out_dir).values():
            print(f"wrote {svg}")
            print(f"wrote {csv}")
    for m in result.methods:
        done = m.completed
        if done:
            final = sum(t.final_grad_norm() for t in done) / len(done)
            note = f"final grad norm {final:.6g} (mean of {len(done)} seeds)"
        else:
            note = "no completed seeds"
        if m.aborted:
            note += f"; {len(m.aborted)} aborted"
        print(f"  {m.spec.tag}: {note}")
    return 0


def _print_results(results, quiet: bool) -> int:
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{status}  {r.number:>2}. {r.name:<{width}}"
        if not quiet and r.detail:
            line += f"  {r.detail}"
        print(line)
        failures += 0 if r.passed else 1
    total = len(results)
    print(f"{total - failures}/{total} passed")
    return 0 if failures == 0 else 1


def _cmd_verify(args) -> int:
    from . import acceptance

    return _print_results(acceptance.verify_suites(), getattr(args, "quiet", False))


def _cmd_accept() -> int:
    from . import acceptance

    return _print_results(acceptance.run_all(), quiet=False)


def _cmd_bound(args) -> int:
    try:
        if args.method == "nsgdm":
            if args.regime not in NSGDM_BOUND_REGIMES:
                raise ValueError(f"nsgdm has no regime {args.regime!r}")
            evaluation = theorem_bound_nsgdm(
                args.regime, args.delta, args.gamma0, T=args.T, b0=args.b0,
                L0=args.L0, L1=args.L1, alpha=args.alpha, B=args.B, G=args.G,
            )
        else:
            if args.regime not in NSTORM_BOUND_REGIMES:
                raise ValueError(f"nstorm has no regime {args.regime!r}")
            evaluation = theorem_bound_nstorm(
                args.regime, args.delta, args.gamma0, T=args.T, eta0=args.eta0,
                lambda0=args.lambda0, b0=args.b0, L=args.L, L0=args.L0,
                L1=args.L1, alpha=args.alpha, B=args.B, G=args.G,
            )
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{evaluation.value:.6g}")
    for name, term in evaluation.term_breakdown.items():
        print(f"  {name}: {term:.6g}")
    for violation in evaluation.condition_violations:
        print(f"  warning: condition violated: {violation}")
    return 0


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.command == "run":
        return _cmd_run(args, parser)
    if args.command == "verify":
        return _cmd_verify(args)
    if args.command == "accept":
        return _cmd_accept()
    return _cmd_bound(args)


def main() -> None:
    sys.exit(cli(sys.argv[1:]))
