"""Figure emission for experiment results.

Three figures per experiment, each as vector graphics (SVG) plus a plain
CSV sidecar holding exactly the plotted numbers:

* gradient norm against cumulative SFO budget (mean with a +/- one-std band
  over completed seeds, on the shared grid),
* squared drift from the start point against iteration index,
* batch size against iteration index.

An axis switches to log scale when the positive finite values on it span
more than two decades (max/min > 100).  Methods with no completed seeds are
skipped; an experiment with nothing completed at all is an error.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import ExperimentResult

__all__ = ["emit_plots"]

_FIGURES = (
    ("grad_norm_vs_sfo", "cumulative SFO", "gradient norm"),
    ("drift_vs_iter", "iteration", "squared drift from start"),
    ("batch_vs_iter", "iteration", "batch size"),
)


def _wants_log(values: np.ndarray) -> bool:
    vals = np.asarray(values, dtype=np.float64)
    vals = vals[np.isfinite(vals) & (vals > 0.0)]
    if vals.size < 2:
        return False
    return float(vals.max()) / float(vals.min()) > 100.0


def _stack_by_iteration(traces, series: str):
    """Mean/std of a series across seeds, aligned by state index."""
    n = min(t.n_states for t in traces)
    rows = np.stack([np.asarray(getattr(t, series), dtype=np.float64)[:n] for t in traces])
    mean = rows.mean(axis=0)
    if len(traces) >= 2:
        std = rows.std(axis=0, ddof=1)
    else:
        std = np.zeros(n)
    return np.arange(n), mean, std


def _sidecar_text(x_name: str, per_method) -> str:
    lines = [f"method,{x_name},mean,std"]
    for tag, x, mean, std in per_method:
        for j in range(len(x)):
            lines.append(f"{tag},{int(x[j])},{mean[j]:.17g},{std[j]:.17g}")
    return "\n".join(lines) + "\n"


def _draw(ax, per_method, x_log: bool, y_log: bool):
    for tag, x, mean, std in per_method:
        ok = np.isfinite(mean)
        lo = mean - std
        hi = mean + std
        if y_log:
            positive = mean[ok & (mean > 0)]
            floor = positive.min() / 10.0 if positive.size else 1e-30
            lo = np.maximum(lo, floor)
        line, = ax.plot(x[ok], mean[ok], label=tag, linewidth=1.2)
        ax.fill_between(x[ok], lo[ok], hi[ok], alpha=0.2, color=line.get_color())
    if x_log:
        ax.set_xscale("log")
    if y_log:
        ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)


def emit_plots(result: ExperimentResult, out_dir) -> dict:
    """Write the three figures; returns {figure name: (svg path, csv path)}.

    Every figure aggregates completed seeds only.  A single completed seed
    draws a zero-width band; a fixed unit batch draws the constant line 1.
    """
    out = Path(out_dir)
    methods = [m for m in result.methods if m.completed]
    if not methods:
        raise ValueError("nothing to plot: no method completed any seed")
    out.mkdir(parents=True, exist_ok=True)

    data = {}

    per = []
    for m in methods:
        curve = m.curves["grad_norm"]
        per.append((m.spec.tag, curve.sfo, curve.mean, curve.std))
    data["grad_norm_vs_sfo"] = ("sfo", per)

    for name, series in (("drift_vs_iter", "drift_sq"), ("batch_vs_iter", "batch_size")):
        per = []
        for m in methods:
            it, mean, std = _stack_by_iteration(m.completed, series)
            per.append((m.spec.tag, it, mean, std))
        data[name] = ("iter", per)

    paths = {}
    for name, x_label, y_label in _FIGURES:
        x_name, per = data[name]
        all_x = np.concatenate([x for _, x, _, _ in per])
        all_y = np.concatenate([mean for _, _, mean, _ in per])
        x_log = x_name == "sfo" and _wants_log(all_x)
        y_log = _wants_log(all_y)

        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        _draw(ax, per, x_log, y_log)
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        ax.set_title(f"{result.config.name}: {y_label}")
        fig.tight_layout()
        svg = out / f"{result.config.name}_{name}.svg"
        fig.savefig(svg, format="svg")
        plt.close(fig)

        csv = out / f"{result.config.name}_{name}.csv"
        with open(csv, "w", newline="\n") as fh:
            fh.write(_sidecar_text(x_name, per))
        paths[name] = (svg, csv)
    return paths
