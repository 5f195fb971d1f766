"""Figures from sweep CSV outputs.

Consumes only the CSV files the simulator CLI writes (summary.csv plus
per-run metrics.csv / paths.csv) and renders the four standard views:
covariance-trace curves, RMS curves, glider path overlays, and the same
overlay zoomed to the uncontrolled paths.  Styling convention: line
style encodes strategy (solid optimal, dashed none, dotted random),
color encodes cohort size (blue 1, red 2, yellow 5, purple 10).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("trace-curves", "rms-curves", "path-plot", "path-zoom")

STRATEGY_STYLE = {"optimal": "-", "none": "--", "random": ":"}
COHORT_COLOR = {1: "tab:blue", 2: "tab:red", 5: "gold", 10: "tab:purple"}

METRICS_PREFIX = ("obs_index", "time", "trace", "rms")
PATHS_COLUMNS = ("strategy", "glider", "t", "x", "y")

FIXED_POINTS = {
    "center": (-0.5, -0.5),
    "unstable-node": (-0.5, 0.5),
    "saddle": (-0.5, -0.5),
    "stable-node": (0.5, -0.5),
}


class RenderError(Exception):
    pass


class SchemaError(RenderError):
    pass


def read_csv_columns(path, expected_prefix):
    """Strict reader: header must start with the expected columns."""
    text = Path(path).read_text()
    lines = [ln for ln in text.strip().split("\n") if ln]
    header = lines[0].split(",")
    if tuple(header[:len(expected_prefix)]) != tuple(expected_prefix):
        raise SchemaError(
            f"{path}: expected columns {','.join(expected_prefix)}..., "
            f"found {','.join(header[:len(expected_prefix)])}")
    return header, lines[1:]


def load_metrics(run_dir):
    header, rows = read_csv_columns(Path(run_dir) / "metrics.csv", METRICS_PREFIX)
    data = np.array([[float(v) for v in row.split(",")] for row in rows])
    return {name: data[:, i] for i, name in enumerate(header)}


def load_paths(run_dir):
    header, rows = read_csv_columns(Path(run_dir) / "paths.csv", PATHS_COLUMNS)
    by_glider = {}
    for row in rows:
        strategy, glider, t, x, y = row.split(",")
        by_glider.setdefault(int(glider), []).append((float(x), float(y)))
    return {g: np.array(pts) for g, pts in by_glider.items()}


def discover_runs(summary_dir, flow):
    """Run directories for one flow, keyed (cohort, strategy) -> [seed dirs]."""
    summary_dir = Path(summary_dir)
    if not (summary_dir / "summary.csv").exists():
        raise RenderError(f"{summary_dir}: no summary.csv (not a sweep directory?)")
    header, rows = read_csv_columns(summary_dir / "summary.csv",
                                    ("flow", "gliders", "strategy", "seed"))
    runs = {}
    for row in rows:
        parts = row.split(",")
        rec = dict(zip(header, parts))
        if rec["flow"] != flow or rec.get("status", "ok") != "ok":
            continue
        run = summary_dir / f"{rec['flow']}_K{rec['gliders']}_{rec['strategy']}_s{rec['seed']}"
        runs.setdefault((int(rec["gliders"]), rec["strategy"]), []).append(run)
    if not runs:
        raise RenderError(f"no data: sweep at {summary_dir} has no runs for flow {flow!r}")
    return runs


def _aggregate_curves(run_dirs, column):
    curves = np.stack([load_metrics(d)[column] for d in run_dirs])
    return curves.mean(axis=0), curves.min(axis=0), curves.max(axis=0)


def build_curves_figure(summary_dir, flow, column, band=False):
    """Assemble the curves figure; returns (fig, curve count) so tests can
    inspect styling before anything is written."""
    runs = discover_runs(summary_dir, flow)
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    drawn = 0
    lo_all, hi_all = np.inf, -np.inf
    for (cohort, strategy), dirs in sorted(runs.items()):
        mean, lo, hi = _aggregate_curves(dirs, column)
        idx = np.arange(1, mean.size + 1)
        color = COHORT_COLOR.get(cohort, "black")
        ax.plot(idx, mean, STRATEGY_STYLE.get(strategy, "-"), color=color,
                linewidth=1.4, label=f"K={cohort} {strategy}")
        if band and len(dirs) > 1:
            ax.fill_between(idx, lo, hi, color=color, alpha=0.12, linewidth=0)
        lo_all = min(lo_all, mean[mean > 0].min() if np.any(mean > 0) else mean.min())
        hi_all = max(hi_all, mean.max())
        drawn += 1
    if hi_all > 0 and lo_all > 0 and hi_all / lo_all > 1e3:
        ax.set_yscale("log")
    ax.set_xlabel("observation")
    ax.set_ylabel("covariance trace" if column == "trace" else "parameter RMS error")
    ax.set_title(f"{flow}: {ax.get_ylabel()} vs observations")
    ax.legend(fontsize=7, ncol=2)
    return fig, drawn


def render_curves(summary_dir, flow, column, out, band=False):
    fig, drawn = build_curves_figure(summary_dir, flow, column, band=band)
    _save(fig, out)
    return drawn


def render_paths(summary_dir, flow, out, cohort=5, seed=0, zoom=False):
    summary_dir = Path(summary_dir)
    runs = discover_runs(summary_dir, flow)
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    drawn = 0
    zoom_pts = []
    color = COHORT_COLOR.get(cohort, "black")
    for strategy in ("optimal", "none", "random"):
        dirs = runs.get((cohort, strategy))
        if not dirs:
            continue
        target = summary_dir / f"{flow}_K{cohort}_{strategy}_s{seed}"
        run = target if target in dirs else dirs[0]
        for glider, pts in load_paths(run).items():
            ax.plot(pts[:, 0], pts[:, 1], STRATEGY_STYLE[strategy], color=color,
                    linewidth=1.0, alpha=0.9,
                    label=strategy if glider == 1 else None)
            drawn += 1
            if strategy in ("none", "random"):
                zoom_pts.append(pts)
    if drawn == 0:
        raise RenderError(f"no data: no K={cohort} paths for flow {flow!r}")
    fx, fy = FIXED_POINTS[flow]
    ax.plot([fx], [fy], marker="*", markersize=14, color="black", linestyle="none",
            label="fixed point")
    if zoom and zoom_pts:
        allpts = np.vstack(zoom_pts)
        x0, y0 = allpts.min(axis=0)
        x1, y1 = allpts.max(axis=0)
        pad_x = 0.1 * max(x1 - x0, 1e-6)
        pad_y = 0.1 * max(y1 - y0, 1e-6)
        ax.set_xlim(x0 - pad_x, x1 + pad_x)
        ax.set_ylim(y0 - pad_y, y1 + pad_y)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(f"{flow}: glider paths (K={cohort})" + (" [zoom]" if zoom else ""))
    ax.legend(fontsize=8)
    _save(fig, out)
    return drawn


def _save(fig, out):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".svg":
        # drop the date and pin element ids so re-renders are byte-identical
        with matplotlib.rc_context({"svg.hashsalt": "glider-figs"}):
            fig.savefig(out, dpi=150, metadata={"Date": None})
    else:
        fig.savefig(out, dpi=150)
    plt.close(fig)


def render(summary_dir, kind, flow, out, cohort=5, seed=0, band=False):
    """Render one figure kind; returns the number of curves drawn."""
    if kind == "trace-curves":
        return render_curves(summary_dir, flow, "trace", out, band=band)
    if kind == "rms-curves":
        return render_curves(summary_dir, flow, "rms", out, band=band)
    if kind == "path-plot":
        return render_paths(summary_dir, flow, out, cohort=cohort, seed=seed, zoom=False)
    if kind == "path-zoom":
        return render_paths(summary_dir, flow, out, cohort=cohort, seed=seed, zoom=True)
    raise RenderError(f"unknown figure kind {kind!r}; expected one of {FIGURE_KINDS}")
