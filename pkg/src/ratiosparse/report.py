"""Figure rendering for benchmark and bound-sweep outputs.

Reads the delimited files the harness and theory sweep write and renders
matplotlib figures next to them: parameter-sensitivity heatmaps over the
(p, q) grid, success-rate curves versus sparsity, and RIC-threshold
comparison curves.
"""

from __future__ import annotations

import csv
import json
import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from pathlib import Path


__all__ = ["render_bench_figures", "render_theory_figure"]

_HEATMAP_METRICS = (
    ("success_rate", "Success rate"),
    ("model_failure_rate", "Model-failure rate"),
    ("algorithm_failure_rate", "Algorithm-failure rate"),
)


def _read_csv_dicts(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _pivot(rows, metric):
    ps = sorted({float(r["p"]) for r in rows})
    qs = sorted({float(r["q"]) for r in rows})
    grid = np.full((len(ps), len(qs)), np.nan)
    for r in rows:
        i = ps.index(float(r["p"]))
        j = qs.index(float(r["q"]))
        grid[i, j] = float(r[metric])
    return ps, qs, grid


def render_bench_figures(out_dir) -> list:
    """Render heatmap and phase-curve figures from a bench output directory.

    Expects heatmap.csv and aggregates.json as written by the bench
    command; returns the list of files written.
    """
    out_dir = Path(out_dir)
    written = []
    heat_rows = _read_csv_dicts(out_dir / "heatmap.csv")

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6), constrained_layout=True)
    for ax, (metric, title) in zip(axes, _HEATMAP_METRICS):
        ps, qs, grid = _pivot(heat_rows, metric)
        im = ax.imshow(grid, origin="lower", aspect="auto", vmin=0.0, vmax=1.0,
                       cmap="viridis",
                       extent=(min(qs) - 0.05, max(qs) + 0.05,
                               min(ps) - 0.05, max(ps) + 0.05))
        if len(ps) * len(qs) <= 120:
            for i, p in enumerate(ps):
                for j, q in enumerate(qs):
                    if np.isfinite(grid[i, j]):
                        ax.text(q, p, f"{grid[i, j]:.2f}", ha="center",
                                va="center", fontsize=7,
                                color="white" if grid[i, j] < 0.6 else "black")
        ax.set_xlabel("q")
        ax.set_ylabel("p")
        ax.set_title(title)
        fig.colorbar(im, ax=ax, shrink=0.9)
    path = out_dir / "heatmaps.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    with open(out_dir / "aggregates.json") as fh:
        agg = json.load(fh)
    by_pq = {}
    for key, cell in agg.items():
        parts = dict(item.split("=") for item in key.split(","))
        p, q, k = float(parts["p"]), float(parts["q"]), int(parts["k"])
        by_pq.setdefault((p, q), []).append((k, cell["success_rate"]))
    if any(len(v) > 1 for v in by_pq.values()):
        fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
        for (p, q), pts in sorted(by_pq.items()):
            pts.sort()
            ax.plot([k for k, _ in pts], [s for _, s in pts],
                    marker="o", label=f"p={p:g}, q={q:g}")
        ax.set_xlabel("sparsity k")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.05, 1.05)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        path = out_dir / "success_vs_k.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def render_theory_figure(csv_path, out_path) -> bool:
    """Plot the two RIC thresholds against sparsity from a bounds CSV.

    Curves are grouped by (p, q); returns False (nothing written) when the
    sweep has no k-axis to plot against.
    """
    rows = _read_csv_dicts(csv_path)
    by_pq = {}
    for r in rows:
        key = (float(r["p"]), float(r["q"]))
        by_pq.setdefault(key, []).append(
            (int(r["k"]), float(r["delta_new"]), float(r["delta_zhu"])))
    if not any(len({k for k, _, _ in v}) > 1 for v in by_pq.values()):
        return False
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    for (p, q), pts in sorted(by_pq.items()):
        pts.sort()
        ks = [k for k, _, _ in pts]
        ax.plot(ks, [d for _, d, _ in pts], marker="o",
                label=f"sharpened, p={p:g}, q={q:g}")
        ax.plot(ks, [d for _, _, d in pts], marker="s", linestyle="--",
                label=f"baseline, p={p:g}, q={q:g}")
    ax.set_xlabel("sparsity k")
    ax.set_ylabel(r"admissible RIC level $\delta_{2k}$")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True
