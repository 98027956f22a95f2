"""Matplotlib figures rendered from the CSV outputs of ``run`` and ``sweep``."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# stable colour per method across every figure
COLORS = {
    "drl_perception": "tab:blue",
    "sim_annealing": "tab:orange",
    "perception_free": "tab:green",
    "complete_offload": "tab:red",
    "random": "tab:gray",
}

SWEEP_LABELS = {
    "datasize": "average datasize (MB)",
    "uav_cpu": "UAV max CPU (Hz)",
    "bs_cpu": "BS max CPU (Hz)",
    "v": "V",
}


def _read(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _col(rows, key):
    return [float(r[key]) for r in rows]


def running_average_figure(csv_paths, out_path) -> Path:
    """Running time-averaged cost and UAV/BS backlog per method (seeds averaged)."""
    series = defaultdict(list)
    for p in csv_paths:
        rows = _read(Path(p))
        if rows:
            series[rows[0]["method"]].append(rows)
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    for method, runs in sorted(series.items()):
        n = min(len(r) for r in runs)
        t = list(range(n))
        for ax, key in zip(axes, ("avg_cost", "avg_H_u", "avg_H_bs")):
            vals = [sum(_col(r[:n], key)[i] for r in runs) / len(runs) for i in range(n)]
            ax.plot(t, vals, label=method, color=COLORS.get(method))
    for ax, title in zip(axes, ("time-averaged cost", "time-averaged UAV backlog (bits)",
                                "time-averaged BS backlog (bits)")):
        ax.set_xlabel("slot")
        ax.set_title(title, fontsize=10)
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def sweep_figure(trend_csv, out_path) -> Path:
    """Final time-averaged cost against the swept parameter, one line per method."""
    rows = _read(Path(trend_csv))
    param = rows[0]["param"] if rows else ""
    by_method = defaultdict(list)
    for r in rows:
        by_method[r["method"]].append((float(r["value"]), float(r["mean_cost"])))
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    for method, pts in sorted(by_method.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method, color=COLORS.get(method))
    ax.set_xlabel(SWEEP_LABELS.get(param, param))
    ax.set_ylabel("time-averaged cost")
    if param in ("uav_cpu", "bs_cpu"):
        ax.set_xscale("log")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def sghs_trace_figure(trace_csv, out_path) -> Path:
    rows = _read(Path(trace_csv))
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(_col(rows, "iter"), _col(rows, "best_fitness"))
    ax.set_xlabel("iteration")
    ax.set_ylabel("best fitness")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def render_directory(directory) -> list[Path]:
    """Render every figure that the CSVs found in ``directory`` support."""
    d = Path(directory)
    made = []
    runs = sorted(p for p in d.glob("*.csv") if p.name not in ("trend.csv",) and not p.name.startswith("sghs"))
    per_slot = [p for p in runs if _has_columns(p, ("avg_cost", "method"))]
    if per_slot:
        made.append(running_average_figure(per_slot, d / "running_averages.png"))
    if (d / "trend.csv").is_file():
        made.append(sweep_figure(d / "trend.csv", d / "trend.png"))
    for trace in sorted(d.glob("sghs_trace*.csv")):
        made.append(sghs_trace_figure(trace, trace.with_suffix(".png")))
    return made


def _has_columns(path: Path, cols) -> bool:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    return all(c in header for c in cols)
