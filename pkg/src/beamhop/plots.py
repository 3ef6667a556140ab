"""Figure rendering for the CLI report paths.

Everything draws through the Agg backend and writes PNG files next to the
CSV output, so reports work on headless machines.  Figures are a reading
aid; the CSVs stay the canonical record.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def run_figures(result, out_dir: str) -> list[str]:
    """Per-run figures: SOD trace and the per-position service picture."""
    s = result.summary
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(s.sod_per_slot, lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("slot")
    ax.set_ylabel("SOD cost (bits^2)")
    ax.set_title(f"{s.algorithm}: offered-vs-demand cost per slot")
    paths.append(_save(fig, out_dir, "sod_trace.png"))

    pos = np.arange(len(s.per_position_served))
    fig, (top, bot) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    top.bar(pos, s.per_position_demanded / 1e6, color="0.8", label="arrived")
    top.bar(pos, s.per_position_served / 1e6, color="C0", label="served")
    top.set_ylabel("Mbit")
    top.legend(loc="upper right")
    top.set_title(f"{s.algorithm}: service per beam position")
    bot.bar(pos, s.satisfactions, color="C2")
    bot.set_ylim(0.0, 1.05)
    bot.set_xlabel("beam position")
    bot.set_ylabel("satisfaction")
    paths.append(_save(fig, out_dir, "service_map.png"))
    return paths


def compare_figures(rows: list[dict], out_dir: str) -> list[str]:
    """Bar panels (throughput, mean SOD, JFI) across algorithms."""
    labels = [r["algorithm"] for r in rows]
    x = np.arange(len(labels))
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for ax, key, title, scale in (
            (axes[0], "throughput_bps", "throughput (Gbps)", 1e9),
            (axes[1], "mean_sod", "mean SOD (bits^2)", 1.0),
            (axes[2], "jfi", "fairness (JFI)", 1.0)):
        ax.bar(x, [r[key] / scale for r in rows], color="C0")
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
        ax.set_title(title)
    if rows:
        axes[2].set_ylim(0.0, 1.05)
    fig.suptitle(f"algorithm comparison, lambda={rows[0]['lambda']:g}"
                 if rows else "algorithm comparison")
    return [_save(fig, out_dir, "comparison.png")]


def sweep_figures(rows: list[dict], out_dir: str) -> list[str]:
    """Throughput and SOD versus arrival rate, one line per algorithm."""
    algs = sorted({r["algorithm"] for r in rows})
    paths = []
    for key, fname, ylabel, scale in (
            ("throughput_bps", "sweep_throughput.png", "throughput (Gbps)", 1e9),
            ("mean_sod", "sweep_sod.png", "mean SOD (bits^2)", 1.0)):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for alg in algs:
            pts = sorted((r["lambda"], r[key] / scale)
                         for r in rows if r["algorithm"] == alg)
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", ms=3, label=alg)
        ax.set_xlabel("arrival rate (packets/s per position)")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=8)
        paths.append(_save(fig, out_dir, fname))
    return paths


def _save(fig, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
