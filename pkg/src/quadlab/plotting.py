"""Figures for evaluation reports, rendered next to their CSV tables."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from quadlab.evaluation import SweepRow  # noqa: E402


def plot_sweep(rows: list[SweepRow], path: str | Path,
               baseline: float | None = None) -> Path:
    """Return-vs-value curve with the in-training-range band shaded."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        xs = [r.value for r in rows]
        means = [r.mean for r in rows]
        stds = [r.std for r in rows]
        ax.errorbar(xs, means, yerr=stds, fmt="o-", ms=3, lw=1.2, capsize=2)
        inside = [r.value for r in rows if r.in_training_range]
        if inside:
            ax.axvspan(min(inside), max(inside), color="tab:green", alpha=0.12,
                       label="training range")
        if baseline is not None:
            ax.axhline(baseline, color="tab:red", ls="--", lw=1,
                       label="random baseline")
        ax.set_xlabel(rows[0].axis)
        ax.legend(loc="best", fontsize=8)
    ax.set_ylabel("mean normalized return")
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_zero_shot(report: dict, path: str | Path,
                   floor: float | None = None) -> Path:
    """Bar chart of normalized returns per preset."""
    path = Path(path)
    names = list(report)
    means = [report[n]["mean"] for n in names]
    stds = [report[n]["std"] for n in names]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(names)), means, yerr=stds, capsize=3,
           color="tab:blue", alpha=0.8)
    if floor is not None:
        ax.axhline(floor, color="tab:red", ls="--", lw=1, label="floor")
        ax.legend(loc="best", fontsize=8)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("mean normalized return")
    ax.set_ylim(0.0, 1.05)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
