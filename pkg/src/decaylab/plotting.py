"""Figures rendered next to the CSV outputs (PNG, non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import AblationReport, ensemble_band  # noqa: E402
from .engine import EnsembleResult  # noqa: E402

DPI = 120


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_time_series(result: EnsembleResult, path: Path, lifetime_fraction: float = 0.01) -> Path:
    """Percentage of objects in good condition per run, with the min/max envelope."""
    fig, ax = plt.subplots(figsize=(7, 4))
    band = ensemble_band(result.runs)
    ax.fill_between(band.years, band.min, band.max, color="0.85", label="min-max across runs")
    for r in result.runs:
        ax.plot(np.arange(r.percentage_good.size), r.percentage_good, lw=0.8, alpha=0.8)
    ax.plot(band.years, band.mean, color="k", lw=1.5, label="mean")
    ax.axhline(100 * lifetime_fraction, color="tab:red", ls="--", lw=0.8, label=f"{100 * lifetime_fraction:g}% threshold")
    ax.set_xlabel("year")
    ax.set_ylabel("objects in good condition (%)")
    ax.set_ylim(0, 100)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def plot_histograms(initial, final, path: Path) -> Path:
    """Initial and final condition distributions from pooled (bin_start, count) pairs."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for hist, label in ((initial, "initial"), (final, "final")):
        starts = [s for s, _ in hist]
        counts = [c for _, c in hist]
        width = starts[1] - starts[0] if len(starts) > 1 else 100.0
        ax.bar(starts, counts, width=width, align="edge", alpha=0.55, label=label)
    ax.set_xlabel("condition")
    ax.set_ylabel("objects (all runs)")
    ax.set_xlim(0, 100)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_ablation(report: AblationReport, path: Path) -> Path:
    labels = ["all processes"] + [f"without {v.removed}" for v in report.variants]
    results = [report.baseline] + [v.result for v in report.variants]
    means = [r.average_time if r.average_time is not None else np.nan for r in results]
    sds = [r.sd_time if r.sd_time is not None else 0.0 for r in results]
    colors = ["0.5"] + ["tab:blue" if v.significant else "tab:gray" for v in report.variants]
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(labels) + 1.5))
    y = np.arange(len(labels))
    ax.barh(y, means, xerr=sds, color=colors, capsize=3)
    ax.set_yticks(y, labels)
    ax.invert_yaxis()
    ax.set_xlabel("collection lifetime (years)")
    return _save(fig, path)
