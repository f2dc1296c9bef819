"""Figure rendering for the stats/eval report paths.

Every report writes its delimited data first (CSV/JSON); the figures here
are rendered alongside from the same arrays, so plots and files can never
disagree.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_histogram_figure(
    bin_centers: np.ndarray,
    counts: np.ndarray,
    path: str | Path,
    title: str = "Distribution of acceleration",
) -> None:
    """Bar chart of an acceleration histogram, one bar per bin."""
    width = float(bin_centers[1] - bin_centers[0]) if len(bin_centers) > 1 else 1.0
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(bin_centers, counts, width=width * 0.92, color="#3b6aa0", edgecolor="none")
    ax.set_xlabel("forward acceleration (m/s$^2$)")
    ax.set_ylabel("frames")
    ax.set_title(title)
    ax.margins(x=0.01)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_metric_figure(reports: dict[str, dict], path: str | Path) -> None:
    """Grouped bars of RMSE/MAE per method for the eval report."""
    methods = list(reports)
    rmse = [reports[m]["rmse"] for m in methods]
    mae = [reports[m]["mae"] for m in methods]
    x = np.arange(len(methods))
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(x - 0.18, rmse, width=0.36, label="RMSE", color="#3b6aa0")
    ax.bar(x + 0.18, mae, width=0.36, label="MAE", color="#a0623b")
    ax.set_xticks(x)
    ax.set_xticklabels(methods, rotation=15, ha="right")
    ax.set_ylabel("error (m/s$^2$)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
