"""Figures written next to the CSV reports. Uses the non-interactive Agg backend."""

from __future__ import annotations

import math
from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ldts.pacing import PacingConfig, PacingKind, pacing_table  # noqa: E402

STRATEGY_COLORS = {"plain": "#4d4d4d", "clgnn": "#1f77b4", "ldts": "#d62728"}


def get_size_inches(width=6.0, height=None):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    return width, height if height else width * golden_ratio


@contextmanager
def report_style():
    rc = {
        "font.size": 9,
        "axes.spines.right": False,
        "axes.spines.top": False,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "lines.linewidth": 1.5,
        "legend.frameon": False,
        "savefig.dpi": 150,
        "savefig.bbox": "tight",
        # keeps PNG bytes stable between runs
        "svg.hashsalt": "ldts",
    }
    with plt.rc_context(rc):
        yield


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_pacing(lambda0: float, T: int, path, kinds=tuple(PacingKind)):
    with report_style():
        fig, ax = plt.subplots(figsize=get_size_inches(5))
        for kind in kinds:
            rows = pacing_table(PacingConfig(lambda0, T, kind))
            ax.plot([r[0] for r in rows], [r[1] for r in rows], label=kind.value)
        ax.set_xlabel("epoch")
        ax.set_ylabel("fraction of training nodes")
        ax.set_ylim(0, 1.05)
        ax.legend()
        return _save(fig, path)


def _mean_curve(runs, column):
    length = max(len(r) for r in runs)
    grid = np.full((len(runs), length), np.nan)
    for i, reports in enumerate(runs):
        grid[i, : len(reports)] = [getattr(rep, column) for rep in reports]
    with np.errstate(all="ignore"):
        return np.nanmean(grid, axis=0)


def plot_validation_curves(telemetry: dict, path):
    """``telemetry`` maps strategy name to a list of per-seed report lists."""
    with report_style():
        fig, ax = plt.subplots(figsize=get_size_inches(6))
        for name, runs in telemetry.items():
            ax.plot(_mean_curve(runs, "val_acc"), label=name, color=STRATEGY_COLORS.get(name))
        ax.set_xlabel("epoch")
        ax.set_ylabel("validation accuracy (mean over seeds)")
        ax.legend()
        return _save(fig, path)


def plot_selection_probability(runs, path):
    """Mean selection probability of clean vs. corrupted train nodes for ldts runs."""
    with report_style():
        fig, ax = plt.subplots(figsize=get_size_inches(6))
        clean = _mean_curve(runs, "mean_prob_clean")
        noisy = _mean_curve(runs, "mean_prob_noisy")
        ax.plot(clean, label="clean labels", color="#2ca02c")
        ax.plot(noisy, label="corrupted labels", color="#d62728")
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean selection probability")
        ax.legend()
        return _save(fig, path)
