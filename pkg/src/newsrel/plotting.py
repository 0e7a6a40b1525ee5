"""Figures written next to the CSV/JSON reports."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import CorrelationResult, GridSearchResult  # noqa: E402
from .stats import average_ranks  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "svg.hashsalt": "newsrel",
}

# fixed metadata keeps repeated runs byte-identical
_META = {"png": {"Software": None}, "svg": {"Date": None, "Creator": None}, "pdf": {"CreationDate": None, "Creator": None, "Producer": None}}


def _save(fig, path) -> None:
    fmt = str(path).rsplit(".", 1)[-1].lower()
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_META.get(fmt))
    plt.close(fig)


def plot_grid_search(result: GridSearchResult, path, label: str | None = None) -> None:
    """Mean macro-F1 per grid value with a 95% band; the selected value is marked."""
    x = np.array([p.value for p in result.points], dtype=float)
    mean = np.array([p.mean for p in result.points])
    ci = np.array([p.ci95 for p in result.points])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 2.6))
        ax.plot(x, mean, marker=".", lw=1.2, label=label or result.strategy)
        ax.fill_between(x, mean - ci, mean + ci, alpha=0.25, lw=0)
        ax.plot([result.selected], [result.selected_mean], "o", ms=6, mfc="none", mec="k")
        ax.set_xlabel(r"$\gamma$" if result.parameter == "gamma" else r"$n$")
        ax.set_ylabel("macro F1")
        ax.legend(frameon=False, loc="lower left")
        _save(fig, path)


def plot_correlation(result: CorrelationResult, path) -> None:
    """Rank of the estimated score against rank of the human score."""
    rx = average_ranks(result.reference)
    ry = average_ranks(result.rho)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.2, 3.2))
        ax.scatter(rx, ry, s=10, alpha=0.7, edgecolors="none")
        lim = (0.5, len(rx) + 0.5)
        ax.plot(lim, lim, ls=":", lw=0.8, color="0.5")
        ax.set_xlim(lim)
        ax.set_ylim(lim)
        ax.set_xlabel("reference score rank")
        ax.set_ylabel(f"{result.strategy} rank")
        ax.set_title(f"PCC={result.pcc:.3f}  SRCC={result.srcc:.3f}  ({result.setting})", fontsize=8)
        _save(fig, path)
