"""Matplotlib figure rendering for the CLI report paths.

Every function draws one figure and writes it to a file; nothing is shown
interactively (the Agg backend is forced so the CLI works headless).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_forecast_distribution(path, forecasts) -> None:
    """Grouped bars of the quantity distribution, one series per forecast."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    n = len(forecasts)
    quantities = np.arange(len(forecasts[0].probabilities))
    width = 0.8 / max(n, 1)
    for k, fc in enumerate(forecasts):
        offset = (k - (n - 1) / 2) * width
        label = f"{fc.cut} {fc.season} @ ${fc.price:g}"
        ax.bar(quantities + offset, fc.probabilities, width=width, label=label)
    ax.set_xlabel("units purchased")
    ax.set_ylabel("probability")
    ax.set_xticks(quantities)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_revenue_curve(path, sweep) -> None:
    """Expected revenue and quantity against price, argmax marked."""
    prices = [pt.price for pt in sweep.points]
    revenue = [pt.expected_revenue for pt in sweep.points]
    quantity = [pt.expected_quantity for pt in sweep.points]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(prices, revenue, marker="o", ms=3, label="expected revenue")
    ax.axvline(sweep.argmax_price, color="crimson", ls="--", lw=1)
    best = sweep.points[sweep.argmax_index]
    ax.plot([sweep.argmax_price], [best.expected_revenue], "r*", ms=12, label="argmax")
    ax.set_xlabel("price ($/lb)")
    ax.set_ylabel("expected revenue")
    ax2 = ax.twinx()
    ax2.plot(prices, quantity, color="gray", lw=1, alpha=0.7)
    ax2.set_ylabel("expected quantity", color="gray")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_preference_scatter(path, pairs) -> None:
    """Winter vs summer coefficients with the through-origin fit."""
    w = np.array([p[1] for p in pairs.pairs])
    s = np.array([p[2] for p in pairs.pairs])
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    ax.scatter(w, s, s=14, alpha=0.7)
    lim = 1.1 * max(np.abs(w).max(), np.abs(s).max())
    grid = np.linspace(-lim, lim, 3)
    ax.plot(grid, grid, color="gray", lw=1, ls=":", label="equality")
    ax.plot(grid, pairs.slope_through_origin * grid, color="crimson", lw=1,
            label=f"slope {pairs.slope_through_origin:.3f}")
    ax.set_xlabel("winter coefficient")
    ax.set_ylabel("summer coefficient")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_wtp_bars(path, table, cut: str, season: str) -> None:
    """Horizontal WTP bars for one cut and season."""
    cells = sorted(table.slice(cut, season).items(), key=lambda kv: kv[1])
    labels = [f"{attr}: {level}" for (attr, level), _ in cells]
    values = [v for _, v in cells]
    fig, ax = plt.subplots(figsize=(7, 0.25 * len(cells) + 1.2))
    ax.barh(np.arange(len(cells)), values, color=["crimson" if v < 0 else "steelblue" for v in values])
    ax.set_yticks(np.arange(len(cells)))
    ax.set_yticklabels(labels, fontsize=6)
    ax.axvline(0, color="black", lw=0.8)
    ax.set_xlabel("willingness to pay ($/lb)")
    ax.set_title(f"{cut} ({season})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_design_correlation(path, design) -> None:
    """Heatmap of absolute pairwise coded-column correlations."""
    from .design import _corr_and_degenerate, _matrix

    M, labels, groups = _matrix(design)
    corr, _ = _corr_and_degenerate(M, groups)
    fig, ax = plt.subplots(figsize=(8, 7))
    im = ax.imshow(np.abs(corr), vmin=0, vmax=max(0.2, np.abs(corr).max()), cmap="magma")
    ax.set_xticks(range(len(labels)))
    ax.set_yticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=5)
    ax.set_yticklabels(labels, fontsize=5)
    fig.colorbar(im, ax=ax, shrink=0.8, label="|correlation|")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
