"""Figures for quantifier-elimination reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .epsilon import EpsStats  # noqa: E402


def plot_eps_stats(stats: EpsStats, path: str, title: str = "") -> None:
    """Per-subterm nesting depth and binder count, saved to ``path``."""
    names = [s.name for s in stats.subterms]
    xs = range(len(names))
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(max(6, 0.45 * len(names) + 2), 6))
    top.bar(xs, [s.depth for s in stats.subterms], color="tab:blue")
    top.set_ylabel("nesting depth")
    bottom.bar(xs, [s.binders for s in stats.subterms], color="tab:orange")
    bottom.set_yscale("log")
    bottom.set_ylabel("epsilon binders")
    bottom.set_xticks(list(xs))
    bottom.set_xticklabels(names, rotation=60, ha="right")
    fig.suptitle(title or f"whole formula: depth {stats.depth}, {stats.binders} binders")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
