"""Matplotlib renderers for the report-producing CLI paths.

Figures are written to files next to the delimited reports; the Agg backend
keeps everything headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .kg import OverlapReport  # noqa: E402
from .lpeval import EvalReport  # noqa: E402


def save_overlap_figure(reports: Sequence[tuple[str, OverlapReport]], path: str | Path) -> None:
    """Bar chart: share of each extraction already present in the reference."""
    names = [name for name, _ in reports]
    pcts = [rep.pct_extracted_in_reference for _, rep in reports]
    sizes = [rep.n_extracted for _, rep in reports]

    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(names) + 1.5), 3.6))
    bars = ax.bar(names, pcts, color="#4878a8")
    for bar, pct, size in zip(bars, pcts, sizes):
        ax.annotate(
            f"{pct:.2f}%\n(n={size})",
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom",
            fontsize=8,
        )
    ax.set_ylabel("% of extracted edges in reference")
    ax.set_ylim(0, max(pcts + [1.0]) * 1.3)
    ax.set_title("Extraction overlap with reference graph")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_experiment_figure(rows: Sequence[tuple[str, EvalReport]], path: str | Path) -> None:
    """Two panels: mean rank per arm, and hit@k percentages per arm."""
    arms = [name for name, _ in rows]
    mrs = [rep.mr for _, rep in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))

    ax1.bar(arms, mrs, color="#a85448")
    ax1.set_ylabel("mean rank (lower is better)")
    ax1.set_title("Mean rank by graph")
    ax1.tick_params(axis="x", rotation=30)

    width = 0.25
    xs = range(len(arms))
    for offset, (label, key) in enumerate(
        [("hit@30", "hit30"), ("hit@3", "hit3"), ("hit@1", "hit1")]
    ):
        values = [getattr(rep, key) for _, rep in rows]
        ax2.bar([x + (offset - 1) * width for x in xs], values, width=width, label=label)
    ax2.set_xticks(list(xs))
    ax2.set_xticklabels(arms, rotation=30, ha="right")
    ax2.set_ylabel("%")
    ax2.set_title("hit@k by graph")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_loss_figure(losses: Sequence[float], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(range(1, len(losses) + 1), losses, lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("training loss")
    ax.set_title("Embedding training loss")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
