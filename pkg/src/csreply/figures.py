"""Matplotlib figures rendered next to the delimited report outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import EvalReport  # noqa: E402
from .trainer import EpochLoss  # noqa: E402


def plot_loss_curve(log: Sequence[EpochLoss], path: str | Path) -> None:
    epochs = [r.epoch for r in log]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [r.total for r in log], label="total", color="tab:blue")
    ax.plot(epochs, [r.mr_loss for r in log], label="matching", color="tab:orange")
    ax.plot(epochs, [r.tr_loss for r in log], label="translation", color="tab:green")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss")
    ax.set_title("Training loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rank_histogram(report: EvalReport, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ranks = report.ranks or [report.response_set_size]
    bins = min(50, max(10, report.response_set_size // 10))
    ax.hist(ranks, bins=bins, color="tab:blue", edgecolor="black", linewidth=0.3)
    ax.set_xlabel("rank of reference reply")
    ax.set_ylabel("queries")
    ax.set_title(f"Rank distribution (MRR={report.mrr:.4f}, baseline={report.baseline_mrr_closed_form:.4g})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_mrr_bars(report: EvalReport, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.bar(
        ["random", report.model_name],
        [report.baseline_mrr_closed_form, report.mrr],
        color=["tab:gray", "tab:blue"],
    )
    ax.set_ylabel("MRR")
    ax.set_title("MRR vs. random baseline")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
