"""Report figures rendered next to the delimited outputs."""

from __future__ import annotations

from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bias import BiasReport
from .evalmetrics import CellReport, SegMetrics, VqaReport


def save_bias_figure(report: BiasReport, path: str | Path) -> None:
    """Grouped bars of prior/uniform/bias score per report row."""
    rows = report.rows
    x = np.arange(len(rows))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6, 1.1 * len(rows)), 4))
    ax.bar(x - width, [r.prior for r in rows], width, label="prior")
    ax.bar(x, [r.uniform for r in rows], width, label="uniform")
    ax.bar(x + width, [r.lb_score for r in rows], width, label="bias score")
    ax.set_xticks(x)
    ax.set_xticklabels([r.row for r in rows], rotation=30, ha="right")
    ax.set_ylabel("score")
    ax.set_title("Answer/cell distribution bias")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_answer_histogram(counts: Counter, path: str | Path, top: int = 30) -> None:
    common = counts.most_common(top)
    labels = [k for k, _ in common]
    values = [v for _, v in common]
    fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(labels)), 5))
    ax.bar(np.arange(len(labels)), values)
    ax.set_xticks(np.arange(len(labels)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("count")
    ax.set_title(f"Most frequent answers (top {len(labels)})")
    fig.subplots_adjust(bottom=0.45)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_vqa_figure(report: VqaReport, path: str | Path) -> None:
    names = list(report.per_type_accuracy) + ["overall", "average"]
    values = list(report.per_type_accuracy.values()) + [
        report.overall_accuracy,
        report.average_accuracy,
    ]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(np.arange(len(names)), values)
    ax.set_xticks(np.arange(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("accuracy")
    ax.set_title("Answer accuracy by question type")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_cell_figure(report: CellReport, path: str | Path) -> None:
    names = ["micro F1", "precision", "recall"]
    values = [report.micro_f1, report.precision, report.recall]
    if report.correlation is not None:
        names.append("correlation")
        values.append(report.correlation)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(np.arange(len(names)), values)
    ax.set_xticks(np.arange(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("score")
    ax.set_title("Cell grounding metrics")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_confusion_figure(cm: np.ndarray, path: str | Path, seg: SegMetrics | None = None) -> None:
    cm = np.asarray(cm, dtype=np.float64)
    rowsum = cm.sum(axis=1, keepdims=True)
    norm = np.divide(cm, rowsum, out=np.zeros_like(cm), where=rowsum > 0)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(norm, cmap="viridis", vmin=0, vmax=1)
    ax.set_xlabel("predicted")
    ax.set_ylabel("ground truth")
    title = "Row-normalized confusion matrix"
    if seg is not None:
        title += f"  (PA={seg.pixel_accuracy:.3f}, mIoU={seg.miou:.3f})"
    ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
