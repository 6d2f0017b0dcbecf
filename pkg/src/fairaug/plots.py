"""Figure rendering for the report path.

Each function writes one PNG next to the delimited plot data. Figures
accept one report (audit mode) or two (comparison mode, e.g. before
and after reweighted augmentation).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import CONDITIONS, FairnessReport, cond_name

_DPI = 150


def _grouped_bars(ax, labels, series: dict[str, list], ylabel: str):
    x = np.arange(len(labels))
    width = 0.8 / max(len(series), 1)
    for i, (name, values) in enumerate(series.items()):
        vals = [v if v is not None else 0.0 for v in values]
        ax.bar(x + i * width, vals, width, label=name)
    ax.set_xticks(x + width * (len(series) - 1) / 2)
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_ylim(0, 1.05)
    if len(series) > 1:
        ax.legend()


def save_class_metrics_figure(
    reports: dict[str, FairnessReport], path: str | Path
) -> Path:
    """Per-class accuracy and F1 bars for one or two reports."""
    first = next(iter(reports.values()))
    labels = list(first.labels)
    fig, (ax_acc, ax_f1) = plt.subplots(1, 2, figsize=(11, 4))
    _grouped_bars(
        ax_acc,
        labels,
        {name: [c.accuracy for c in rep.per_class] for name, rep in reports.items()},
        "accuracy",
    )
    ax_acc.set_title("Per-class accuracy")
    _grouped_bars(
        ax_f1,
        labels,
        {name: [c.f1 for c in rep.per_class] for name, rep in reports.items()},
        "F1",
    )
    ax_f1.set_title("Per-class F1")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_fairness_figure(reports: dict[str, FairnessReport], path: str | Path) -> Path:
    """Demographic parity and equal opportunity by class, with disparities."""
    first = next(iter(reports.values()))
    labels = list(first.labels)
    fig, (ax_dp, ax_eo) = plt.subplots(1, 2, figsize=(11, 4))
    _grouped_bars(
        ax_dp,
        labels,
        {name: [rep.dp_by_class[y] for y in labels] for name, rep in reports.items()},
        "P(pred = class)",
    )
    dp_note = ", ".join(
        f"{name}: {rep.dp_disparity:.3f}" for name, rep in reports.items()
    )
    ax_dp.set_title(f"Demographic parity (disparity {dp_note})")
    _grouped_bars(
        ax_eo,
        labels,
        {name: [rep.eo_by_class[y] for y in labels] for name, rep in reports.items()},
        "true positive rate",
    )
    eo_note = ", ".join(
        f"{name}: {rep.eo_disparity:.3f}" for name, rep in reports.items()
    )
    ax_eo.set_title(f"Equal opportunity (disparity {eo_note})")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_confusion_figure(reports: dict[str, FairnessReport], path: str | Path) -> Path:
    fig, axes = plt.subplots(1, len(reports), figsize=(5.5 * len(reports), 4.5))
    if len(reports) == 1:
        axes = [axes]
    for ax, (name, rep) in zip(axes, reports.items()):
        counts = np.asarray(rep.confusion, dtype=float)
        row_sums = counts.sum(axis=1, keepdims=True)
        rates = np.divide(counts, row_sums, out=np.zeros_like(counts), where=row_sums > 0)
        im = ax.imshow(rates, cmap="Blues", vmin=0, vmax=1)
        ax.set_xticks(range(len(rep.labels)))
        ax.set_xticklabels(rep.labels, rotation=30, ha="right")
        ax.set_yticks(range(len(rep.labels)))
        ax.set_yticklabels(rep.labels)
        for i in range(len(rep.labels)):
            for j in range(len(rep.labels)):
                ax.text(
                    j, i, f"{int(counts[i, j])}", ha="center", va="center",
                    color="white" if rates[i, j] > 0.5 else "black", fontsize=8,
                )
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ax.set_title(name)
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_class_distribution_figure(
    class_counts: dict[str, int], path: str | Path, title: str = "Class distribution"
) -> Path:
    fig, ax = plt.subplots(figsize=(6.5, 4))
    labels = list(class_counts)
    ax.bar(labels, [class_counts[c] for c in labels])
    ax.set_ylabel("samples")
    ax.set_title(title)
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_intersection_figure(stats_rows: list, path: str | Path) -> Path:
    """Stacked condition counts per class (rows = IntersectionStats)."""
    labels = sorted({s.key.class_label for s in stats_rows})
    fig, ax = plt.subplots(figsize=(8, 4.5))
    bottom = np.zeros(len(labels))
    for cond in CONDITIONS:
        values = []
        for label in labels:
            values.append(
                sum(
                    s.count
                    for s in stats_rows
                    if s.key.class_label == label
                    and (s.key.lighting_cat, s.key.bg_cat) == cond
                )
            )
        ax.bar(labels, values, bottom=bottom, label=cond_name(cond))
        bottom += np.asarray(values, dtype=float)
    ax.set_ylabel("samples")
    ax.set_title("Intersection counts by class and condition")
    ax.legend(fontsize=8)
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
