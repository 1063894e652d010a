"""Confusion matrix and per-class recall reporting.

Recall is the headline metric; precision and F1 ride along in the text
table for debugging. Percentages are rounded half away from zero to two
decimals.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from vizpipe.errors import LabelRangeError, LengthMismatchError


@dataclass(eq=False, frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (K, K) int64; rows true class, cols predicted
    class_labels: tuple[str, ...]

    def __post_init__(self):
        self.counts.setflags(write=False)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EvalReport:
    class_labels: tuple[str, ...]
    per_class_recall: dict[str, float]  # zero-support classes are absent
    per_class_support: dict[str, int]
    accuracy: float | None
    per_class_precision: dict[str, float]
    per_class_f1: dict[str, float]


def confusion(true_labels, predicted_labels, k: int, class_labels=None) -> ConfusionMatrix:
    """Tally (true, predicted) pairs into a KxK count matrix."""
    if len(true_labels) != len(predicted_labels):
        raise LengthMismatchError(
            f"{len(true_labels)} true labels vs {len(predicted_labels)} predictions"
        )
    counts = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if not (0 <= t < k) or not (0 <= p < k):
            raise LabelRangeError(f"label pair ({t}, {p}) outside [0, {k})")
        counts[t, p] += 1
    labels = tuple(class_labels) if class_labels else tuple(f"class_{i}" for i in range(k))
    if len(labels) != k:
        raise LengthMismatchError(f"{len(labels)} labels for {k} classes")
    return ConfusionMatrix(counts, labels)


def recall_report(cm: ConfusionMatrix) -> EvalReport:
    """Per-class recall (and supplementary precision/F1) from the tallies."""
    recall: dict[str, float] = {}
    precision: dict[str, float] = {}
    f1: dict[str, float] = {}
    support: dict[str, int] = {}
    for i, label in enumerate(cm.class_labels):
        row = int(cm.counts[i].sum())
        support[label] = row
        if row == 0:
            continue
        tp = int(cm.counts[i, i])
        recall[label] = tp / row
        col = int(cm.counts[:, i].sum())
        if col > 0:
            precision[label] = tp / col
        denom = recall[label] + precision.get(label, 0.0)
        if denom > 0:
            f1[label] = 2 * recall[label] * precision.get(label, 0.0) / denom
    total = cm.total
    accuracy = float(np.trace(cm.counts)) / total if total else None
    return EvalReport(cm.class_labels, recall, support, accuracy, precision, f1)


def format_percent(value: float) -> str:
    """Two-decimal percentage, ties rounded away from zero: 0.9984 -> '99.84%'."""
    pct = Decimal(value) * 100
    return f"{pct.quantize(Decimal('0.01'), rounding=ROUND_HALF_UP)}%"


def report_to_text(r: EvalReport) -> str:
    """Fixed-format table; classes with zero support are omitted."""
    buf = io.StringIO()
    header = f"{'Class':<16}{'Support':>10}{'Recall':>10}{'Precision':>12}{'F1':>10}"
    buf.write(header + "\n")
    buf.write("-" * len(header) + "\n")
    for label in r.class_labels:
        if r.per_class_support.get(label, 0) == 0:
            continue
        rec = format_percent(r.per_class_recall[label])
        prec = (
            format_percent(r.per_class_precision[label])
            if label in r.per_class_precision
            else "-"
        )
        f1 = format_percent(r.per_class_f1[label]) if label in r.per_class_f1 else "-"
        buf.write(
            f"{label:<16}{r.per_class_support[label]:>10}{rec:>10}{prec:>12}{f1:>10}\n"
        )
    if r.accuracy is not None:
        buf.write(f"\nOverall accuracy: {format_percent(r.accuracy)}\n")
    return buf.getvalue()


def report_to_csv(r: EvalReport) -> str:
    """CSV export: class,support,recall (recall as a bare ratio)."""
    lines = ["class,support,recall"]
    for label in r.class_labels:
        if r.per_class_support.get(label, 0) == 0:
            continue
        lines.append(
            f"{label},{r.per_class_support[label]},{r.per_class_recall[label]:.6f}"
        )
    return "\n".join(lines) + "\n"
