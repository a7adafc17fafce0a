"""Multiclass confusion matrix and precision/recall/F1."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts indexed (actual, predicted)."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("truth and prediction lengths differ")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (y_true, y_pred), 1)
    return m


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    flags: list[str] = field(default_factory=list)


@dataclass
class MetricSummary:
    matrix: np.ndarray
    per_class: dict[int, ClassMetrics]
    included: list[int]
    excluded: list[int]

    @property
    def macro_f1(self) -> float:
        if not self.included:
            return 0.0
        return float(sum(self.per_class[c].f1 for c in self.included) / len(self.included))


def summarize(matrix: np.ndarray) -> MetricSummary:
    """Per-class metrics from a confusion matrix.

    Classes with no true and no predicted rows are excluded from the macro
    average. A zero denominator yields 0 plus a flag naming the metric.
    """
    m = np.asarray(matrix, dtype=np.int64)
    tp = np.diag(m)
    pred = m.sum(axis=0)
    true = m.sum(axis=1)
    per_class, included, excluded = {}, [], []
    for c in range(m.shape[0]):
        if true[c] == 0 and pred[c] == 0:
            excluded.append(c)
            continue
        included.append(c)
        flags = []
        if pred[c]:
            p = tp[c] / pred[c]
        else:
            p = 0.0
            flags.append("precision-undefined")
        if true[c]:
            r = tp[c] / true[c]
        else:
            r = 0.0
            flags.append("recall-undefined")
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        per_class[c] = ClassMetrics(float(p), float(r), float(f1), int(true[c]), flags)
    return MetricSummary(m, per_class, included, excluded)


def macro_f1(y_true, y_pred, n_classes: int) -> float:
    return summarize(confusion_matrix(y_true, y_pred, n_classes)).macro_f1
