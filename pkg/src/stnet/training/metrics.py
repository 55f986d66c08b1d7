"""Confusion matrix and per-class precision / recall / F1.

Matrix orientation: row = true class, column = predicted class, class 0
(nonviolent) first. Cell (0, 0) counts nonviolent clips predicted
nonviolent, (0, 1) nonviolent clips predicted violent, and so on.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..data.preprocess import CLASS_NAMES
from ..errors import DataError, ShapeError


def predict_labels(probs: np.ndarray) -> np.ndarray:
    """Argmax per row; ties go to the lower index (nonviolent)."""
    return np.argmax(probs, axis=1)


def confusion_matrix(predictions, labels, classes: int = 2) -> np.ndarray:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise ShapeError(f"predictions ({predictions.size}) and labels ({labels.size}) differ in length")
    if labels.size < 1:
        raise DataError("confusion matrix needs at least one sample")
    cm = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(cm, (labels, predictions), 1)
    return cm


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


@dataclass
class Metrics:
    accuracy: float
    precision: list
    recall: list
    f1: list
    confusion: list
    support: list
    loss: float | None = None
    zero_division: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(sum(sum(r) for r in self.confusion))

    def to_dict(self) -> dict:
        out = {
            "samples": self.n,
            "accuracy": self.accuracy,
            "loss": self.loss,
            "classes": {
                name: {
                    "precision": self.precision[k],
                    "recall": self.recall[k],
                    "f1": self.f1[k],
                    "support": self.support[k],
                }
                for k, name in enumerate(CLASS_NAMES)
            },
            "confusion_matrix": self.confusion,
            "confusion_orientation": "rows=true class, columns=predicted class, order=[nonviolent, violent]",
            "zero_division": self.zero_division,
        }
        return out

    def __str__(self):
        lines = [f"accuracy {self.accuracy:.4f}" + (f"  loss {self.loss:.4f}" if self.loss is not None else "")]
        for k, name in enumerate(CLASS_NAMES):
            lines.append(f"{name:>11s}  P {self.precision[k]:.2f}  R {self.recall[k]:.2f}  F1 {self.f1[k]:.2f}"
                         f"  n={self.support[k]}")
        lines.append(f"confusion {self.confusion}")
        return "\n".join(lines)


def metrics_from_confusion(cm, loss: float | None = None) -> Metrics:
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total < 1:
        raise DataError("no samples to score")
    precision, recall, f1, flags = [], [], [], []
    for k, name in enumerate(CLASS_NAMES[: cm.shape[0]]):
        tp = int(cm[k, k])
        pred_k = int(cm[:, k].sum())
        true_k = int(cm[k, :].sum())
        p = tp / pred_k if pred_k else 0.0
        r = tp / true_k if true_k else 0.0
        if not pred_k:
            flags.append(f"{name}:precision")
        if not true_k:
            flags.append(f"{name}:recall")
        if p + r == 0:
            flags.append(f"{name}:f1")
        precision.append(p)
        recall.append(r)
        f1.append(f1_score(p, r))
    return Metrics(
        accuracy=float(np.trace(cm)) / total,
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=cm.tolist(),
        support=cm.sum(axis=1).tolist(),
        loss=loss,
        zero_division=flags,
    )


def compute_metrics(predictions, labels, loss: float | None = None) -> Metrics:
    return metrics_from_confusion(confusion_matrix(predictions, labels), loss)


@dataclass
class HistoryRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float | None
    val_accuracy: float | None

    def to_dict(self):
        return asdict(self)


HISTORY_COLUMNS = ("epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy")


def write_history_csv(history, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for rec in history:
            w.writerow(["" if v is None else repr(v) for v in (getattr(rec, c) for c in HISTORY_COLUMNS)])
