"""Classification metrics: macro-F1, accuracy, average recall, confusion."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import PreconditionError


@dataclass
class MetricsReport:
    """Headline metrics in [0, 1]; serialized x100 as reported in tables."""

    macro_f1: float
    accuracy: float
    avg_recall: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    confusion: np.ndarray
    train_minutes: float | None = field(default=None)

    def as_dict(self) -> dict:
        out = {
            "macro_f1": 100.0 * self.macro_f1,
            "accuracy": 100.0 * self.accuracy,
            "avg_recall": 100.0 * self.avg_recall,
            "per_class": {
                "precision": [100.0 * v for v in self.precision],
                "recall": [100.0 * v for v in self.recall],
                "f1": [100.0 * v for v in self.f1],
            },
            "confusion": self.confusion.astype(int).tolist(),
        }
        if self.train_minutes is not None:
            out["train_minutes"] = self.train_minutes
        return out


def compute_metrics(predictions, gold, n_classes) -> MetricsReport:
    """Per-class precision/recall/F1 with absent classes counted as 0.

    macro-F1 and average recall are unweighted means over all ``n_classes``
    classes; accuracy is the exact-match rate.
    """
    pred = np.asarray(predictions, dtype=np.int64)
    y = np.asarray(gold, dtype=np.int64)
    if pred.size == 0:
        raise PreconditionError("compute_metrics: empty input")
    if pred.shape != y.shape:
        raise PreconditionError("prediction and gold lengths differ")
    if pred.max() >= n_classes or y.max() >= n_classes or pred.min() < 0 or y.min() < 0:
        raise PreconditionError("class index out of range")

    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)

    support = confusion.sum(axis=1).astype(np.float64)
    predicted = confusion.sum(axis=0).astype(np.float64)
    tp = np.diag(confusion).astype(np.float64)

    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)

    return MetricsReport(
        macro_f1=float(f1.mean()),
        accuracy=float(tp.sum() / pred.size),
        avg_recall=float(recall.mean()),
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=confusion,
    )
