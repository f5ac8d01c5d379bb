"""Evaluation metrics: accuracy, F1, mean absolute error, Pearson r."""

from dataclasses import dataclass

import numpy as np


@dataclass
class EvalReport:
    """Task-dependent metric bundle over one evaluation pass.

    Classification fills accuracy/f1 and per_class counts; regression fills
    mae/pearson_r. pearson_r is None when either series has zero variance
    (undefined, deliberately not reported as 0).
    """

    task: str
    n: int
    accuracy: float = None
    f1: float = None
    mae: float = None
    pearson_r: float = None
    per_class: dict = None

    def to_dict(self):
        out = {"task": self.task, "n": self.n}
        for key in ("accuracy", "f1", "mae", "pearson_r"):
            value = getattr(self, key)
            if value is not None or (key == "pearson_r" and self.task == "regression"):
                out[key] = value
        if self.per_class is not None:
            out["per_class"] = {str(k): v for k, v in self.per_class.items()}
        return out


def accuracy(preds, labels):
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    return float(np.mean(preds == labels))


def _binary_f1(preds, labels, positive):
    tp = int(np.sum((preds == positive) & (labels == positive)))
    fp = int(np.sum((preds == positive) & (labels != positive)))
    fn = int(np.sum((preds != positive) & (labels == positive)))
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def f1_score(preds, labels, n_classes):
    """Binary F1 (positive class 1) for two classes, macro average above."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if n_classes == 2:
        return _binary_f1(preds, labels, positive=1)
    return float(np.mean([_binary_f1(preds, labels, c) for c in range(n_classes)]))


def mae(preds, targets):
    return float(np.mean(np.abs(np.asarray(preds) - np.asarray(targets))))


def pearson_r(x, y):
    """Sample correlation; None when either variance is zero."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(np.dot(dx, dx))
    vy = float(np.dot(dy, dy))
    if vx == 0.0 or vy == 0.0:
        return None
    return float(np.dot(dx, dy) / np.sqrt(vx * vy))


def metrics(preds, labels, task):
    """Score predictions against labels for a TaskSpec.

    Classification reports exact-match accuracy and F1 plus per-class label
    counts; regression reports MAE and Pearson r.
    """
    if len(preds) != len(labels) or len(preds) == 0:
        raise ValueError(
            f"need equal, non-empty prediction/label lists, got "
            f"{len(preds)} vs {len(labels)}"
        )
    n = len(preds)
    if task.kind == "classification":
        labels_arr = np.asarray(labels, dtype=np.int64)
        counts = {
            int(c): int(np.sum(labels_arr == c)) for c in range(task.n_classes)
        }
        return EvalReport(
            task=task.kind,
            n=n,
            accuracy=accuracy(preds, labels_arr),
            f1=f1_score(preds, labels_arr, task.n_classes),
            per_class=counts,
        )
    return EvalReport(
        task=task.kind,
        n=n,
        mae=mae(preds, labels),
        pearson_r=pearson_r(preds, labels),
    )
