"""Evaluation metrics: confusion-matrix scores and regression errors.

A regression evaluation still reports an F1 score: predicted and true
ages are collapsed into the recommender's four age buckets and scored as
a 4-class problem. That keeps every sweep row comparable on one column.
"""

from dataclasses import dataclass, field

import numpy as np

from .recommend import AgeBucket, bucket_age


@dataclass(frozen=True)
class Metrics:
    accuracy: float = None
    f1_macro: float = None
    mse: float = None
    mae: float = None
    per_class_f1: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("accuracy", "f1_macro"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v} outside [0, 1]")
        for name in ("mse", "mae"):
            v = getattr(self, name)
            if v is not None and v < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {v}")


def confusion_matrix(y_true, y_pred, n_classes):
    """rows = true class, columns = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def per_class_f1(cm):
    """F1 per class from a confusion matrix; empty classes score 0."""
    scores = []
    for c in range(cm.shape[0]):
        tp = cm[c, c]
        fp = cm[:, c].sum() - tp
        fn = cm[c, :].sum() - tp
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return [float(s) for s in scores]


def macro_f1(cm):
    return float(np.mean(per_class_f1(cm)))


def accuracy(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))


def classification_metrics(y_true, y_pred, n_classes):
    cm = confusion_matrix(y_true, y_pred, n_classes)
    scores = per_class_f1(cm)
    return Metrics(
        accuracy=accuracy(y_true, y_pred),
        f1_macro=float(np.mean(scores)),
        per_class_f1=scores,
    )


def regression_metrics(y_true, y_pred):
    """MSE/MAE in years, plus age-bucket F1 (see module docstring)."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    err = y_pred - y_true
    true_buckets = [int(bucket_age(a)) for a in y_true]
    pred_buckets = [int(bucket_age(a)) for a in y_pred]
    cm = confusion_matrix(true_buckets, pred_buckets, len(AgeBucket))
    scores = per_class_f1(cm)
    return Metrics(
        f1_macro=float(np.mean(scores)),
        mse=float(np.mean(err**2)),
        mae=float(np.mean(np.abs(err))),
        per_class_f1=scores,
    )
