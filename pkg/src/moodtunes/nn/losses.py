"""Batch-mean losses with analytic gradients.

Cross entropy takes probabilities (post-softmax) and clamps them to
[1e-12, 1] before the log, per the numerical contract of the models.
"""

import numpy as np

PROB_CLAMP = 1e-12


class LabelError(ValueError):
    """Targets are not the one-hot / shape the loss expects."""


def _check_cce_inputs(probs, one_hot):
    if probs.shape != one_hot.shape:
        raise LabelError(f"cross entropy: probs shape {probs.shape} != targets shape {one_hot.shape}")
    row_sums = probs.sum(axis=-1)
    if not np.allclose(row_sums, 1.0, atol=1e-6):
        raise LabelError("cross entropy: probability rows must sum to 1 within 1e-6")
    ones = np.isclose(one_hot, 1.0)
    zeros = np.isclose(one_hot, 0.0)
    if not (np.all(ones | zeros) and np.all(ones.sum(axis=-1) == 1)):
        raise LabelError("cross entropy: targets must be one-hot rows with exactly one 1")


def _cce_value(probs, one_hot):
    p = np.clip(probs, PROB_CLAMP, 1.0)
    n = probs.shape[0]
    return float(-(one_hot * np.log(p)).sum() / n)


def categorical_cross_entropy(probs, one_hot):
    """Mean negative log-likelihood of the true class."""
    _check_cce_inputs(probs, one_hot)
    return _cce_value(probs, one_hot)


def categorical_cross_entropy_grad(probs, one_hot):
    """d(loss)/d(probs)."""
    _check_cce_inputs(probs, one_hot)
    p = np.clip(probs, PROB_CLAMP, 1.0)
    n = probs.shape[0]
    return -(one_hot / p) / n


def mse(pred, target):
    """Batch-mean squared error."""
    if pred.shape != target.shape:
        raise LabelError(f"mse: pred shape {pred.shape} != target shape {target.shape}")
    n = pred.shape[0]
    return float(((pred - target) ** 2).sum() / n)


def mse_grad(pred, target):
    n = pred.shape[0]
    return 2.0 * (pred - target) / n


def mae(pred, target):
    """Batch-mean absolute error."""
    if pred.shape != target.shape:
        raise LabelError(f"mae: pred shape {pred.shape} != target shape {target.shape}")
    n = pred.shape[0]
    return float(np.abs(pred - target).sum() / n)


def mae_grad(pred, target):
    n = pred.shape[0]
    return np.sign(pred - target) / n


def one_hot(labels, n_classes):
    """Integer class labels -> one-hot float rows."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise LabelError(f"one_hot: labels must be 1-d, got shape {labels.shape}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= n_classes:
        raise LabelError(f"one_hot: labels outside [0, {n_classes})")
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
