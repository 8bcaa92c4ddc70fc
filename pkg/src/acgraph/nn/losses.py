"""Cross-entropy losses with gradients.

The public ``bce_loss`` / ``ce_loss`` operate on probabilities (clamped at
1e-12 before the log). Training goes through the ``*_from_*`` variants,
which differentiate with respect to raw scores/logits for stability.
"""
from __future__ import annotations

import numpy as np

from .core import EPS_LOG, sigmoid, softmax


def bce_loss(pred, target):
    """Mean binary cross-entropy of probabilities ``pred`` against 0/1
    targets; returns (loss, d_loss/d_pred)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    p = np.clip(pred, EPS_LOG, 1.0 - EPS_LOG)
    n = p.size
    loss = float(-np.mean(target * np.log(p) + (1.0 - target) * np.log1p(-p)))
    grad = (-(target / p) + (1.0 - target) / (1.0 - p)) / n
    return loss, grad


def bce_from_scores(scores, target):
    """Binary cross-entropy through a sigmoid, stated in terms of the raw
    scores: loss uses the overflow-free log(1 + exp(-|s|)) form and the
    gradient is (sigmoid(s) - y) / n."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    n = s.size
    loss = float(np.mean(np.maximum(s, 0.0) - s * y + np.log1p(np.exp(-np.abs(s)))))
    grad = (sigmoid(s) - y) / n
    return loss, grad


def ce_loss(pred, target_idx):
    """Mean categorical cross-entropy of probability rows ``pred`` against
    integer class labels; returns (loss, d_loss/d_pred)."""
    p = np.clip(np.asarray(pred, dtype=np.float64), EPS_LOG, 1.0)
    y = np.asarray(target_idx, dtype=np.int64).reshape(-1)
    rows = np.arange(y.size)
    p2 = p.reshape(y.size, -1)
    loss = float(-np.mean(np.log(p2[rows, y])))
    grad = np.zeros_like(p2)
    grad[rows, y] = -1.0 / (p2[rows, y] * y.size)
    return loss, grad.reshape(np.asarray(pred).shape)


def ce_from_logits(logits, target_idx):
    """Softmax cross-entropy via log-sum-exp; gradient is softmax - onehot,
    averaged over the batch."""
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.asarray(target_idx, dtype=np.int64).reshape(-1)
    shift = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shift).sum(axis=1))
    rows = np.arange(y.size)
    loss = float(np.mean(lse - shift[rows, y]))
    grad = softmax(z)
    grad[rows, y] -= 1.0
    grad /= y.size
    return loss, grad.reshape(np.asarray(logits).shape)
