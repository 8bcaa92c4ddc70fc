"""Central finite-difference verification of the hand-derived gradients."""
from __future__ import annotations

import numpy as np

from .losses import bce_from_scores, ce_from_logits
from .model import Model
from .structure import GraphTensors


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray,
                  floor: float = 1e-6) -> float:
    """Max elementwise |a - n| / max(|a|, |n|, floor). The floor keeps
    noise-dominated near-zero gradients from reporting spurious errors."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    b = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def finite_diff_check(loss_and_grad, params, eps: float = 1e-5,
                      floor: float = 1e-6) -> float:
    """Compare analytic parameter gradients against central differences.

    ``loss_and_grad()`` must run a full forward/backward from scratch,
    zeroing and repopulating every parameter's ``grad``, and return the
    scalar loss. Parameter values are perturbed in place and restored.
    Returns the worst relative error over every entry of every parameter.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    loss_and_grad()
    analytic = {p.name: p.grad.copy() for p in params}
    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        numeric = np.zeros(flat.size)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            f_plus = loss_and_grad()
            flat[k] = orig - eps
            f_minus = loss_and_grad()
            flat[k] = orig
            numeric[k] = (f_plus - f_minus) / (2.0 * eps)
        worst = max(worst, max_rel_error(analytic[p.name].reshape(-1),
                                         numeric, floor))
    return worst


def link_loss_closure(model: Model, gt: GraphTensors, src, dst, labels,
                      edge_weight=None, feat_mask=None):
    """Closure computing mean BCE over the given pairs and repopulating all
    gradients; suitable for finite_diff_check."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    y = np.asarray(labels, dtype=np.float64)

    def run():
        model.zero_grads()
        s, _ = model.forward_link(gt, src, dst, edge_weight, feat_mask)
        loss, d_s = bce_from_scores(s, y)
        model.backward_from_head(d_s)
        return loss

    return run


def clf_loss_closure(model: Model, gt: GraphTensors, label: int,
                     edge_weight=None, feat_mask=None):
    def run():
        model.zero_grads()
        logits, _ = model.forward_clf(gt, edge_weight, feat_mask)
        loss, d_logits = ce_from_logits(logits, [label])
        model.backward_from_head(d_logits)
        return loss

    return run


def input_grad_check(loss_for_array, array: np.ndarray,
                     analytic: np.ndarray, eps: float = 1e-5,
                     floor: float = 1e-6) -> float:
    """Finite-difference check of gradients w.r.t. an input array (edge
    weights or feature masks). ``loss_for_array(arr)`` evaluates the loss."""
    flat = array.reshape(-1)
    numeric = np.zeros(flat.size)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + eps
        f_plus = loss_for_array(array)
        flat[k] = orig - eps
        f_minus = loss_for_array(array)
        flat[k] = orig
        numeric[k] = (f_plus - f_minus) / (2.0 * eps)
    return max_rel_error(np.asarray(analytic).reshape(-1), numeric, floor)
