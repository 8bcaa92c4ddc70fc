"""Task heads: bilinear edge scoring and mean-pooled graph classification."""
from __future__ import annotations

import numpy as np

from ..errors import EmptyGraph, ShapeMismatch
from .core import Parameter, glorot, sigmoid, softmax


def mean_readout(H: np.ndarray) -> np.ndarray:
    """Column-wise mean of node embeddings (permutation invariant)."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[0] == 0:
        raise EmptyGraph("mean_readout needs at least one node")
    return H.mean(axis=0)


def link_score(h_i, h_j, w) -> float:
    """Edge probability sigmoid(h_i . W h_j); strictly inside (0, 1)."""
    h_i = np.asarray(h_i, dtype=np.float64)
    h_j = np.asarray(h_j, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (h_i.shape[0], h_j.shape[0]):
        raise ShapeMismatch(f"bilinear W shape {w.shape} incompatible with "
                            f"({h_i.shape[0]}, {h_j.shape[0]}) embeddings")
    return float(sigmoid(h_i @ w @ h_j))


def classify_graph(h_g, w_g, b_g) -> np.ndarray:
    """Class distribution softmax(h_G W + b); components positive, sum 1."""
    h_g = np.asarray(h_g, dtype=np.float64)
    w_g = np.asarray(w_g, dtype=np.float64)
    b_g = np.asarray(b_g, dtype=np.float64).reshape(-1)
    if w_g.shape[0] != h_g.shape[0] or w_g.shape[1] != b_g.shape[0]:
        raise ShapeMismatch(f"classifier shapes incompatible: h {h_g.shape}, "
                            f"W {w_g.shape}, b {b_g.shape}")
    return softmax(h_g @ w_g + b_g)


class BilinearLinkHead:
    """Scores node pairs with s = h_src . W h_dst, p = sigmoid(s)."""

    def __init__(self, hidden: int, rng: np.random.Generator):
        self.w = Parameter("head.w", glorot(rng, hidden, hidden))

    @property
    def params(self):
        return [self.w]

    def forward(self, H: np.ndarray, src: np.ndarray, dst: np.ndarray):
        Hi = H[src]
        Hj = H[dst]
        HiW = Hi @ self.w.value
        s = np.einsum("bh,bh->b", HiW, Hj)
        self._cache = (H.shape[0], src, dst, Hi, Hj, HiW)
        return s, sigmoid(s)

    def backward(self, d_s: np.ndarray) -> np.ndarray:
        n, src, dst, Hi, Hj, HiW = self._cache
        self.w.grad += Hi.T @ (d_s[:, None] * Hj)
        dHi = d_s[:, None] * (Hj @ self.w.value.T)
        dHj = d_s[:, None] * HiW
        dH = np.zeros((n, Hi.shape[1]))
        np.add.at(dH, src, dHi)
        np.add.at(dH, dst, dHj)
        return dH


class SoftmaxGraphHead:
    """Mean readout followed by a two-class softmax layer."""

    def __init__(self, hidden: int, num_classes: int, rng: np.random.Generator):
        self.w = Parameter("head.w_g", glorot(rng, hidden, num_classes))
        self.b = Parameter("head.b_g", np.zeros((1, num_classes)))

    @property
    def params(self):
        return [self.w, self.b]

    def forward(self, H: np.ndarray):
        h_g = mean_readout(H)
        logits = h_g @ self.w.value + self.b.value[0]
        self._cache = (H.shape[0], h_g)
        return logits, softmax(logits)

    def backward(self, d_logits: np.ndarray) -> np.ndarray:
        n, h_g = self._cache
        self.w.grad += np.outer(h_g, d_logits)
        self.b.grad[0] += d_logits
        d_hg = self.w.value @ d_logits
        return np.tile(d_hg / n, (n, 1))
