"""Message-passing layers with hand-derived reverse-mode gradients.

Each layer caches its forward intermediates and exposes
``backward(d_out) -> (d_in, d_edge_weight)``, accumulating parameter
gradients in place. Propagation treats the directed edge list as
symmetric; per-edge weights (all ones during normal training, learned
masks during explanation) scale messages without changing the
normalisation, so weight 1 reproduces the unweighted layer exactly.

Graphs here are desk-scale (tens of nodes), so operators are built as
dense n x n matrices; this keeps the backward passes to plain matrix
algebra.
"""
from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .core import Parameter, glorot, leaky_relu, leaky_relu_grad, relu
from .structure import GraphTensors

LEAKY_SLOPE = 0.2


def _check_in_dim(name: str, H: np.ndarray, expected: int):
    if H.shape[1] != expected:
        raise ShapeMismatch(
            f"{name}: input has {H.shape[1]} features, layer expects {expected}"
        )


class GCNLayer:
    """Symmetric-normalised convolution with self-loops:
    out = relu(S @ H @ W), S = Dhat^-1/2 (A_sym + I) Dhat^-1/2."""

    def __init__(self, name: str, in_dim: int, out_dim: int,
                 rng: np.random.Generator):
        self.in_dim = in_dim
        self.w = Parameter(f"{name}.w", glorot(rng, in_dim, out_dim))

    @property
    def params(self):
        return [self.w]

    def _operator(self, gt: GraphTensors, edge_weight):
        S = np.zeros((gt.n, gt.n))
        S[gt.sym_src, gt.sym_dst] = gt.gcn_entry_norm * gt.entry_weights(edge_weight)
        S[np.arange(gt.n), np.arange(gt.n)] = gt.gcn_self_norm
        return S

    def forward(self, gt: GraphTensors, H: np.ndarray,
                edge_weight=None) -> np.ndarray:
        _check_in_dim("gcn", H, self.in_dim)
        S = self._operator(gt, edge_weight)
        M = H @ self.w.value
        Z = S @ M
        self._cache = (gt, H, S, M, Z)
        return relu(Z)

    def backward(self, d_out: np.ndarray):
        gt, H, S, M, Z = self._cache
        dZ = d_out * (Z > 0.0)
        dM = S.T @ dZ
        self.w.grad += H.T @ dM
        dH = dM @ self.w.value.T
        dS = dZ @ M.T
        d_entries = dS[gt.sym_src, gt.sym_dst] * gt.gcn_entry_norm
        return dH, gt.scatter_entry_grads(d_entries)

    def kink_margin(self) -> float:
        Z = self._cache[4]
        return float(np.min(np.abs(Z))) if Z.size else np.inf


class SAGELayer:
    """Mean-aggregator update: out = relu(H W_self + mean_nbr(H) W_neigh).

    The mean runs over in- and out-neighbours; nodes without neighbours
    aggregate zero. Edge weights scale messages while the denominator stays
    the plain neighbour count.
    """

    def __init__(self, name: str, in_dim: int, out_dim: int,
                 rng: np.random.Generator):
        self.in_dim = in_dim
        self.w_self = Parameter(f"{name}.w_self", glorot(rng, in_dim, out_dim))
        self.w_neigh = Parameter(f"{name}.w_neigh", glorot(rng, in_dim, out_dim))

    @property
    def params(self):
        return [self.w_self, self.w_neigh]

    def _operator(self, gt: GraphTensors, edge_weight):
        M = np.zeros((gt.n, gt.n))
        M[gt.sym_src, gt.sym_dst] = (gt.sage_inv_deg[gt.sym_src]
                                     * gt.entry_weights(edge_weight))
        return M

    def forward(self, gt: GraphTensors, H: np.ndarray,
                edge_weight=None) -> np.ndarray:
        _check_in_dim("sage", H, self.in_dim)
        M = self._operator(gt, edge_weight)
        agg = M @ H
        Z = H @ self.w_self.value + agg @ self.w_neigh.value
        self._cache = (gt, H, M, agg, Z)
        return relu(Z)

    def backward(self, d_out: np.ndarray):
        gt, H, M, agg, Z = self._cache
        dZ = d_out * (Z > 0.0)
        self.w_self.grad += H.T @ dZ
        self.w_neigh.grad += agg.T @ dZ
        d_agg = dZ @ self.w_neigh.value.T
        dH = dZ @ self.w_self.value.T + M.T @ d_agg
        dM = d_agg @ H.T
        d_entries = dM[gt.sym_src, gt.sym_dst] * gt.sage_inv_deg[gt.sym_src]
        return dH, gt.scatter_entry_grads(d_entries)

    def kink_margin(self) -> float:
        Z = self._cache[4]
        return float(np.min(np.abs(Z))) if Z.size else np.inf


class GATLayer:
    """Single-head attention over the symmetrised neighbourhood plus self.

    e_ij = LeakyReLU(a_src . (W h_i) + a_dst . (W h_j)) for j in N(i) + {i},
    alpha = softmax_j(e_ij), out_i = relu(sum_j w_ij alpha_ij W h_j), with
    self-loop message weight fixed at 1.
    """

    def __init__(self, name: str, in_dim: int, out_dim: int,
                 rng: np.random.Generator):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.w = Parameter(f"{name}.w", glorot(rng, in_dim, out_dim))
        self.att = Parameter(f"{name}.att", glorot(rng, 2 * out_dim, 1))

    @property
    def params(self):
        return [self.w, self.att]

    def forward(self, gt: GraphTensors, H: np.ndarray,
                edge_weight=None) -> np.ndarray:
        _check_in_dim("gat", H, self.in_dim)
        n = gt.n
        diag = np.arange(n)
        nbr = np.zeros((n, n), dtype=bool)
        nbr[gt.sym_src, gt.sym_dst] = True
        nbr[diag, diag] = True

        Zt = H @ self.w.value
        a_src = self.att.value[: self.out_dim, 0]
        a_dst = self.att.value[self.out_dim:, 0]
        s1 = Zt @ a_src
        s2 = Zt @ a_dst
        C = s1[:, None] + s2[None, :]
        E = leaky_relu(C, LEAKY_SLOPE)
        masked = np.where(nbr, E, -np.inf)
        shifted = masked - masked.max(axis=1, keepdims=True)
        expo = np.where(nbr, np.exp(np.maximum(shifted, -30.0)), 0.0)
        alpha = expo / expo.sum(axis=1, keepdims=True)

        Wd = np.zeros((n, n))
        Wd[gt.sym_src, gt.sym_dst] = gt.entry_weights(edge_weight)
        Wd[diag, diag] = 1.0

        P = alpha * Wd
        pre = P @ Zt
        self._cache = (gt, H, Zt, C, nbr, alpha, Wd, P, pre)
        return relu(pre)

    def backward(self, d_out: np.ndarray):
        gt, H, Zt, C, nbr, alpha, Wd, P, pre = self._cache
        a_src = self.att.value[: self.out_dim, 0]
        a_dst = self.att.value[self.out_dim:, 0]

        d_pre = d_out * (pre > 0.0)
        dZt = P.T @ d_pre
        dP = d_pre @ Zt.T
        d_alpha = dP * Wd
        dWd = dP * alpha
        d_entries = dWd[gt.sym_src, gt.sym_dst]

        # softmax rows: alpha is zero off-neighbourhood, so dE vanishes there
        row_dot = (d_alpha * alpha).sum(axis=1, keepdims=True)
        dE = alpha * (d_alpha - row_dot)
        dC = dE * leaky_relu_grad(C, LEAKY_SLOPE)
        ds1 = dC.sum(axis=1)
        ds2 = dC.sum(axis=0)

        self.att.grad[: self.out_dim, 0] += Zt.T @ ds1
        self.att.grad[self.out_dim:, 0] += Zt.T @ ds2
        dZt += np.outer(ds1, a_src) + np.outer(ds2, a_dst)
        self.w.grad += H.T @ dZt
        dH = dZt @ self.w.value.T
        return dH, gt.scatter_entry_grads(d_entries)

    def kink_margin(self) -> float:
        gt, H, Zt, C, nbr, alpha, Wd, P, pre = self._cache
        margins = [np.min(np.abs(pre))] if pre.size else []
        if nbr.any():
            margins.append(np.min(np.abs(C[nbr])))
        return float(min(margins)) if margins else np.inf


def make_layer(arch: str, name: str, in_dim: int, out_dim: int,
               rng: np.random.Generator):
    if arch == "gcn":
        return GCNLayer(name, in_dim, out_dim, rng)
    if arch == "sage":
        return SAGELayer(name, in_dim, out_dim, rng)
    if arch == "gat":
        return GATLayer(name, in_dim, out_dim, rng)
    raise ValueError(f"unknown architecture {arch!r}")


# Functional forms of the layer updates, for direct use in tests and docs.

def gcn_layer(H, edges, w):
    """One unweighted GCN update on features ``H`` with parameter ``w``;
    ``edges`` is a list of (src_idx, dst_idx) pairs."""
    H = np.asarray(H, dtype=np.float64)
    gt = _adhoc_gt(H, edges)
    rng = np.random.default_rng(0)
    layer = GCNLayer("f", H.shape[1], np.asarray(w).shape[1], rng)
    layer.w.value[:] = np.asarray(w, dtype=np.float64)
    return layer.forward(gt, H)


def sage_layer(H, edges, w_self, w_neigh):
    H = np.asarray(H, dtype=np.float64)
    gt = _adhoc_gt(H, edges)
    layer = SAGELayer("f", H.shape[1], np.asarray(w_self).shape[1],
                      np.random.default_rng(0))
    layer.w_self.value[:] = np.asarray(w_self, dtype=np.float64)
    layer.w_neigh.value[:] = np.asarray(w_neigh, dtype=np.float64)
    return layer.forward(gt, H)


def gat_layer(H, edges, w, att):
    H = np.asarray(H, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    gt = _adhoc_gt(H, edges)
    layer = GATLayer("f", H.shape[1], w.shape[1], np.random.default_rng(0))
    layer.w.value[:] = w
    layer.att.value[:] = np.asarray(att, dtype=np.float64).reshape(-1, 1)
    return layer.forward(gt, H)


def _adhoc_gt(H: np.ndarray, edges) -> GraphTensors:
    src = np.asarray([e[0] for e in edges], dtype=np.int64)
    dst = np.asarray([e[1] for e in edges], dtype=np.int64)
    return GraphTensors("adhoc", H, src, dst)
