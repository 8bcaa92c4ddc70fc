"""Per-graph arrays consumed by the message-passing layers.

Directed edges are kept as given; propagation treats them symmetrically,
so the structure also carries the symmetrised entry list. Each symmetrised
entry remembers which directed edge owns it: per-edge weights (explanation
masks) scale both directions of their edge, and weight gradients flow back
to the owning edge. When both (u, v) and (v, u) exist as separate edges,
each ordered entry is owned by its own direction.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from ..errors import ShapeMismatch
from ..graphs import AssuranceGraph


class GraphTensors:
    def __init__(self, graph_id: str, x: np.ndarray,
                 edge_src: np.ndarray, edge_dst: np.ndarray,
                 label: int | None = None):
        self.graph_id = graph_id
        self.x = np.ascontiguousarray(x, dtype=np.float64)
        if self.x.ndim != 2:
            raise ShapeMismatch(f"features must be 2-D, got {self.x.shape}")
        self.n = self.x.shape[0]
        self.edge_src = np.asarray(edge_src, dtype=np.int64)
        self.edge_dst = np.asarray(edge_dst, dtype=np.int64)
        self.label = label

        directed = {(int(u), int(v)): k
                    for k, (u, v) in enumerate(zip(self.edge_src, self.edge_dst))}
        sym_src, sym_dst, sym_owner = [], [], []
        for (u, v), k in directed.items():
            sym_src.append(u)
            sym_dst.append(v)
            sym_owner.append(k)
        for (u, v), k in directed.items():
            if (v, u) not in directed:
                sym_src.append(v)
                sym_dst.append(u)
                sym_owner.append(k)
        self.sym_src = np.asarray(sym_src, dtype=np.int64)
        self.sym_dst = np.asarray(sym_dst, dtype=np.int64)
        self.sym_owner = np.asarray(sym_owner, dtype=np.int64)
        # undirected neighbour count (entries are unique ordered pairs)
        self.deg = np.bincount(self.sym_src, minlength=self.n).astype(np.float64)

    @property
    def num_edges(self) -> int:
        return self.edge_src.shape[0]

    @classmethod
    def from_graph(cls, g: AssuranceGraph, label: int | None = None) -> "GraphTensors":
        src, dst = g.edge_index_arrays()
        return cls(g.graph_id, g.feature_matrix(), src, dst, label=label)

    # -- propagation constants -------------------------------------------

    @cached_property
    def gcn_entry_norm(self) -> np.ndarray:
        """1/sqrt(dhat_u * dhat_v) per symmetrised entry, dhat = deg + 1."""
        dhat = self.deg + 1.0
        return 1.0 / np.sqrt(dhat[self.sym_src] * dhat[self.sym_dst])

    @cached_property
    def gcn_self_norm(self) -> np.ndarray:
        return 1.0 / (self.deg + 1.0)

    @cached_property
    def sage_inv_deg(self) -> np.ndarray:
        out = np.zeros(self.n)
        nz = self.deg > 0
        out[nz] = 1.0 / self.deg[nz]
        return out

    def entry_weights(self, edge_weight: np.ndarray | None) -> np.ndarray:
        if edge_weight is None:
            return np.ones(self.sym_src.shape[0])
        edge_weight = np.asarray(edge_weight, dtype=np.float64)
        if edge_weight.shape != (self.num_edges,):
            raise ShapeMismatch(
                f"edge_weight has shape {edge_weight.shape}, expected ({self.num_edges},)"
            )
        return edge_weight[self.sym_owner]

    def scatter_entry_grads(self, d_entries: np.ndarray) -> np.ndarray:
        """Fold per-entry weight gradients back onto directed edges."""
        out = np.zeros(self.num_edges)
        np.add.at(out, self.sym_owner, d_entries)
        return out

    # -- perturbed variants (hard removal, for fidelity metrics) ----------

    def with_features(self, x: np.ndarray) -> "GraphTensors":
        return GraphTensors(self.graph_id, x, self.edge_src, self.edge_dst,
                            label=self.label)

    def keep_edges(self, keep: np.ndarray) -> "GraphTensors":
        keep = np.asarray(keep, dtype=bool)
        return GraphTensors(self.graph_id, self.x,
                            self.edge_src[keep], self.edge_dst[keep],
                            label=self.label)

    def remove_nodes(self, node_idx) -> "GraphTensors":
        """Zero the feature rows of ``node_idx`` and drop incident edges.

        Node count stays fixed so predictions remain comparable."""
        removed = np.zeros(self.n, dtype=bool)
        removed[list(node_idx)] = True
        x = self.x.copy()
        x[removed] = 0.0
        keep = ~(removed[self.edge_src] | removed[self.edge_dst])
        return GraphTensors(self.graph_id, x,
                            self.edge_src[keep], self.edge_dst[keep],
                            label=self.label)

    def keep_only_nodes(self, node_idx) -> "GraphTensors":
        kept = np.zeros(self.n, dtype=bool)
        kept[list(node_idx)] = True
        return self.remove_nodes(np.flatnonzero(~kept))
