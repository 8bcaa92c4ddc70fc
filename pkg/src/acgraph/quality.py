"""Semantic and structural quality of generated assurance cases.

Given a human-authored graph H and a generated graph L, the pipeline is:

1. score every (human node, generated node) pair by text similarity,
2. find the maximum-similarity one-to-one matching above a threshold,
3. project H's parent-child edges through the matching into L's node space
   and restrict L's edges to matched nodes,
4. compare the two edge sets with precision/recall/F1.

Node recall is the matched fraction of human nodes. Similarities are
cosine values mapped to [0, 1] via (cos + 1) / 2 so the threshold has a
fixed scale; pairs with byte-identical text score 1.0 outright, which
makes comparing a graph against itself an exact identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import max_weight_matching
from .errors import MissingFeature, ShapeMismatch
from .graphs import ArgNode, AssuranceGraph

DEFAULT_TAU = 0.5


def _feature_rows(nodes: list[ArgNode], override: np.ndarray | None) -> np.ndarray:
    if override is not None:
        arr = np.asarray(override, dtype=np.float64)
        if arr.shape[0] != len(nodes):
            raise ShapeMismatch(
                f"feature override has {arr.shape[0]} rows for {len(nodes)} nodes"
            )
        return arr
    rows = []
    for n in nodes:
        if n.feature is None:
            raise MissingFeature(n.id)
        rows.append(n.feature)
    return np.stack(rows).astype(np.float64)


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return mat / safe


def cosine_matrix(h_nodes, l_nodes, h_features=None, l_features=None) -> np.ndarray:
    """Raw cosine similarity of node feature vectors; rows with zero norm
    (e.g. hashed empty text) contribute cosine 0."""
    hf = _feature_rows(list(h_nodes), h_features)
    lf = _feature_rows(list(l_nodes), l_features)
    if hf.shape[1] != lf.shape[1]:
        raise ShapeMismatch(
            f"feature dims differ: {hf.shape[1]} vs {lf.shape[1]}"
        )
    return _unit_rows(hf) @ _unit_rows(lf).T


def similarity_matrix(h_nodes, l_nodes, h_features=None, l_features=None) -> np.ndarray:
    """Matching similarity in [0, 1]: (cosine + 1) / 2, with exact-text
    pairs overridden to 1.0 regardless of their features."""
    h_nodes = list(h_nodes)
    l_nodes = list(l_nodes)
    sim = (cosine_matrix(h_nodes, l_nodes, h_features, l_features) + 1.0) / 2.0
    np.clip(sim, 0.0, 1.0, out=sim)
    l_texts: dict[str, list[int]] = {}
    for j, ln in enumerate(l_nodes):
        l_texts.setdefault(ln.text, []).append(j)
    for i, hn in enumerate(h_nodes):
        for j in l_texts.get(hn.text, ()):
            sim[i, j] = 1.0
    return sim


def match_nodes(sim: np.ndarray, tau: float = DEFAULT_TAU) -> list[tuple[int, int]]:
    """One-to-one matching maximising total similarity over pairs with
    sim >= tau. Ties resolve toward lower (row, col) indices."""
    sim = np.asarray(sim, dtype=np.float64)
    if sim.size and (sim.min() < 0.0 or sim.max() > 1.0):
        raise ValueError("similarity entries must lie in [0, 1]")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    return max_weight_matching(sim, allowed=sim >= tau)


def project_edges(human: AssuranceGraph, generated: AssuranceGraph,
                  mapping: dict[str, str]):
    """Project human edges through the matching and restrict generated
    edges to matched nodes; both sets live in the generated graph's node-id
    space. ``mapping`` sends human node ids to generated node ids."""
    matched_targets = set(mapping.values())
    human_projected = {
        (mapping[e.src], mapping[e.dst])
        for e in human.edges
        if e.src in mapping and e.dst in mapping
    }
    generated_restricted = {
        (e.src, e.dst)
        for e in generated.edges
        if e.src in matched_targets and e.dst in matched_targets
    }
    return human_projected, generated_restricted


@dataclass(frozen=True)
class EdgePRF:
    precision: float
    recall: float
    f1: float
    intersection_size: int


def edge_prf(human_projected: set, generated_restricted: set) -> EdgePRF:
    """Edge-level precision / recall / F1 between the projected human edge
    set and the restricted generated edge set. Zero denominators yield 0 so
    reports stay total."""
    inter = len(human_projected & generated_restricted)
    precision = inter / len(generated_restricted) if generated_restricted else 0.0
    recall = inter / len(human_projected) if human_projected else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return EdgePRF(precision=precision, recall=recall, f1=f1,
                   intersection_size=inter)


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching one human graph against one generated graph."""

    pairs: tuple[tuple[str, str, float], ...]   # (human id, generated id, sim)
    node_recall: float
    human_edges_projected: frozenset[tuple[str, str]]
    llm_edges_restricted: frozenset[tuple[str, str]]
    mean_matched_cosine: float
    edge_scores: EdgePRF


def match_graphs(human: AssuranceGraph, generated: AssuranceGraph,
                 tau: float = DEFAULT_TAU,
                 h_features=None, l_features=None) -> MatchResult:
    """Full quality comparison of one (human, generated) graph pair."""
    h_nodes = list(human.nodes)
    l_nodes = list(generated.nodes)
    raw_cos = cosine_matrix(h_nodes, l_nodes, h_features, l_features)
    sim = similarity_matrix(h_nodes, l_nodes, h_features, l_features)
    idx_pairs = match_nodes(sim, tau)

    pairs = tuple(
        (h_nodes[i].id, l_nodes[j].id, float(sim[i, j])) for i, j in idx_pairs
    )
    mapping = {h: l for h, l, _ in pairs}
    projected, restricted = project_edges(human, generated, mapping)
    matched_cos = (
        float(np.mean([raw_cos[i, j] for i, j in idx_pairs])) if idx_pairs else 0.0
    )
    return MatchResult(
        pairs=pairs,
        node_recall=len(pairs) / len(h_nodes),
        human_edges_projected=frozenset(projected),
        llm_edges_restricted=frozenset(restricted),
        mean_matched_cosine=matched_cos,
        edge_scores=edge_prf(projected, restricted),
    )


QUALITY_COLUMNS = ("cosine", "node_recall", "edge_precision", "edge_recall",
                   "edge_f1")


def corpus_quality_report(pairs, tau: float = DEFAULT_TAU) -> dict:
    """Quality metrics for a list of (human graph, generated graph) pairs,
    averaged (unweighted) per human source tag.

    Pairs are evaluated in graph-id order so aggregation is deterministic.
    Returns {"tau", "pairs": [per-pair rows], "by_source": {tag: means}}.
    """
    ordered = sorted(pairs, key=lambda hl: (hl[0].graph_id, hl[1].graph_id))
    rows = []
    for human, generated in ordered:
        res = match_graphs(human, generated, tau)
        rows.append({
            "human_id": human.graph_id,
            "llm_id": generated.graph_id,
            "source_tag": human.source_tag,
            "cosine": res.mean_matched_cosine,
            "node_recall": res.node_recall,
            "edge_precision": res.edge_scores.precision,
            "edge_recall": res.edge_scores.recall,
            "edge_f1": res.edge_scores.f1,
        })
    by_source: dict[str, dict] = {}
    for tag in sorted({r["source_tag"] for r in rows}):
        grp = [r for r in rows if r["source_tag"] == tag]
        by_source[tag] = {
            col: float(np.mean([r[col] for r in grp])) for col in QUALITY_COLUMNS
        }
        by_source[tag]["num_pairs"] = len(grp)
    return {"tau": tau, "pairs": rows, "by_source": by_source}


def auto_pair(corpus) -> list[tuple[AssuranceGraph, AssuranceGraph]]:
    """Pair human with generated graphs whose ids share a base name once
    provenance markers ("human"/"llm" tokens and separators) are stripped.
    Explicit pair files take precedence over this convention."""
    def base(gid: str) -> str:
        parts = [p for p in gid.replace("-", "_").split("_")
                 if p.lower() not in ("human", "llm")]
        return "_".join(parts)

    humans: dict[str, list[AssuranceGraph]] = {}
    llms: dict[str, list[AssuranceGraph]] = {}
    for g in corpus.graphs:
        bucket = humans if g.provenance.value == "human" else (
            llms if g.provenance.value == "llm" else None)
        if bucket is not None:
            bucket.setdefault(base(g.graph_id), []).append(g)
    out = []
    for key in sorted(set(humans) & set(llms)):
        if len(humans[key]) == 1 and len(llms[key]) == 1:
            out.append((humans[key][0], llms[key][0]))
    return out
