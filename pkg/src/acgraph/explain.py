"""Post-hoc explanation of the provenance classifier and its faithfulness.

``learn_masks`` learns a soft mask per edge and per feature dimension that
keeps the model's prediction while staying sparse: minimise the
cross-entropy of the masked prediction against the model's original
predicted class, plus size (mean mask) and binary-entropy regularisers.
Masks start at 0.5 (zero logits) and are optimised with Adam.

Faithfulness is scored by correctness change under hard removal:

* Fid+  = 1[correct on the full graph] - 1[correct without the top
  elements]; high means the explanation captured decisive structure.
* Fid-  = 1[correct on the full graph] - 1[correct on the top elements
  alone]; low means the explanation alone suffices.
* GEF   = 1 - exp(-KL(p_full || p_masked)) on the 0.5-thresholded mask;
  0 means the masked subgraph reproduces the prediction exactly (it is an
  unfaithfulness score: lower is better).

Node removal zeroes the node's feature row and drops incident edges, so
graph size (and the readout denominator) stays fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .errors import InsufficientData, UntrainedModel
from .graphs import Provenance
from .nn import Adam, GraphTensors, Model, Parameter, sigmoid
from .nn.core import EPS_LOG
from .nn.losses import ce_from_logits

FIDELITY_MODES = ("node_plus", "node_minus", "edge_plus", "edge_minus")


@dataclass(frozen=True)
class ExplainConfig:
    epochs: int = 100
    lr: float = 0.01
    lambda_size: float = 0.005
    lambda_entropy: float = 1.0


@dataclass
class ExplanationMask:
    graph_id: str
    edge_mask: np.ndarray        # (E,) in [0, 1], aligned with edge order
    feat_mask: np.ndarray        # (d,) in [0, 1]
    predicted: int               # model's class on the full graph
    converged: bool
    objective_initial: float
    objective_final: float


@dataclass(frozen=True)
class FaithfulnessScores:
    node_fid_plus: float
    node_fid_minus: float
    edge_fid_plus: float
    edge_fid_minus: float
    gef: float


def _binary_entropy(m: np.ndarray) -> np.ndarray:
    p = np.clip(m, EPS_LOG, 1.0 - EPS_LOG)
    return -p * np.log(p) - (1.0 - p) * np.log1p(-p)


def _binary_entropy_grad(m: np.ndarray) -> np.ndarray:
    p = np.clip(m, EPS_LOG, 1.0 - EPS_LOG)
    return np.log((1.0 - p) / p)


def learn_masks(model: Model, gt: GraphTensors,
                cfg: ExplainConfig = ExplainConfig()) -> ExplanationMask:
    """Learn edge and feature masks explaining the classifier's prediction
    on one graph. Deterministic: zero-logit init, fixed update order; the
    best-objective iterate is returned, so the final objective never
    exceeds the initial one."""
    if model.config.head != "classifier":
        raise UntrainedModel("mask learning explains the graph classifier")
    if not model.trained:
        raise UntrainedModel("model has not been trained")

    E = gt.num_edges
    d = gt.x.shape[1]
    logits_full, p_full = model.forward_clf(gt)
    target = int(np.argmax(p_full))

    theta = Parameter("mask.edge_logits", np.zeros((max(E, 1), 1)))
    phi = Parameter("mask.feat_logits", np.zeros((d, 1)))
    opt = Adam([theta, phi], lr=cfg.lr, weight_decay=0.0)

    def masks():
        em = sigmoid(theta.value[:, 0])[:E]
        fm = sigmoid(phi.value[:, 0])
        return em, fm

    def objective_terms(em, fm):
        logits, _ = model.forward_clf(gt, edge_weight=em if E else None,
                                      feat_mask=fm)
        ce, d_logits = ce_from_logits(logits, [target])
        reg = 0.0
        if E:
            reg += cfg.lambda_size * float(np.mean(em))
            reg += cfg.lambda_entropy * float(np.mean(_binary_entropy(em)))
        reg += cfg.lambda_size * float(np.mean(fm))
        reg += cfg.lambda_entropy * float(np.mean(_binary_entropy(fm)))
        return ce + reg, d_logits

    history = []
    best_obj = np.inf
    best_masks = masks()
    for _ in range(cfg.epochs):
        em, fm = masks()
        obj, d_logits = objective_terms(em, fm)
        history.append(obj)
        if obj < best_obj:
            best_obj = obj
            best_masks = (em.copy(), fm.copy())
        grads = model.backward_from_head(d_logits)
        model.zero_grads()  # mask learning must not leave stale grads behind
        d_fm = grads["d_feat_mask"] + cfg.lambda_size / d \
            + cfg.lambda_entropy * _binary_entropy_grad(fm) / d
        phi.grad[:, 0] += d_fm * fm * (1.0 - fm)
        if E:
            d_em = grads["d_edge_weight"] + cfg.lambda_size / E \
                + cfg.lambda_entropy * _binary_entropy_grad(em) / E
            theta.grad[:E, 0] += d_em * em * (1.0 - em)
        opt.step()
    em, fm = masks()
    final_obj, _ = objective_terms(em, fm)
    if final_obj < best_obj:
        best_obj = final_obj
        best_masks = (em.copy(), fm.copy())

    window = min(10, len(history))
    converged = bool(
        window >= 2
        and abs(history[-1] - history[-window])
        <= 1e-3 * max(abs(history[-window]), 1e-9)
    )
    return ExplanationMask(
        graph_id=gt.graph_id,
        edge_mask=best_masks[0],
        feat_mask=best_masks[1],
        predicted=target,
        converged=converged,
        objective_initial=history[0] if history else float(best_obj),
        objective_final=float(best_obj),
    )


# ---------------------------------------------------------------------------
# Faithfulness
# ---------------------------------------------------------------------------

def node_scores(gt: GraphTensors, mask: ExplanationMask) -> np.ndarray:
    """Importance per node: mean mask over incident edges (0 if isolated)
    plus the feature-mask weight of the node's own features."""
    edge_term = np.zeros(gt.n)
    counts = np.zeros(gt.n)
    for k in range(gt.num_edges):
        for node in (gt.edge_src[k], gt.edge_dst[k]):
            edge_term[node] += mask.edge_mask[k]
            counts[node] += 1.0
    nz = counts > 0
    edge_term[nz] /= counts[nz]
    absx = np.abs(gt.x)
    denom = absx.sum(axis=1) + 1e-12
    feat_term = (absx * mask.feat_mask).sum(axis=1) / denom
    return edge_term + feat_term


def _top_k(scores: np.ndarray, k: int) -> np.ndarray:
    order = np.lexsort((np.arange(scores.size), -scores))
    return order[:k]


def _predicts_correctly(model: Model, gt: GraphTensors) -> bool:
    _, p = model.forward_clf(gt)
    return int(np.argmax(p)) == gt.label


def fidelity(model: Model, gt: GraphTensors, mask: ExplanationMask,
             mode: str, keep_ratio: float = 0.3) -> int:
    """Correctness change in {-1, 0, 1} for one graph under hard removal.

    ``*_plus`` removes the top-ceil(keep_ratio * count) elements;
    ``*_minus`` keeps only those elements. With keep_ratio 1, the minus
    variants evaluate the unchanged graph and return 0 exactly.
    """
    if mode not in FIDELITY_MODES:
        raise ValueError(f"mode must be one of {FIDELITY_MODES}, got {mode!r}")
    if gt.label is None:
        raise InsufficientData(f"graph {gt.graph_id!r} has no class label")
    full_correct = _predicts_correctly(model, gt)

    if mode.startswith("node"):
        k = math.ceil(keep_ratio * gt.n)
        top = _top_k(node_scores(gt, mask), k)
        perturbed = gt.remove_nodes(top) if mode == "node_plus" \
            else gt.keep_only_nodes(top)
    else:
        k = math.ceil(keep_ratio * gt.num_edges)
        top = _top_k(mask.edge_mask, k)
        keep = np.zeros(gt.num_edges, dtype=bool)
        keep[top] = True
        perturbed = gt.keep_edges(~keep) if mode == "edge_plus" \
            else gt.keep_edges(keep)
    return int(full_correct) - int(_predicts_correctly(model, perturbed))


def gef_from_probs(p_full: np.ndarray, p_masked: np.ndarray) -> float:
    """1 - exp(-KL(p_full || p_masked)); 0 iff the distributions agree."""
    p = np.clip(np.asarray(p_full, dtype=np.float64), EPS_LOG, 1.0)
    q = np.clip(np.asarray(p_masked, dtype=np.float64), EPS_LOG, 1.0)
    kl = float(np.sum(p * np.log(p / q)))
    return 1.0 - math.exp(-max(kl, 0.0))


def gef(model: Model, gt: GraphTensors, mask: ExplanationMask,
        threshold: float = 0.5) -> float:
    """Unfaithfulness of the thresholded explanation subgraph: keep edges
    with mask >= threshold and zero feature columns below it, then compare
    class distributions."""
    _, p_full = model.forward_clf(gt)
    keep_edges = mask.edge_mask >= threshold
    keep_feats = (mask.feat_mask >= threshold).astype(np.float64)
    masked = gt.keep_edges(keep_edges).with_features(gt.x * keep_feats)
    _, p_masked = model.forward_clf(masked)
    return gef_from_probs(p_full, p_masked)


def evaluate_faithfulness(model: Model, gt: GraphTensors,
                          mask: ExplanationMask,
                          keep_ratio: float = 0.3) -> FaithfulnessScores:
    return FaithfulnessScores(
        node_fid_plus=fidelity(model, gt, mask, "node_plus", keep_ratio),
        node_fid_minus=fidelity(model, gt, mask, "node_minus", keep_ratio),
        edge_fid_plus=fidelity(model, gt, mask, "edge_plus", keep_ratio),
        edge_fid_minus=fidelity(model, gt, mask, "edge_minus", keep_ratio),
        gef=gef(model, gt, mask),
    )


# ---------------------------------------------------------------------------
# Importance grouped by element type
# ---------------------------------------------------------------------------

def node_importance_by_type(masks: list[ExplanationMask], corpus: Corpus) -> dict:
    """Distribution of node importance (mean incident edge mask) per
    element type, grouped by provenance. Emits per-node rows plus box-plot
    summaries (mean and quartiles)."""
    rows = []
    seen_prov = set()
    for mask in masks:
        g = corpus.by_id[mask.graph_id]
        if g.provenance is Provenance.UNKNOWN:
            continue
        seen_prov.add(g.provenance)
        incident_sum = {n.id: 0.0 for n in g.nodes}
        incident_cnt = {n.id: 0 for n in g.nodes}
        for k, e in enumerate(g.edges):
            for node_id in (e.src, e.dst):
                incident_sum[node_id] += float(mask.edge_mask[k])
                incident_cnt[node_id] += 1
        for n in g.nodes:
            imp = incident_sum[n.id] / incident_cnt[n.id] if incident_cnt[n.id] else 0.0
            rows.append({
                "graph_id": g.graph_id,
                "node_id": n.id,
                "type": n.node_type.canonical(),
                "provenance": g.provenance.value,
                "importance": imp,
            })
    if {Provenance.HUMAN, Provenance.LLM} - seen_prov:
        raise InsufficientData(
            "importance-by-type needs explained graphs of both provenances")

    summary: dict[str, dict[str, dict]] = {}
    for prov in ("human", "llm"):
        summary[prov] = {}
        types = sorted({r["type"] for r in rows if r["provenance"] == prov})
        for t in types:
            vals = np.array([r["importance"] for r in rows
                             if r["provenance"] == prov and r["type"] == t])
            q = np.percentile(vals, [0, 25, 50, 75, 100])
            summary[prov][t] = {
                "count": int(vals.size),
                "mean": float(vals.mean()),
                "min": float(q[0]), "q1": float(q[1]), "median": float(q[2]),
                "q3": float(q[3]), "max": float(q[4]),
            }
    return {"rows": rows, "summary": summary}
