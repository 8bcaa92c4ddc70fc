"""Training and evaluation for the two graph tasks.

Link prediction: every directed parent->child edge is a positive; an equal
number of non-edges is sampled as negatives. Training negatives are
resampled each epoch; validation/test negatives are drawn once per run so
metrics stay comparable across epochs and models. The checkpoint with the
best validation ROC-AUC is evaluated on the test set.

Provenance classification: encoder, mean readout, two-class softmax, one
graph per step; selection by validation accuracy; the generated class is
the positive class for F1.

All randomness inside one run flows from a single counter-based Philox
generator keyed by the run seed (three derived streams: init, training,
evaluation), so repeated runs are bit-identical.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, ScenarioSplit, make_split
from .errors import EmptyClass, InsufficientData, SingleClassTrainingSet
from .graphs import AssuranceGraph, Provenance, require_valid
from .nn import Adam, GraphTensors, Model, ModelConfig
from .nn.losses import bce_from_scores, ce_from_logits

CLASS_OF = {Provenance.HUMAN: 0, Provenance.LLM: 1}
POSITIVE_CLASS = 1  # generated graphs


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def roc_auc(scores_pos, scores_neg) -> float:
    """Rank-based (Mann-Whitney) area under the ROC curve with average
    ranks for ties: P(s_pos > s_neg) + 0.5 P(s_pos = s_neg)."""
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise EmptyClass("roc_auc needs at least one score in each class")
    combined = np.concatenate([pos, neg])
    order = np.argsort(combined, kind="mergesort")
    ranks = np.empty(combined.size, dtype=np.float64)
    sorted_v = combined[order]
    i = 0
    while i < combined.size:
        j = i
        while j < combined.size and sorted_v[j] == sorted_v[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j + 1)  # average of 1-based ranks
        i = j
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def f1_at_threshold(scores, labels, threshold: float = 0.5) -> dict:
    """Binary precision/recall/F1/accuracy predicting positive at
    score >= threshold; zero-denominator fields are 0."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    pred = (s >= threshold).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / y.size if y.size else 0.0
    return {"precision": precision, "recall": recall, "f1": f1,
            "accuracy": accuracy}


# ---------------------------------------------------------------------------
# Negative sampling
# ---------------------------------------------------------------------------

def _non_edge_index_pairs(gt: GraphTensors) -> np.ndarray:
    """All ordered non-edge index pairs, row-major (deterministic)."""
    blocked = np.zeros((gt.n, gt.n), dtype=bool)
    blocked[gt.edge_src, gt.edge_dst] = True
    blocked[np.arange(gt.n), np.arange(gt.n)] = True
    return np.argwhere(~blocked)


def _draw_negatives(cands: np.ndarray, k: int, rng: np.random.Generator):
    take = min(k, len(cands))
    if take == 0:
        return np.empty((0, 2), dtype=np.int64)
    idx = rng.choice(len(cands), size=take, replace=False)
    return cands[idx]


def sample_negatives(g: AssuranceGraph, k: int, seed: int):
    """Uniform sample (without replacement) of k non-edges of ``g`` as
    (src id, dst id) pairs; returns all available non-edges when fewer than
    k exist. Deterministic per seed."""
    require_valid(g)
    src, dst = g.edge_index_arrays()
    gt_like = GraphTensors(g.graph_id, np.zeros((len(g.nodes), 1)), src, dst)
    cands = _non_edge_index_pairs(gt_like)
    rng = np.random.Generator(np.random.Philox(seed))
    chosen = _draw_negatives(cands, k, rng)
    ids = [n.id for n in g.nodes]
    return [(ids[i], ids[j]) for i, j in chosen]


@dataclass
class LinkExamples:
    """Frozen evaluation examples for one graph."""

    graph_id: str
    pos: np.ndarray          # (E, 2) index pairs
    neg: np.ndarray          # (k, 2) index pairs, k <= E
    short: bool              # fewer non-edges than positives existed


def build_link_examples(gts: dict[str, GraphTensors], ids,
                        rng: np.random.Generator) -> list[LinkExamples]:
    out = []
    for gid in sorted(ids):
        gt = gts[gid]
        pos = np.stack([gt.edge_src, gt.edge_dst], axis=1) if gt.num_edges \
            else np.empty((0, 2), dtype=np.int64)
        cands = _non_edge_index_pairs(gt)
        neg = _draw_negatives(cands, len(pos), rng)
        out.append(LinkExamples(gid, pos, neg, short=len(neg) < len(pos)))
    return out


# ---------------------------------------------------------------------------
# Hyperparameters and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hyperparams:
    lr: float = 1e-5
    weight_decay: float = 0.01
    epochs: int = 200
    eval_every: int = 1
    split_seed: int = 0
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)


@dataclass
class SeedResult:
    seed: int
    roc_auc: float
    f1: float
    accuracy: float
    best_epoch: int
    val_metric: float

    def metrics(self) -> dict:
        return {"roc_auc": self.roc_auc, "f1": self.f1,
                "accuracy": self.accuracy}


@dataclass
class MetricsReport:
    task: str
    scenario: str
    model: str
    seeds: list[SeedResult]
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    single_seed: bool = False

    def __post_init__(self):
        keys = ("roc_auc", "f1", "accuracy")
        vals = {k: np.array([r.metrics()[k] for r in self.seeds]) for k in keys}
        self.mean = {k: float(v.mean()) for k, v in vals.items()}
        self.single_seed = len(self.seeds) < 2
        # sample std over seeds; a single seed reports 0 and is flagged
        self.std = {
            k: (0.0 if self.single_seed else float(v.std(ddof=1)))
            for k, v in vals.items()
        }

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "scenario": self.scenario,
            "model": self.model,
            "seeds": [
                {"seed": r.seed, "roc_auc": r.roc_auc, "f1": r.f1,
                 "accuracy": r.accuracy, "best_epoch": r.best_epoch}
                for r in self.seeds
            ],
            "mean": self.mean,
            "std": self.std,
            "single_seed": self.single_seed,
        }


# ---------------------------------------------------------------------------
# Training loops
# ---------------------------------------------------------------------------

def _graph_tensors(corpus: Corpus, ids) -> dict[str, GraphTensors]:
    out = {}
    for gid in ids:
        g = corpus.by_id[gid]
        label = CLASS_OF.get(g.provenance)
        out[gid] = GraphTensors.from_graph(g, label=label)
    return out


def _rng_streams(seed: int):
    init_ss, train_ss, eval_ss = np.random.SeedSequence(seed).spawn(3)
    return (
        init_ss,
        np.random.Generator(np.random.Philox(train_ss)),
        np.random.Generator(np.random.Philox(eval_ss)),
    )


def _pooled_link_scores(model: Model, gts, examples: list[LinkExamples]):
    scores, labels = [], []
    for ex in examples:
        if len(ex.pos) == 0:
            continue
        src = np.concatenate([ex.pos[:, 0], ex.neg[:, 0]])
        dst = np.concatenate([ex.pos[:, 1], ex.neg[:, 1]])
        _, p = model.forward_link(gts[ex.graph_id], src, dst)
        scores.append(p)
        labels.append(np.concatenate([np.ones(len(ex.pos)),
                                      np.zeros(len(ex.neg))]))
    return np.concatenate(scores), np.concatenate(labels)


def train_link(split: ScenarioSplit, corpus: Corpus, config: ModelConfig,
               hp: Hyperparams, seed: int) -> tuple[Model, SeedResult]:
    """Train a link predictor on one split with one seed."""
    if config.head != "link":
        raise ValueError("train_link requires a link head")
    all_ids = list(split.train) + list(split.val) + list(split.test)
    if not split.train or not split.test:
        raise InsufficientData("link training needs non-empty train and test sets")
    gts = _graph_tensors(corpus, all_ids)
    in_dim = next(iter(gts.values())).x.shape[1]

    init_ss, rng_train, rng_eval = _rng_streams(seed)
    model = Model(config, in_dim, seed=init_ss)
    model.seed = seed
    adam = Adam(model.params.values(), lr=hp.lr, weight_decay=hp.weight_decay)

    val_examples = build_link_examples(gts, split.val, rng_eval)
    test_examples = build_link_examples(gts, split.test, rng_eval)
    non_edges = {gid: _non_edge_index_pairs(gts[gid]) for gid in split.train}

    train_ids = sorted(split.train)
    best = (-np.inf, model.state_values(), -1)
    for epoch in range(hp.epochs):
        order = rng_train.permutation(len(train_ids))
        for k in order:
            gid = train_ids[int(k)]
            gt = gts[gid]
            if gt.num_edges == 0:
                continue
            neg = _draw_negatives(non_edges[gid], gt.num_edges, rng_train)
            src = np.concatenate([gt.edge_src, neg[:, 0]])
            dst = np.concatenate([gt.edge_dst, neg[:, 1]])
            y = np.concatenate([np.ones(gt.num_edges), np.zeros(len(neg))])
            s, _ = model.forward_link(gt, src, dst)
            _, d_s = bce_from_scores(s, y)
            model.backward_from_head(d_s)
            adam.step()
        if (epoch + 1) % hp.eval_every == 0 and split.val:
            scores, labels = _pooled_link_scores(model, gts, val_examples)
            val_auc = roc_auc(scores[labels == 1], scores[labels == 0])
            if val_auc > best[0]:
                best = (val_auc, model.state_values(), epoch)

    if best[2] >= 0:
        model.load_state_values(best[1])
    model.trained = True

    scores, labels = _pooled_link_scores(model, gts, test_examples)
    auc = roc_auc(scores[labels == 1], scores[labels == 0])
    f1 = f1_at_threshold(scores, labels)
    return model, SeedResult(seed=seed, roc_auc=auc, f1=f1["f1"],
                             accuracy=f1["accuracy"], best_epoch=best[2],
                             val_metric=float(best[0]))


def _clf_metrics(model: Model, gts, ids):
    probs, labels = [], []
    for gid in sorted(ids):
        gt = gts[gid]
        _, p = model.forward_clf(gt)
        probs.append(float(p[POSITIVE_CLASS]))
        labels.append(gt.label)
    scores = np.array(probs)
    y = np.array(labels)
    stats = f1_at_threshold(scores, y)
    try:
        auc = roc_auc(scores[y == 1], scores[y == 0])
    except EmptyClass:
        auc = 0.0
    return auc, stats


def train_graph_classifier(split: ScenarioSplit, corpus: Corpus,
                           config: ModelConfig, hp: Hyperparams,
                           seed: int) -> tuple[Model, SeedResult]:
    """Train a human-vs-generated provenance classifier on one split."""
    if config.head != "classifier":
        raise ValueError("train_graph_classifier requires a classifier head")
    all_ids = list(split.train) + list(split.val) + list(split.test)
    gts = _graph_tensors(corpus, all_ids)
    for gid in all_ids:
        if gts[gid].label is None:
            raise InsufficientData(
                f"graph {gid!r} has unknown provenance; cannot be labelled")
    train_labels = {gts[g].label for g in split.train}
    if len(train_labels) < 2:
        raise SingleClassTrainingSet(
            "training set contains a single provenance class")
    in_dim = next(iter(gts.values())).x.shape[1]

    init_ss, rng_train, _ = _rng_streams(seed)
    model = Model(config, in_dim, seed=init_ss)
    model.seed = seed
    adam = Adam(model.params.values(), lr=hp.lr, weight_decay=hp.weight_decay)

    train_ids = sorted(split.train)
    best = (-np.inf, model.state_values(), -1)
    for epoch in range(hp.epochs):
        order = rng_train.permutation(len(train_ids))
        for k in order:
            gt = gts[train_ids[int(k)]]
            logits, _ = model.forward_clf(gt)
            _, d_logits = ce_from_logits(logits, [gt.label])
            model.backward_from_head(d_logits)
            adam.step()
        if (epoch + 1) % hp.eval_every == 0 and split.val:
            _, stats = _clf_metrics(model, gts, split.val)
            if stats["accuracy"] > best[0]:
                best = (stats["accuracy"], model.state_values(), epoch)

    if best[2] >= 0:
        model.load_state_values(best[1])
    model.trained = True

    auc, stats = _clf_metrics(model, gts, split.test)
    return model, SeedResult(seed=seed, roc_auc=auc, f1=stats["f1"],
                             accuracy=stats["accuracy"], best_epoch=best[2],
                             val_metric=float(best[0]))


# ---------------------------------------------------------------------------
# Multi-seed scenarios
# ---------------------------------------------------------------------------

def _run_one_seed(args):
    corpus, split, config, hp, seed = args
    if config.head == "link":
        return train_link(split, corpus, config, hp, seed)
    return train_graph_classifier(split, corpus, config, hp, seed)


def run_scenario(corpus: Corpus, scenario: str, config: ModelConfig,
                 hp: Hyperparams, seeds) -> tuple[MetricsReport, list[Model]]:
    """Train one model per seed on a fixed split and aggregate mean +/- std.

    The split is fixed by hp.split_seed; the given seeds vary only
    initialisation, shuffling, and negative sampling. Seeds run in
    parallel when ACASE_THREADS > 1; results aggregate in seed order
    either way.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    split = make_split(corpus, scenario, hp.split_seed, hp.ratios)
    jobs = [(corpus, split, config, hp, s) for s in seeds]
    workers = int(os.environ.get("ACASE_THREADS", "1") or "1")
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            outcomes = list(ex.map(_run_one_seed, jobs))
    else:
        outcomes = [_run_one_seed(j) for j in jobs]
    models = [m for m, _ in outcomes]
    results = [r for _, r in outcomes]
    task = "link_prediction" if config.head == "link" else "graph_classification"
    report = MetricsReport(task=task, scenario=split.name, model=config.label,
                           seeds=results)
    return report, models
