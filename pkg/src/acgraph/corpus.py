"""Corpus file format and scenario splits.

A corpus is a JSON file::

    {"graphs": [
        {"graph_id": "...", "source": "human" | "llm" | "unknown",
         "source_tag": "...",
         "nodes": [{"id": "...", "type": "...", "text": "..."}],
         "edges": [{"src": "...", "dst": "..."}]}
    ]}

Unknown ``type`` strings are preserved as-is. Edges may carry an optional
``attr`` list of floats, which round-trips untouched.

Splits group whole graphs into train/val/test by provenance so the three
evaluation regimes share one held-out human test set:

* ``h2h``  - train/val/test all human,
* ``m2h``  - train/val on generated graphs, test on held-out human,
* ``mix``  - train/val on both, test on held-out human,
* ``custom`` - stratified split of everything (used for provenance
  classification, where the test set needs both classes).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import InsufficientData, ParseError, ValidationError
from .graphs import (
    ArgEdge,
    ArgNode,
    AssuranceGraph,
    NodeType,
    Provenance,
    validate_graph,
)

SCENARIOS = ("h2h", "m2h", "mix", "custom")

_SCENARIO_NAMES = {
    "h2h": "H->H",
    "m2h": "M->H",
    "mix": "Mix->H",
    "custom": "custom",
}


@dataclass(frozen=True)
class Corpus:
    graphs: tuple[AssuranceGraph, ...]
    embedding_dim: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))

    @cached_property
    def by_id(self) -> dict[str, AssuranceGraph]:
        return {g.graph_id: g for g in self.graphs}

    def ids_with_provenance(self, provenance: Provenance) -> list[str]:
        return sorted(g.graph_id for g in self.graphs
                      if g.provenance is provenance)

    def subset(self, ids) -> list[AssuranceGraph]:
        return [self.by_id[i] for i in ids]


@dataclass(frozen=True)
class ScenarioSplit:
    name: str
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]


def _parse_graph(obj, pos: int) -> AssuranceGraph:
    if not isinstance(obj, dict):
        raise ParseError(f"graph entry {pos} is not an object")
    try:
        gid = obj["graph_id"]
        source = obj["source"]
        nodes_raw = obj["nodes"]
        edges_raw = obj["edges"]
    except KeyError as exc:
        raise ParseError(f"graph entry {pos} missing key {exc}") from None
    if not isinstance(gid, str) or not gid:
        raise ParseError(f"graph entry {pos}: graph_id must be a non-empty string")
    try:
        provenance = Provenance(str(source).strip().lower())
    except ValueError:
        raise ParseError(
            f"graph {gid!r}: source must be human/llm/unknown, got {source!r}"
        ) from None

    nodes = []
    for k, nr in enumerate(nodes_raw):
        try:
            nid, ntype, text = nr["id"], nr["type"], nr["text"]
        except (TypeError, KeyError):
            raise ParseError(f"graph {gid!r}: node {k} missing id/type/text") from None
        if not str(ntype).strip():
            raise ParseError(f"graph {gid!r}: node {nid!r} has an empty type")
        nodes.append(ArgNode(id=str(nid), node_type=NodeType.parse(str(ntype)),
                             text=str(text)))
    edges = []
    for k, er in enumerate(edges_raw):
        try:
            src, dst = er["src"], er["dst"]
        except (TypeError, KeyError):
            raise ParseError(f"graph {gid!r}: edge {k} missing src/dst") from None
        attr = er.get("attr")
        if attr is not None:
            attr = tuple(float(v) for v in attr)
        edges.append(ArgEdge(src=str(src), dst=str(dst), edge_attr=attr))

    return AssuranceGraph(
        graph_id=gid,
        provenance=provenance,
        source_tag=str(obj.get("source_tag", "")),
        nodes=tuple(nodes),
        edges=tuple(edges),
    )


def load_corpus(path) -> Corpus:
    """Parse and validate a corpus file.

    Raises ParseError for malformed JSON or schema violations and
    ValidationError (naming the graph) when a graph breaks a structural
    invariant.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict) or "graphs" not in payload:
        raise ParseError(f"{path}: expected a top-level object with a 'graphs' list")
    graphs = [_parse_graph(obj, k) for k, obj in enumerate(payload["graphs"])]

    seen = set()
    for g in graphs:
        if g.graph_id in seen:
            raise ValidationError(f"duplicate graph_id {g.graph_id!r} in corpus")
        seen.add(g.graph_id)
        violations = validate_graph(g)
        if violations:
            detail = "; ".join(str(v) for v in violations)
            raise ValidationError(f"graph {g.graph_id!r}: {detail}")
    return Corpus(graphs=tuple(graphs))


def save_corpus(corpus: Corpus, path) -> None:
    payload = {
        "graphs": [
            {
                "graph_id": g.graph_id,
                "source": g.provenance.value,
                "source_tag": g.source_tag,
                "nodes": [
                    {"id": n.id, "type": n.node_type.canonical(), "text": n.text}
                    for n in g.nodes
                ],
                "edges": [
                    {"src": e.src, "dst": e.dst}
                    if e.edge_attr is None
                    else {"src": e.src, "dst": e.dst, "attr": list(e.edge_attr)}
                    for e in g.edges
                ],
            }
            for g in corpus.graphs
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def _bucket(ids: list[str], ratios, rng: np.random.Generator):
    """Shuffle then cut into train/val/test by floor(ratio * n)."""
    order = list(rng.permutation(len(ids)))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    n_train = int(np.floor(ratios[0] * n))
    n_val = int(np.floor(ratios[1] * n))
    return (
        tuple(shuffled[:n_train]),
        tuple(shuffled[n_train:n_train + n_val]),
        tuple(shuffled[n_train + n_val:]),
    )


def make_split(corpus: Corpus, scenario: str, seed: int,
               ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)) -> ScenarioSplit:
    """Deterministic provenance-aware split for one evaluation scenario.

    Human and generated graphs are each shuffled (seeded) and cut by the
    given ratios; the scenario then selects which buckets are used. All
    three named scenarios test on the same held-out human bucket. Graphs
    with unknown provenance are excluded.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValueError(f"ratios must be non-negative and sum to 1, got {ratios}")

    rng = np.random.Generator(np.random.Philox(seed))
    human = corpus.ids_with_provenance(Provenance.HUMAN)
    llm = corpus.ids_with_provenance(Provenance.LLM)
    h_train, h_val, h_test = _bucket(human, ratios, rng)
    m_train, m_val, m_test = _bucket(llm, ratios, rng)

    def need(what: str, bucket):
        if not bucket:
            raise InsufficientData(
                f"scenario {scenario!r} needs at least one {what} graph"
            )

    if scenario == "h2h":
        need("human training", h_train)
        need("human validation", h_val)
        need("human test", h_test)
        parts = h_train, h_val, h_test
    elif scenario == "m2h":
        need("generated training", m_train)
        need("generated validation", m_val)
        need("human test", h_test)
        parts = m_train, m_val, h_test
    elif scenario == "mix":
        need("human training", h_train)
        need("generated training", m_train)
        need("human test", h_test)
        parts = (
            tuple(sorted(h_train + m_train)),
            tuple(sorted(h_val + m_val)),
            h_test,
        )
    else:  # custom: stratified over both classes, mixed test set
        need("human training", h_train)
        need("generated training", m_train)
        parts = (
            tuple(sorted(h_train + m_train)),
            tuple(sorted(h_val + m_val)),
            tuple(sorted(h_test + m_test)),
        )
    return ScenarioSplit(_SCENARIO_NAMES[scenario], *parts)


def relabel_provenance(corpus: Corpus, mapping: dict[str, Provenance]) -> Corpus:
    """New corpus with provenance overridden per graph id (permutation
    controls); graphs absent from the mapping are kept unchanged."""
    graphs = tuple(
        replace(g, provenance=mapping.get(g.graph_id, g.provenance))
        for g in corpus.graphs
    )
    return Corpus(graphs=graphs, embedding_dim=corpus.embedding_dim)
