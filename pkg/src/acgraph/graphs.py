"""Assurance-case graph data model, validation, and structural statistics.

An assurance case is represented as a directed graph whose nodes carry the
argument text (goals, strategies, evidence, ...) and whose edges point from
a parent element to the child that supports or refines it. Graphs are
immutable once built; every operation here is a pure function.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import InvalidGraph


class NodeKind(str, Enum):
    GOAL = "goal"
    STRATEGY = "strategy"
    CONTEXT = "context"
    SOLUTION = "solution"
    JUSTIFICATION = "justification"
    ASSUMPTION = "assumption"
    EVIDENCE = "evidence"
    CLAIM = "claim"
    ARGUMENT = "argument"
    OTHER = "other"


_KNOWN_KINDS = {k.value: k for k in NodeKind if k is not NodeKind.OTHER}


@dataclass(frozen=True)
class NodeType:
    """Element type of an argument node.

    Standard notations use a fixed vocabulary (goal, strategy, context,
    solution, justification, assumption, evidence, claim, argument); any
    other label is preserved verbatim under the OTHER kind.
    """

    kind: NodeKind
    label: str = ""

    def __post_init__(self):
        if self.kind is NodeKind.OTHER and not self.label:
            raise ValueError("OTHER node type requires a non-empty label")

    @classmethod
    def parse(cls, raw: str) -> "NodeType":
        norm = raw.strip().lower()
        if norm in _KNOWN_KINDS:
            return cls(_KNOWN_KINDS[norm])
        return cls(NodeKind.OTHER, raw.strip())

    def canonical(self) -> str:
        """String written back to corpus files."""
        return self.label if self.kind is NodeKind.OTHER else self.kind.value

    def __str__(self):
        return self.canonical()


class Provenance(str, Enum):
    HUMAN = "human"
    LLM = "llm"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ArgNode:
    """One argument element: unique id, element type, and its text.

    ``feature`` optionally holds the node's embedding vector; it is derived
    data and excluded from equality.
    """

    id: str
    node_type: NodeType
    text: str
    feature: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.feature is not None:
            arr = np.ascontiguousarray(self.feature, dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, "feature", arr)


@dataclass(frozen=True)
class ArgEdge:
    """Directed parent -> child relation. ``edge_attr`` is carried through
    I/O untouched; no implemented model consumes it."""

    src: str
    dst: str
    edge_attr: tuple[float, ...] | None = None


@dataclass(frozen=True)
class AssuranceGraph:
    graph_id: str
    provenance: Provenance
    source_tag: str
    nodes: tuple[ArgNode, ...]
    edges: tuple[ArgEdge, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    @cached_property
    def index_of(self) -> dict[str, int]:
        """Node id -> position. Only meaningful on validated graphs."""
        return {n.id: i for i, n in enumerate(self.nodes)}

    @cached_property
    def edge_set(self) -> frozenset[tuple[str, str]]:
        return frozenset((e.src, e.dst) for e in self.edges)

    def node_by_id(self, node_id: str) -> ArgNode:
        return self.nodes[self.index_of[node_id]]

    def edge_index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Edges as (src_idx, dst_idx) int arrays, in edge order."""
        idx = self.index_of
        src = np.fromiter((idx[e.src] for e in self.edges), dtype=np.int64,
                          count=len(self.edges))
        dst = np.fromiter((idx[e.dst] for e in self.edges), dtype=np.int64,
                          count=len(self.edges))
        return src, dst

    def feature_matrix(self) -> np.ndarray:
        """Stacked node features; raises KeyError-free MissingFeature upstream."""
        from .errors import MissingFeature
        rows = []
        for n in self.nodes:
            if n.feature is None:
                raise MissingFeature(n.id)
            rows.append(n.feature)
        return np.stack(rows).astype(np.float64)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    def __str__(self):  # pragma: no cover - overridden
        return self.__class__.__name__


@dataclass(frozen=True)
class NoNodes(Violation):
    def __str__(self):
        return "graph has no nodes"


@dataclass(frozen=True)
class EmptyNodeId(Violation):
    position: int

    def __str__(self):
        return f"node at position {self.position} has an empty id"


@dataclass(frozen=True)
class DuplicateNodeId(Violation):
    node_id: str

    def __str__(self):
        return f"duplicate node id {self.node_id!r}"


@dataclass(frozen=True)
class DanglingEdge(Violation):
    src: str
    dst: str
    missing: str

    def __str__(self):
        return f"edge ({self.src!r} -> {self.dst!r}) references absent node {self.missing!r}"


@dataclass(frozen=True)
class SelfLoop(Violation):
    node_id: str

    def __str__(self):
        return f"self-loop on node {self.node_id!r}"


@dataclass(frozen=True)
class DuplicateEdge(Violation):
    src: str
    dst: str

    def __str__(self):
        return f"duplicate edge ({self.src!r} -> {self.dst!r})"


def validate_graph(g: AssuranceGraph) -> list[Violation]:
    """Check every structural invariant; returns one violation per defect.

    An empty list means the graph is well formed. Violations are data, not
    exceptions: callers that must fail raise InvalidGraph themselves.
    """
    violations: list[Violation] = []
    if len(g.nodes) == 0:
        violations.append(NoNodes())

    ids: set[str] = set()
    for pos, node in enumerate(g.nodes):
        if not node.id:
            violations.append(EmptyNodeId(pos))
        elif node.id in ids:
            violations.append(DuplicateNodeId(node.id))
        else:
            ids.add(node.id)

    seen_pairs: set[tuple[str, str]] = set()
    for e in g.edges:
        for endpoint in (e.src, e.dst):
            if endpoint not in ids:
                violations.append(DanglingEdge(e.src, e.dst, endpoint))
        if e.src == e.dst:
            violations.append(SelfLoop(e.src))
        if (e.src, e.dst) in seen_pairs:
            violations.append(DuplicateEdge(e.src, e.dst))
        seen_pairs.add((e.src, e.dst))
    return violations


def require_valid(g: AssuranceGraph) -> None:
    violations = validate_graph(g)
    if violations:
        raise InvalidGraph(g.graph_id, violations)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphStats:
    num_nodes: int
    num_edges: int
    avg_words: float
    avg_chars: float
    density: float
    avg_in_deg: float
    avg_out_deg: float
    edge_homophily: float


def edge_homophily(g: AssuranceGraph) -> float:
    """Fraction of edges whose endpoints share the same node type.

    Graphs without edges score 0 by convention so reports stay total.
    """
    require_valid(g)
    if not g.edges:
        return 0.0
    same = sum(
        1 for e in g.edges
        if g.node_by_id(e.src).node_type == g.node_by_id(e.dst).node_type
    )
    return same / len(g.edges)


def compute_stats(g: AssuranceGraph) -> GraphStats:
    """Structural statistics for one graph.

    Word counts are whitespace-delimited tokens; character counts are
    Unicode scalar counts. Density uses the directed-graph normaliser
    E / (N * (N - 1)) and is defined as 0 for single-node graphs. Average
    in- and out-degree are both E / N.
    """
    require_valid(g)
    n = len(g.nodes)
    m = len(g.edges)
    words = [len(node.text.split()) for node in g.nodes]
    chars = [len(node.text) for node in g.nodes]
    density = m / (n * (n - 1)) if n > 1 else 0.0
    deg = m / n
    return GraphStats(
        num_nodes=n,
        num_edges=m,
        avg_words=float(np.mean(words)),
        avg_chars=float(np.mean(chars)),
        density=density,
        avg_in_deg=deg,
        avg_out_deg=deg,
        edge_homophily=edge_homophily(g),
    )


def candidate_non_edges(g: AssuranceGraph) -> list[tuple[str, str]]:
    """All ordered node pairs (i, j), i != j, that are not edges.

    Deterministic: lexicographic order by (src id, dst id). Together with
    the edge set this partitions the full set of ordered non-loop pairs.
    """
    require_valid(g)
    present = g.edge_set
    ids = sorted(n.id for n in g.nodes)
    return [
        (a, b)
        for a in ids
        for b in ids
        if a != b and (a, b) not in present
    ]
