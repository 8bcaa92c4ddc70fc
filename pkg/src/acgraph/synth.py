"""Seeded synthetic assurance-graph generator for tests and smoke runs.

Two main families mimic the shapes seen in practice: ``tree`` builds a
rooted goal/strategy hierarchy (human-style nesting), ``flat`` builds a
shallow star around one goal hub (the pattern typical of generated cases).
``motif`` / ``motif_null`` add three assumption nodes that are either wired
as a 3-edge cycle or dispersed into the tree, giving a classification task
whose label is decided purely by those three edges.

Generation is a pure function of (spec, seed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .graphs import (
    ArgEdge,
    ArgNode,
    AssuranceGraph,
    NodeKind,
    NodeType,
    Provenance,
)

STYLES = ("tree", "flat", "motif", "motif_null")

_TEMPLATES = {
    NodeKind.GOAL: "G{i} goal d{d}: component n{i} is acceptably safe",
    NodeKind.STRATEGY: "S{i} strategy d{d}: argue over decomposition of n{i}",
    NodeKind.SOLUTION: "Sn{i} solution d{d}: verification record for n{i}",
    NodeKind.CONTEXT: "C{i} context d{d}: operating environment for n{i}",
    NodeKind.EVIDENCE: "E{i} evidence d{d}: test report artifact n{i}",
    NodeKind.ASSUMPTION: "A{i} assumption d{d}: assumed condition n{i} holds",
}

_ID_PREFIX = {
    NodeKind.GOAL: "G",
    NodeKind.STRATEGY: "S",
    NodeKind.SOLUTION: "Sn",
    NodeKind.CONTEXT: "C",
    NodeKind.EVIDENCE: "E",
    NodeKind.ASSUMPTION: "A",
}


@dataclass(frozen=True)
class SynthSpec:
    num_nodes: int
    style: str = "tree"
    provenance: Provenance = Provenance.HUMAN
    source_tag: str = "synthetic"
    graph_id: str = ""


def _node(kind: NodeKind, i: int, depth: int) -> ArgNode:
    return ArgNode(
        id=f"{_ID_PREFIX[kind]}{i}",
        node_type=NodeType(kind),
        text=_TEMPLATES[kind].format(i=i, d=depth),
    )


def _grow_tree(num_nodes: int, rng: np.random.Generator):
    """Rooted hierarchy: goals refine into strategies, strategies into
    sub-goals or leaf solutions/contexts. Returns (nodes, edges, depths)."""
    nodes = [_node(NodeKind.GOAL, 0, 0)]
    depths = [0]
    edges: list[ArgEdge] = []
    # positions of nodes that may still take children
    internal = [0]
    for i in range(1, num_nodes):
        p = internal[int(rng.integers(len(internal)))]
        parent_kind = nodes[p].node_type.kind
        depth = depths[p] + 1
        if parent_kind is NodeKind.GOAL:
            kind = NodeKind.STRATEGY
        else:
            r = rng.random()
            if r < 0.55:
                kind = NodeKind.GOAL
            elif r < 0.80:
                kind = NodeKind.SOLUTION
            else:
                kind = NodeKind.CONTEXT
        child = _node(kind, i, depth)
        nodes.append(child)
        depths.append(depth)
        edges.append(ArgEdge(nodes[p].id, child.id))
        if kind in (NodeKind.GOAL, NodeKind.STRATEGY):
            internal.append(i)
    return nodes, edges, depths


def _grow_flat(num_nodes: int):
    """Shallow star: one goal hub linking directly to every other element."""
    hub = _node(NodeKind.GOAL, 0, 0)
    nodes = [hub]
    edges = []
    leaf_cycle = (NodeKind.CONTEXT, NodeKind.SOLUTION, NodeKind.STRATEGY,
                  NodeKind.EVIDENCE)
    for i in range(1, num_nodes):
        leaf = _node(leaf_cycle[(i - 1) % 4], i, 1)
        nodes.append(leaf)
        edges.append(ArgEdge(hub.id, leaf.id))
    return nodes, edges


def generate_synthetic(spec: SynthSpec, seed: int) -> AssuranceGraph:
    """Deterministically generate one synthetic assurance graph."""
    if spec.style not in STYLES:
        raise InvalidSpec(f"unknown style {spec.style!r}; expected one of {STYLES}")
    if spec.num_nodes < 2:
        raise InvalidSpec(f"num_nodes must be >= 2, got {spec.num_nodes}")
    if spec.style in ("motif", "motif_null") and spec.num_nodes < 6:
        raise InvalidSpec(f"style {spec.style!r} needs num_nodes >= 6")

    rng = np.random.Generator(np.random.Philox(seed))
    if spec.style == "tree":
        nodes, edges, _ = _grow_tree(spec.num_nodes, rng)
    elif spec.style == "flat":
        nodes, edges = _grow_flat(spec.num_nodes)
    else:
        base_n = spec.num_nodes - 3
        nodes, edges, _ = _grow_tree(base_n, rng)
        extras = [_node(NodeKind.ASSUMPTION, base_n + k, 1) for k in range(3)]
        nodes = nodes + extras
        if spec.style == "motif":
            # the label-deciding cycle among the three assumption nodes
            edges = edges + [
                ArgEdge(extras[0].id, extras[1].id),
                ArgEdge(extras[1].id, extras[2].id),
                ArgEdge(extras[2].id, extras[0].id),
            ]
        else:
            targets = rng.choice(base_n, size=3, replace=False)
            edges = edges + [
                ArgEdge(extras[k].id, nodes[int(targets[k])].id)
                for k in range(3)
            ]

    gid = spec.graph_id or f"{spec.style}-{spec.num_nodes}-{seed}"
    return AssuranceGraph(
        graph_id=gid,
        provenance=spec.provenance,
        source_tag=spec.source_tag,
        nodes=tuple(nodes),
        edges=tuple(edges),
    )


def motif_edge_indices(g: AssuranceGraph) -> list[int]:
    """Positions (in edge order) of edges joining two assumption nodes."""
    out = []
    for k, e in enumerate(g.edges):
        src_kind = g.node_by_id(e.src).node_type.kind
        dst_kind = g.node_by_id(e.dst).node_type.kind
        if src_kind is NodeKind.ASSUMPTION and dst_kind is NodeKind.ASSUMPTION:
            out.append(k)
    return out


def make_synthetic_corpus(families, node_range: tuple[int, int], seed: int,
                          source_tag: str = "synthetic"):
    """Build a corpus from (style, provenance, count) family tuples.

    Node counts are drawn uniformly from ``node_range`` (inclusive). The
    whole corpus is a pure function of its arguments.
    """
    from .corpus import Corpus

    lo, hi = node_range
    if lo < 2 or hi < lo:
        raise InvalidSpec(f"bad node range {node_range}")
    rng = np.random.Generator(np.random.Philox(seed))
    graphs = []
    for style, provenance, count in families:
        for k in range(count):
            n = int(rng.integers(lo, hi + 1))
            child_seed = int(rng.integers(0, 2**62))
            spec = SynthSpec(
                num_nodes=n,
                style=style,
                provenance=Provenance(provenance),
                source_tag=source_tag,
                graph_id=f"{style}_{provenance}_{k:03d}",
            )
            graphs.append(generate_synthetic(spec, child_seed))
    return Corpus(graphs=tuple(graphs))
