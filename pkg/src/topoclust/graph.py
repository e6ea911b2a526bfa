"""Directed weighted graphs, edge-list I/O and Laplacians.

Nodes are arbitrary non-whitespace tokens.  Internally every node also has a
dense index; indices follow :func:`node_key` order so that output does not
depend on the order lines appear in an input file.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from .errors import (
    DuplicateEdge,
    EdgeListSyntaxError,
    EmptyGraph,
    GraphError,
    NonPositiveWeight,
    SelfLoop,
    UnknownNode,
)

_DECIMAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


def node_key(token: str):
    """Sort key for node tokens: integers numerically first, then text."""
    if token.isdigit():
        return (0, int(token), token)
    return (1, 0, token)


def sort_nodes(tokens: Iterable[str]) -> list[str]:
    return sorted(tokens, key=node_key)


class Edge(NamedTuple):
    source: str
    target: str
    weight: float = 1.0


@dataclass(frozen=True)
class DiGraph:
    """Immutable directed graph with strictly positive edge weights.

    Construction canonicalizes: ``nodes`` is sorted by :func:`node_key` and
    ``edges`` by (source index, target index).  Nodes mentioned by an edge
    are added automatically; pass ``nodes`` to include isolated ones.
    """

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        edges = [e if isinstance(e, Edge) else Edge(*e) for e in self.edges]
        tokens = {str(n) for n in self.nodes}
        seen = set()
        for e in edges:
            if e.source == e.target:
                raise SelfLoop(f"self-loop on node {e.source!r}")
            if (e.source, e.target) in seen:
                raise DuplicateEdge(f"duplicate edge {e.source} -> {e.target}")
            w = float(e.weight)
            if not (w > 0) or not np.isfinite(w):
                raise NonPositiveWeight(
                    f"edge {e.source} -> {e.target} has weight {e.weight!r}; weights must be finite and > 0")
            seen.add((e.source, e.target))
            tokens.update((e.source, e.target))
        if not tokens:
            raise EmptyGraph("no edges or nodes")
        for t in tokens:
            if not t or any(c.isspace() for c in t) or "#" in t:
                raise GraphError(f"invalid node token {t!r}")
        nodes = tuple(sort_nodes(tokens))
        index = {t: i for i, t in enumerate(nodes)}
        edges = sorted((Edge(e.source, e.target, float(e.weight)) for e in edges),
                       key=lambda e: (index[e.source], index[e.target]))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(edges))

    @classmethod
    def from_edges(cls, edges, nodes=()) -> "DiGraph":
        return cls(tuple(nodes), tuple(edges))

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, token):
        return token in self.index

    @cached_property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.nodes)}

    @cached_property
    def in_adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Per node index, the sorted indices of its in-neighbors."""
        lists = [[] for _ in self.nodes]
        for e in self.edges:
            lists[self.index[e.target]].append(self.index[e.source])
        return tuple(tuple(sorted(x)) for x in lists)

    @cached_property
    def out_adjacency(self) -> tuple[tuple[int, ...], ...]:
        lists = [[] for _ in self.nodes]
        for e in self.edges:
            lists[self.index[e.source]].append(self.index[e.target])
        return tuple(tuple(sorted(x)) for x in lists)

    @cached_property
    def edge_set(self) -> frozenset[tuple[str, str]]:
        return frozenset((e.source, e.target) for e in self.edges)

    def has_edge(self, source: str, target: str) -> bool:
        return (source, target) in self.edge_set

    def in_degree(self, token: str) -> int:
        return len(self.in_adjacency[self.index[token]])

    def predecessors(self, token: str) -> list[str]:
        return [self.nodes[j] for j in self.in_adjacency[self.index[token]]]

    def successors(self, token: str) -> list[str]:
        return [self.nodes[j] for j in self.out_adjacency[self.index[token]]]

    @cached_property
    def leaders(self) -> frozenset[str]:
        """Nodes without any incoming edge."""
        return frozenset(t for i, t in enumerate(self.nodes) if not self.in_adjacency[i])

    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges], dtype=float)

    def with_weights(self, weights) -> "DiGraph":
        weights = list(weights)
        if len(weights) != len(self.edges):
            raise GraphError(f"expected {len(self.edges)} weights, got {len(weights)}")
        return DiGraph(self.nodes, tuple(Edge(e.source, e.target, w) for e, w in zip(self.edges, weights)))

    def sort_key(self, token: str) -> int:
        return self.index[token]


def _read_text(source) -> str:
    if isinstance(source, str):
        return source
    return source.read()


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def parse_edge_list(source: str | TextIO) -> DiGraph:
    """Parse ``<source> <target> [<weight>]`` lines into a :class:`DiGraph`.

    ``source`` is either the text itself or a readable stream.  Errors carry
    the 1-based line number of the offending line.
    """
    text = _read_text(source)
    edges: list[Edge] = []
    seen: set[tuple[str, str]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        fields = _strip_comment(raw).split()
        if not fields:
            continue
        if len(fields) not in (2, 3):
            raise EdgeListSyntaxError(f"expected '<source> <target> [<weight>]', got {raw.strip()!r}", lineno)
        u, v = fields[0], fields[1]
        weight = 1.0
        if len(fields) == 3:
            if not _DECIMAL.fullmatch(fields[2]):
                raise EdgeListSyntaxError(f"weight {fields[2]!r} is not a decimal literal", lineno)
            weight = float(fields[2])
        if u == v:
            raise SelfLoop(f"self-loop on node {u!r}", lineno)
        if (u, v) in seen:
            raise DuplicateEdge(f"duplicate edge {u} -> {v}", lineno)
        if not weight > 0:
            raise NonPositiveWeight(f"weight must be > 0, got {fields[2]}", lineno)
        seen.add((u, v))
        edges.append(Edge(u, v, weight))
    if not edges:
        raise EmptyGraph("no edges or nodes")
    return DiGraph.from_edges(edges)


def read_edge_list(path) -> DiGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def format_edge_list(g: DiGraph) -> str:
    """Serialize edges in canonical order with 17 significant digits.

    Isolated nodes have no representation in the edge-list grammar and are
    dropped.
    """
    out = io.StringIO()
    for e in g.edges:
        out.write(f"{e.source} {e.target} {e.weight:.17g}\n")
    return out.getvalue()


def laplacian(g: DiGraph, weights=None) -> np.ndarray:
    """Dense Laplacian: ``l_ii`` = weighted in-degree, ``l_ij = -a_ij`` for edge j -> i.

    ``weights`` optionally overrides the graph's own weights (aligned with
    ``g.edges``).
    """
    n = len(g.nodes)
    w = g.weights() if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (len(g.edges),):
        raise GraphError(f"expected {len(g.edges)} weights, got shape {w.shape}")
    L = np.zeros((n, n))
    for e, a in zip(g.edges, w):
        i, j = g.index[e.target], g.index[e.source]
        L[i, j] = -a
    # diagonal from the same summands so rows cancel exactly when exactly representable
    L[np.diag_indices(n)] = -L.sum(axis=1)
    return L


def induced_subgraph(g: DiGraph, members: Iterable[str]) -> DiGraph:
    s = set(members)
    if not s:
        raise GraphError("induced subgraph needs a non-empty node set")
    unknown = s - set(g.nodes)
    if unknown:
        raise UnknownNode(f"unknown node(s): {', '.join(sort_nodes(unknown))}")
    edges = tuple(e for e in g.edges if e.source in s and e.target in s)
    return DiGraph(tuple(s), edges)


def reachable_from(g: DiGraph, start: str, within: frozenset[str] | set[str] | None = None) -> set[str]:
    """Nodes reachable from ``start`` (inclusive), optionally restricted to ``within``."""
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in g.successors(u):
            if v not in seen and (within is None or v in within):
                seen.add(v)
                stack.append(v)
    return seen
