"""Topological clusters: weight-independent consensus groups of a digraph.

The pipeline contracts LSCCs, labels every node as a cluster root (CR) or
cluster follower (CF), and groups each CR node with the CF nodes that
resolve to it.  Nodes with zero or one in-edge are labelled from their
degree.  A node with two or more in-edges (a "popular" node) is a CF node
exactly when every acyclic leader-to-node path shares some other node; the
shared node closest to the popular node becomes its anchor.

Two routes classify popular nodes: explicit acyclic path enumeration, which
is exponential but mirrors the definition, and immediate dominators from a
virtual root wired to every leader, which is what the pipeline uses.  A
separate brute-force checker enumerates node subsets directly against the
spanning-tree / single-entry conditions and serves as an oracle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .condensation import CondensationResult, find_lsccs, lscc_condensation
from .errors import (
    AnchorCycle,
    InconsistentCommonOrder,
    LsccPresent,
    MaximalityUnavailable,
    NotAPartition,
    PathExplosion,
    TooLarge,
    UnknownNode,
)
from .graph import DiGraph, node_key, sort_nodes

DEFAULT_MAX_PATHS = 100_000
EXHAUSTIVE_THRESHOLD = 15


class Label(str, enum.Enum):
    CLUSTER_ROOT = "ClusterRoot"
    CLUSTER_FOLLOWER = "ClusterFollower"
    POPULAR_PENDING = "PopularPending"


class Kind(str, enum.Enum):
    LEADER = "leader"
    FOLLOWER = "follower"


@dataclass(frozen=True)
class NodeClassification:
    label: Label
    anchor: str | None = None

    def __post_init__(self):
        if (self.label is Label.CLUSTER_FOLLOWER) != (self.anchor is not None):
            raise ValueError(f"{self.label.value} with anchor={self.anchor!r}")

    @classmethod
    def root(cls):
        return cls(Label.CLUSTER_ROOT)

    @classmethod
    def follower(cls, anchor: str):
        return cls(Label.CLUSTER_FOLLOWER, anchor)


@dataclass(frozen=True)
class PathMatrix:
    """Acyclic paths from leader nodes to ``target``, one per row."""

    target: str
    rows: tuple[tuple[str, ...], ...]

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class TopologicalCluster:
    cr: str
    members: frozenset[str]
    kind: Kind

    @property
    def followers(self) -> list[str]:
        return sort_nodes(self.members - {self.cr})


@dataclass(frozen=True)
class ClusterPartition:
    clusters: tuple[TopologicalCluster, ...]

    def __iter__(self):
        return iter(self.clusters)

    def __len__(self):
        return len(self.clusters)

    def as_sets(self) -> list[frozenset[str]]:
        return [c.members for c in self.clusters]

    def cluster_of(self, token: str) -> TopologicalCluster:
        for c in self.clusters:
            if token in c.members:
                return c
        raise UnknownNode(f"node {token!r} is in no cluster")


@dataclass(frozen=True)
class ConditionReport:
    c1: bool
    c2: bool
    maximal: bool | None
    witness: str

    @property
    def ok(self) -> bool:
        return self.c1 and self.c2 and self.maximal is not False


@dataclass(frozen=True)
class Analysis:
    """Everything the pipeline computed, for reporting."""

    graph: DiGraph
    condensation: CondensationResult
    classification: dict[str, NodeClassification]
    partition: ClusterPartition
    popular: frozenset[str] = field(default_factory=frozenset)


# -- degree rule ------------------------------------------------------------

def _require_lscc_free(g: DiGraph):
    lsccs = find_lsccs(g)
    if lsccs:
        shown = ", ".join("{" + ",".join(sort_nodes(c)) + "}" for c in lsccs)
        raise LsccPresent(f"graph has LSCCs {shown}; condense it first")


def classify_by_degree(g: DiGraph) -> dict[str, NodeClassification]:
    """In-degree 0 -> CR, 1 -> CF anchored at the in-neighbor, >= 2 -> pending."""
    _require_lscc_free(g)
    out = {}
    for i, t in enumerate(g.nodes):
        preds = g.in_adjacency[i]
        if not preds:
            out[t] = NodeClassification.root()
        elif len(preds) == 1:
            out[t] = NodeClassification.follower(g.nodes[preds[0]])
        else:
            out[t] = NodeClassification(Label.POPULAR_PENDING)
    return out


# -- path route -------------------------------------------------------------

def enumerate_acyclic_paths(g: DiGraph, v: str, leaders: Iterable[str] | None = None,
                            max_paths: int = DEFAULT_MAX_PATHS) -> PathMatrix:
    """All simple paths from any leader to ``v``, by backward DFS.

    Rows run leader-first and are sorted lexicographically by node index.
    Raises :class:`PathExplosion` once more than ``max_paths`` rows exist.
    """
    if v not in g.index:
        raise UnknownNode(f"unknown node {v!r}")
    leaders = g.leaders if leaders is None else frozenset(leaders)
    preds = g.in_adjacency
    is_leader = [t in leaders for t in g.nodes]
    start = g.index[v]
    rows: list[tuple[int, ...]] = []
    # stack entries: (node, position in its predecessor list); `visited` is the duplication set
    path = [start]
    visited = {start}
    work = [0]
    while work:
        u = path[-1]
        pos = work[-1]
        if pos >= len(preds[u]):
            work.pop()
            visited.discard(path.pop())
            continue
        work[-1] = pos + 1
        n = preds[u][pos]
        if n in visited:
            continue
        if is_leader[n]:
            rows.append(tuple(reversed(path + [n])))
            if len(rows) > max_paths:
                raise PathExplosion(f"more than {max_paths} acyclic paths reach node {v!r}")
            continue
        path.append(n)
        visited.add(n)
        work.append(0)
    rows.sort()
    return PathMatrix(v, tuple(tuple(g.nodes[i] for i in r) for r in rows))


def classify_popular(paths: PathMatrix, v: str | None = None) -> NodeClassification:
    """CF anchored at the farthest common node of all rows, else CR."""
    v = paths.target if v is None else v
    if not paths.rows:
        raise LsccPresent(f"no leader reaches node {v!r}")
    common = set(paths.rows[0])
    for row in paths.rows[1:]:
        common &= set(row)
    common.discard(v)
    if not common:
        return NodeClassification.root()
    order = [t for t in paths.rows[0] if t in common]
    for row in paths.rows[1:]:
        if [t for t in row if t in common] != order:
            raise InconsistentCommonOrder(
                f"common nodes of paths to {v!r} appear in different orders: {order} vs {row}")
    return NodeClassification.follower(order[-1])


# -- dominator route --------------------------------------------------------

def immediate_dominators(g: DiGraph, roots: Iterable[str]) -> dict[str, str | None]:
    """Immediate dominators from a virtual root joined to every node in ``roots``.

    Returns ``None`` for nodes whose immediate dominator is the virtual root.
    Nodes not reachable from any root are omitted.  Uses the iterative
    scheme of Cooper, Harvey and Kennedy.
    """
    n = len(g.nodes)
    root = n
    root_idx = sorted(g.index[t] for t in roots)
    succ = list(g.out_adjacency) + [tuple(root_idx)]
    preds = [list(p) for p in g.in_adjacency] + [[]]
    for r in root_idx:
        preds[r].append(root)

    # reverse postorder from the virtual root
    order: list[int] = []
    seen = [False] * (n + 1)
    seen[root] = True
    work = [(root, 0)]
    while work:
        u, pos = work[-1]
        if pos < len(succ[u]):
            work[-1] = (u, pos + 1)
            w = succ[u][pos]
            if not seen[w]:
                seen[w] = True
                work.append((w, 0))
        else:
            work.pop()
            order.append(u)
    order.reverse()
    rpo = {u: k for k, u in enumerate(order)}

    idom: list[int | None] = [None] * (n + 1)
    idom[root] = root

    def intersect(a, b):
        while a != b:
            while rpo[a] > rpo[b]:
                a = idom[a]
            while rpo[b] > rpo[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for u in order[1:]:
            new = None
            for p in preds[u]:
                if idom[p] is None:
                    continue
                new = p if new is None else intersect(p, new)
            if new is not None and idom[u] != new:
                idom[u] = new
                changed = True

    return {g.nodes[u]: (None if idom[u] == root else g.nodes[idom[u]])
            for u in order[1:]}


def classify_popular_dominators(g: DiGraph, leaders: Iterable[str] | None = None) -> dict[str, NodeClassification]:
    """Classify every popular node by its immediate dominator from the leaders."""
    leaders = g.leaders if leaders is None else frozenset(leaders)
    idom = immediate_dominators(g, leaders)
    out = {}
    for i, t in enumerate(g.nodes):
        if len(g.in_adjacency[i]) < 2:
            continue
        if t not in idom:
            raise LsccPresent(f"no leader reaches node {t!r}")
        d = idom[t]
        out[t] = NodeClassification.root() if d is None else NodeClassification.follower(d)
    return out


def classify(g: DiGraph, method: str = "dominators", max_paths: int = DEFAULT_MAX_PATHS) -> dict[str, NodeClassification]:
    """Full CR/CF classification of an LSCC-free graph."""
    cls = classify_by_degree(g)
    pending = [t for t, c in cls.items() if c.label is Label.POPULAR_PENDING]
    if method == "dominators":
        cls.update(classify_popular_dominators(g))
    elif method == "paths":
        leaders = g.leaders
        for v in pending:
            cls[v] = classify_popular(enumerate_acyclic_paths(g, v, leaders, max_paths), v)
    else:
        raise ValueError(f"unknown classification method {method!r}")
    return cls


# -- grouping ---------------------------------------------------------------

def _kind(g: DiGraph, members: frozenset[str]) -> Kind:
    for t in members:
        if any(p not in members for p in g.predecessors(t)):
            return Kind.FOLLOWER
    return Kind.LEADER


def assign_clusters(g: DiGraph, cls: Mapping[str, NodeClassification]) -> ClusterPartition:
    """Group each CR node with every CF node whose anchor chain ends at it."""
    root_of: dict[str, str] = {}
    for t in g.nodes:
        chain = []
        on_chain = set()
        u = t
        while u not in root_of:
            c = cls[u]
            if c.label is Label.POPULAR_PENDING:
                raise ValueError(f"node {u!r} is still unclassified")
            if c.label is Label.CLUSTER_ROOT:
                root_of[u] = u
                break
            if u in on_chain:
                raise AnchorCycle(f"anchor chain from {t!r} loops at {u!r}")
            chain.append(u)
            on_chain.add(u)
            u = c.anchor
        r = root_of[u]
        for x in chain:
            root_of[x] = r
    groups: dict[str, set[str]] = {}
    for t, r in root_of.items():
        groups.setdefault(r, set()).add(t)
    clusters = [TopologicalCluster(r, frozenset(m), _kind(g, frozenset(m))) for r, m in groups.items()]
    clusters.sort(key=lambda c: min(g.index[t] for t in c.members))
    return ClusterPartition(tuple(clusters))


def analyze(g: DiGraph, method: str = "dominators", max_paths: int = DEFAULT_MAX_PATHS) -> Analysis:
    cond = lscc_condensation(g)
    h = cond.condensed
    cls = classify(h, method, max_paths)
    inner = assign_clusters(h, cls)
    clusters = []
    for c in inner:
        members = cond.expand(c.members)
        clusters.append(TopologicalCluster(c.cr, members, _kind(g, members)))
    clusters.sort(key=lambda c: min(g.index[t] for t in c.members))
    popular = frozenset(t for i, t in enumerate(h.nodes) if len(h.in_adjacency[i]) >= 2)
    return Analysis(g, cond, cls, ClusterPartition(tuple(clusters)), popular)


def topological_clusters(g: DiGraph, method: str = "dominators",
                         max_paths: int = DEFAULT_MAX_PATHS) -> tuple[ClusterPartition, CondensationResult]:
    """Topological clusters of ``g`` over its original node tokens."""
    a = analyze(g, method, max_paths)
    return a.partition, a.condensation


# -- brute-force oracle -----------------------------------------------------

class _Masks:
    """Bitmask view of a graph for subset enumeration."""

    def __init__(self, g: DiGraph):
        self.n = len(g.nodes)
        self.out = [sum(1 << j for j in g.out_adjacency[i]) for i in range(self.n)]
        self.inn = [sum(1 << j for j in g.in_adjacency[i]) for i in range(self.n)]

    def reach(self, start: int, within: int) -> int:
        seen = 1 << start
        frontier = seen
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= self.out[low.bit_length() - 1]
                f ^= low
            nxt &= within & ~seen
            seen |= nxt
            frontier = nxt
        return seen

    def entries(self, s: int) -> int:
        """Members of ``s`` with an in-edge from outside ``s``."""
        m = 0
        f = s
        while f:
            low = f & -f
            if self.inn[low.bit_length() - 1] & ~s:
                m |= low
            f ^= low
        return m

    def roots(self, s: int) -> int:
        m = 0
        f = s
        while f:
            low = f & -f
            if self.reach(low.bit_length() - 1, s) == s:
                m |= low
            f ^= low
        return m

    def conditions(self, s: int) -> bool:
        ent = self.entries(s)
        if ent & (ent - 1):
            return False
        if ent:
            return self.reach(ent.bit_length() - 1, s) == s
        f = s
        while f:
            low = f & -f
            if self.reach(low.bit_length() - 1, s) == s:
                return True
            f ^= low
        return False


def _mask_of(g: DiGraph, s: Iterable[str]) -> int:
    m = 0
    for t in s:
        if t not in g.index:
            raise UnknownNode(f"unknown node {t!r}")
        m |= 1 << g.index[t]
    return m


def _tokens(g: DiGraph, m: int) -> list[str]:
    return [g.nodes[i] for i in range(len(g.nodes)) if m >> i & 1]


def check_cluster_conditions(g: DiGraph, s: Iterable[str], maximality: bool | None = None,
                             threshold: int = EXHAUSTIVE_THRESHOLD) -> ConditionReport:
    """Evaluate the spanning-tree (c1) and single-root-entry (c2) conditions for ``s``.

    Maximality is checked by trying every strict superset when the graph has
    at most ``threshold`` nodes.  ``maximality=True`` demands it (raising
    :class:`MaximalityUnavailable` on larger graphs); ``False`` skips it.
    """
    masks = _Masks(g)
    sm = _mask_of(g, s)
    if not sm:
        raise ValueError("empty node set")
    roots = masks.roots(sm)
    ent = masks.entries(sm)
    c1 = roots != 0
    c2 = ent == 0 or (ent & (ent - 1) == 0 and bool(ent & roots))
    notes = []
    if c1:
        notes.append(f"roots {{{', '.join(_tokens(g, roots))}}}")
    else:
        notes.append("induced subgraph has no spanning tree")
    if ent:
        notes.append(f"entered at {{{', '.join(_tokens(g, ent))}}}")
    else:
        notes.append("no incoming edges from outside")

    maximal = None
    want = maximality if maximality is not None else len(g.nodes) <= threshold
    if want:
        if len(g.nodes) > threshold:
            raise MaximalityUnavailable(f"maximality needs <= {threshold} nodes, graph has {len(g.nodes)}")
        rest = ((1 << len(g.nodes)) - 1) & ~sm
        maximal = True
        sub = rest
        while sub:
            if masks.conditions(sm | sub):
                maximal = False
                notes.append(f"extends to {{{', '.join(_tokens(g, sm | sub))}}}")
                break
            sub = (sub - 1) & rest
    return ConditionReport(c1, c2, maximal, "; ".join(notes))


def _brute_force_direct(g: DiGraph) -> list[tuple[int, int]]:
    masks = _Masks(g)
    n = len(g.nodes)
    ok = [s for s in range(1, 1 << n) if masks.conditions(s)]
    ok.sort(key=lambda s: -s.bit_count())
    maximal: list[int] = []
    for s in ok:
        if not any(s & m == s for m in maximal):
            maximal.append(s)
    covered = 0
    for m in maximal:
        if covered & m:
            raise NotAPartition(f"maximal sets overlap on {_tokens(g, covered & m)}")
        covered |= m
    if covered != (1 << n) - 1:
        raise NotAPartition(f"nodes {_tokens(g, ~covered & ((1 << n) - 1))} are in no maximal set")
    out = []
    for m in maximal:
        ent = masks.entries(m)
        cr = ent if ent else (masks.roots(m) & -masks.roots(m))
        out.append((m, cr.bit_length() - 1))
    return out


def brute_force_clusters(g: DiGraph, threshold: int = EXHAUSTIVE_THRESHOLD) -> ClusterPartition:
    """Maximal subsets satisfying both conditions, by exhaustive enumeration.

    Runs on ``g`` itself when it has at most ``threshold`` nodes, otherwise
    on its LSCC condensation (expanded back afterwards).
    """
    cond = None
    h = g
    if len(g.nodes) > threshold:
        cond = lscc_condensation(g)
        h = cond.condensed
        if len(h.nodes) > threshold:
            raise TooLarge(f"brute force needs <= {threshold} nodes after condensation, got {len(h.nodes)}")
    clusters = []
    for m, cr in _brute_force_direct(h):
        members = frozenset(_tokens(h, m))
        if cond is not None:
            members = cond.expand(members)
        clusters.append(TopologicalCluster(h.nodes[cr], members, _kind(g, members)))
    clusters.sort(key=lambda c: min(g.index[t] for t in c.members))
    return ClusterPartition(tuple(clusters))


def same_partition(a, b) -> bool:
    """Compare partitions given as ClusterPartition or iterables of sets."""
    def norm(p):
        sets = p.as_sets() if isinstance(p, ClusterPartition) else p
        return sorted(tuple(sorted(s, key=node_key)) for s in sets)
    return norm(a) == norm(b)
