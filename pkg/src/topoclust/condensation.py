"""Strongly connected components and LSCC condensation.

An LSCC (leader-like SCC) is a strongly connected component of two or more
nodes that receives no edge from the rest of the graph.  All of its members
settle on one value, so it can be contracted onto a single representative
without changing the topological clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import DiGraph, Edge, node_key


@dataclass(frozen=True)
class SccPartition:
    components: tuple[frozenset[str], ...]
    component_of: dict[str, int]


@dataclass(frozen=True)
class CondensationResult:
    condensed: DiGraph
    expansion: dict[str, frozenset[str]]

    @property
    def representative_of(self) -> dict[str, str]:
        return {m: rep for rep, members in self.expansion.items() for m in members}

    @property
    def contracted(self) -> dict[str, frozenset[str]]:
        """Only the representatives that stand for more than one node."""
        return {r: m for r, m in self.expansion.items() if len(m) > 1}

    def expand(self, tokens) -> frozenset[str]:
        return frozenset().union(*(self.expansion[t] for t in tokens))


def _tarjan(n: int, succ) -> list[list[int]]:
    # iterative Tarjan; recursion depth would otherwise grow with path length
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            nbrs = succ[v]
            if pos < len(nbrs):
                work[-1] = (v, pos + 1)
                w = nbrs[pos]
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def strongly_connected_components(g: DiGraph) -> SccPartition:
    """Maximal SCCs, ordered by their smallest member index."""
    comps = _tarjan(len(g.nodes), g.out_adjacency)
    comps.sort(key=min)
    components = tuple(frozenset(g.nodes[i] for i in c) for c in comps)
    component_of = {t: k for k, c in enumerate(components) for t in c}
    return SccPartition(components, component_of)


def find_lsccs(g: DiGraph, scc: SccPartition | None = None) -> list[frozenset[str]]:
    """SCCs of size >= 2 with no incoming edge from outside themselves."""
    scc = scc or strongly_connected_components(g)
    entered = set()
    for e in g.edges:
        cu, cv = scc.component_of[e.source], scc.component_of[e.target]
        if cu != cv:
            entered.add(cv)
    return [c for k, c in enumerate(scc.components) if len(c) > 1 and k not in entered]


def lscc_condensation(g: DiGraph) -> CondensationResult:
    """Contract every LSCC onto its smallest member.

    Edges leaving an LSCC are re-sourced to the representative; parallel
    edges produced this way are merged with summed weights.  Edges inside an
    LSCC are dropped.
    """
    lsccs = find_lsccs(g)
    rep_of = {t: t for t in g.nodes}
    for comp in lsccs:
        rep = min(comp, key=node_key)
        for t in comp:
            rep_of[t] = rep
    merged: dict[tuple[str, str], float] = {}
    for e in g.edges:
        u, v = rep_of[e.source], rep_of[e.target]
        if u == v:
            continue
        merged[(u, v)] = merged.get((u, v), 0.0) + e.weight
    nodes = tuple(set(rep_of.values()))
    condensed = DiGraph(nodes, tuple(Edge(u, v, w) for (u, v), w in merged.items()))
    expansion: dict[str, set[str]] = {r: set() for r in condensed.nodes}
    for t, r in rep_of.items():
        expansion[r].add(t)
    return CondensationResult(condensed, {r: frozenset(m) for r, m in expansion.items()})
