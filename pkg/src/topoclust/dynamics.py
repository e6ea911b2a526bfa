"""Consensus dynamics ``dx/dt = -L x`` and clusters observed from simulation.

Integration is classical fixed-step RK4.  Because the system is linear and
autonomous, one RK4 step is multiplication by the degree-4 Taylor polynomial
of ``exp(-hL)``; the integrator builds that propagator once and applies it
in blocks of 1, 2, 4, ... up to ``MAX_BLOCK`` steps via repeated squaring,
testing the residual between blocks.  The iterates are the RK4 iterates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadRange, EdgeListSyntaxError, GraphError, MissingWeight, NotConverged, UnknownNode
from .graph import DiGraph, _DECIMAL, _strip_comment, laplacian, sort_nodes

DEFAULT_TOL = 1e-10
DEFAULT_MAX_STEPS = 10_000_000
DEFAULT_GROUP_TOL = 1e-6
WEIGHT_RANGE = (0.1, 5.0)
INITIAL_RANGE = (1.0, 20.0)
MAX_BLOCK = 1024

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class WeightAssignment:
    """Edge weights aligned with ``DiGraph.edges``.

    ``seed``/``low``/``high`` are set when the weights were drawn at random.
    """

    weights: tuple[float, ...]
    seed: int | None = None
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(not (x > 0 and np.isfinite(x)) for x in w):
            raise BadRange("weights must be finite and strictly positive")
        object.__setattr__(self, "weights", w)

    @property
    def provenance(self) -> str:
        if self.seed is None:
            return "fixed"
        return f"random(seed={self.seed}, low={self.low}, high={self.high})"

    @classmethod
    def of(cls, g: DiGraph) -> "WeightAssignment":
        return cls(tuple(e.weight for e in g.edges))

    def as_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)


@dataclass
class SteadyStateResult:
    state: np.ndarray
    residual: float
    steps: int
    converged: bool
    step_size: float
    trace: list[tuple[float, np.ndarray]] | None = field(default=None, repr=False)


@dataclass(frozen=True)
class EmpiricalPartition:
    groups: list[frozenset[str]]
    trials: int
    tol: float


def draw_weights(g: DiGraph, seed: int, low: float = WEIGHT_RANGE[0], high: float = WEIGHT_RANGE[1]) -> WeightAssignment:
    """Uniform weights on [low, high], one per edge, reproducible from ``seed``."""
    if not (0 < low < high) or not np.isfinite(high):
        raise BadRange(f"need 0 < low < high, got low={low}, high={high}")
    rng = np.random.default_rng(seed)
    return WeightAssignment(tuple(rng.uniform(low, high, size=len(g.edges))), seed, low, high)


def draw_initial_state(g: DiGraph, seed: int, low: float = INITIAL_RANGE[0], high: float = INITIAL_RANGE[1]) -> np.ndarray:
    rng = np.random.default_rng([seed, 1])
    return rng.uniform(low, high, size=len(g.nodes))


def trial_seed(master_seed: int, k: int) -> int:
    """Seed for trial ``k``: master seed XOR the k-th odd multiple of the golden-ratio constant."""
    return (master_seed ^ (_GOLDEN * (2 * k + 1))) & _MASK64


def default_step(L: np.ndarray) -> float:
    return 1.0 / (2.0 * float(np.max(np.diag(L), initial=0.0)) + 1.0)


def rk4_propagator(L: np.ndarray, h: float) -> np.ndarray:
    """Matrix of one RK4 step for ``dx/dt = -L x``."""
    n = L.shape[0]
    eye = np.eye(n)
    M = -h * L
    return eye + M @ (eye + M @ (eye + M @ (eye + M / 4.0) / 3.0) / 2.0)


def integrate(L: np.ndarray, x0: np.ndarray, tol: float = DEFAULT_TOL, max_steps: int = DEFAULT_MAX_STEPS,
              step: float | None = None, trace: bool = False) -> SteadyStateResult:
    """Run RK4 until ``max|L x| <= tol`` or ``max_steps`` steps have been taken.

    ``x0`` may be a vector or an ``N x k`` matrix of initial states.
    """
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state must be finite")
    h = default_step(L) if step is None else float(step)
    powers = [rk4_propagator(L, h)]
    steps = 0
    k = 0
    points = [] if trace else None
    while True:
        residual = float(np.max(np.abs(L @ x), initial=0.0))
        if trace:
            points.append((steps * h, x.copy()))
        if residual <= tol or steps >= max_steps:
            break
        while steps + (1 << k) > max_steps:
            k -= 1
        x = powers[k] @ x
        steps += 1 << k
        if k + 1 < len(powers):
            k += 1
        elif (1 << (k + 1)) <= MAX_BLOCK:
            powers.append(powers[k] @ powers[k])
            k += 1
    return SteadyStateResult(x, residual, steps, residual <= tol, h, points)


def steady_state(g: DiGraph, x0, weights: WeightAssignment | None = None, tol: float = DEFAULT_TOL,
                 max_steps: int = DEFAULT_MAX_STEPS, step: float | None = None, trace: bool = False,
                 strict: bool = True) -> SteadyStateResult:
    """Integrate the consensus dynamics over ``g`` from ``x0`` to rest.

    With ``strict`` (the default) an exhausted step budget raises
    :class:`NotConverged`, which carries the partial result.
    """
    w = (weights or WeightAssignment.of(g)).as_array()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[0] != len(g.nodes):
        raise ValueError(f"initial state has {x0.shape[0]} entries, graph has {len(g.nodes)} nodes")
    L = laplacian(g, w)
    res = integrate(L, x0, tol, max_steps, step, trace)
    if strict and not res.converged:
        raise NotConverged(f"residual {res.residual:.3e} > {tol:g} after {res.steps} steps", res)
    return res


def _union_find_groups(n: int, pairs) -> list[list[int]]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda m: m[0])


def group_by_value(x, tol: float = DEFAULT_GROUP_TOL, labels=None) -> list[frozenset]:
    """Chain together entries within ``tol * (1 + max|x|)`` of each other.

    Groups hold positions of ``x`` (or the matching ``labels``) and are
    ordered by their smallest position.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    labels = list(range(n)) if labels is None else list(labels)
    if n == 0:
        return []
    thresh = tol * (1.0 + float(np.max(np.abs(x))))
    order = np.argsort(x, kind="stable")
    pairs = [(int(order[i]), int(order[i + 1])) for i in range(n - 1) if x[order[i + 1]] - x[order[i]] <= thresh]
    return [frozenset(labels[i] for i in grp) for grp in _union_find_groups(n, pairs)]


def common_refinement(partitions, order_key=None) -> list[frozenset]:
    """Coarsest partition refining every partition in ``partitions``."""
    key = order_key or (lambda t: t)
    signature: dict = {}
    for p in partitions:
        for gid, grp in enumerate(p):
            for t in grp:
                signature.setdefault(t, []).append(gid)
    blocks: dict[tuple, set] = {}
    for t, sig in signature.items():
        blocks.setdefault(tuple(sig), set()).add(t)
    return sorted((frozenset(b) for b in blocks.values()), key=lambda s: min(key(t) for t in s))


def empirical_clusters(g: DiGraph, trials: int = 5, master_seed: int = 0, tol: float = DEFAULT_GROUP_TOL,
                       max_steps: int = DEFAULT_MAX_STEPS) -> EmpiricalPartition:
    """Nodes that settle on the same value in every one of ``trials`` random runs.

    Each trial draws weights in [0.1, 5] and initial values in [1, 20] from
    its own derived seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    key = g.sort_key
    per_trial = []
    for k in range(trials):
        seed = trial_seed(master_seed, k)
        w = draw_weights(g, seed)
        x0 = draw_initial_state(g, seed)
        try:
            res = steady_state(g, x0, w, max_steps=max_steps)
        except NotConverged as exc:
            exc.trial = k
            raise
        per_trial.append(group_by_value(res.state, tol, g.nodes))
    return EmpiricalPartition(common_refinement(per_trial, key), trials, tol)


def steady_state_map(g: DiGraph, weights: WeightAssignment | None = None, tol: float = DEFAULT_TOL,
                     max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """Matrix ``S`` with ``x(inf) = S x(0)``, built column by column from basis vectors."""
    n = len(g.nodes)
    w = (weights or WeightAssignment.of(g)).as_array()
    res = integrate(laplacian(g, w), np.eye(n), tol, max_steps)
    if not res.converged:
        raise NotConverged(f"steady-state map residual {res.residual:.3e} after {res.steps} steps", res)
    return res.state


def weighted_clusters(g: DiGraph, weights: WeightAssignment | None = None, tol: float = DEFAULT_GROUP_TOL,
                      max_steps: int = DEFAULT_MAX_STEPS) -> list[frozenset[str]]:
    """Clusters for one fixed weighting: nodes whose steady-state map rows coincide."""
    S = steady_state_map(g, weights, max_steps=max_steps)
    n = len(g.nodes)
    thresh = tol * (1.0 + float(np.max(np.abs(S))))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if np.max(np.abs(S[i] - S[j])) <= thresh]
    return [frozenset(g.nodes[i] for i in grp) for grp in _union_find_groups(n, pairs)]


def refines(fine, coarse) -> bool:
    """True when every block of ``fine`` lies inside some block of ``coarse``."""
    coarse = [frozenset(c) for c in coarse]
    return all(any(frozenset(f) <= c for c in coarse) for f in fine)


# -- weight and initial-state files -----------------------------------------

def parse_weights(source, g: DiGraph) -> WeightAssignment:
    """Read ``<source> <target> <weight>`` lines covering every edge of ``g``."""
    text = source if isinstance(source, str) else source.read()
    found: dict[tuple[str, str], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        fields = _strip_comment(raw).split()
        if not fields:
            continue
        if len(fields) != 3 or not _DECIMAL.fullmatch(fields[2]):
            raise EdgeListSyntaxError(f"expected '<source> <target> <weight>', got {raw.strip()!r}", lineno)
        key = (fields[0], fields[1])
        if key not in g.edge_set:
            raise GraphError(f"edge {key[0]} -> {key[1]} is not in the graph", lineno)
        if key in found:
            raise GraphError(f"duplicate weight for {key[0]} -> {key[1]}", lineno)
        w = float(fields[2])
        if not w > 0:
            raise GraphError(f"weight must be > 0, got {fields[2]}", lineno)
        found[key] = w
    missing = [e for e in g.edges if (e.source, e.target) not in found]
    if missing:
        shown = ", ".join(f"{e.source}->{e.target}" for e in missing[:5])
        raise MissingWeight(f"no weight for {len(missing)} edge(s): {shown}")
    return WeightAssignment(tuple(found[(e.source, e.target)] for e in g.edges))


def parse_initial_state(source, g: DiGraph) -> np.ndarray:
    """Read ``<token> <value>`` lines giving every node's initial value."""
    text = source if isinstance(source, str) else source.read()
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        fields = _strip_comment(raw).split()
        if not fields:
            continue
        if len(fields) != 2 or not _DECIMAL.fullmatch(fields[1]):
            raise EdgeListSyntaxError(f"expected '<token> <value>', got {raw.strip()!r}", lineno)
        if fields[0] not in g.index:
            raise UnknownNode(f"unknown node {fields[0]!r}", lineno)
        if fields[0] in values:
            raise GraphError(f"duplicate value for node {fields[0]!r}", lineno)
        values[fields[0]] = float(fields[1])
    missing = [t for t in g.nodes if t not in values]
    if missing:
        raise GraphError(f"no initial value for node(s) {', '.join(sort_nodes(missing)[:5])}")
    return np.array([values[t] for t in g.nodes])
