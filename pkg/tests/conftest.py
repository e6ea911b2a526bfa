from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from topoclust.condensation import find_lsccs
from topoclust.graph import DiGraph, Edge, read_edge_list

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

CORPUS_SEED = 20231015
CORPUS_SIZE = 200


def fixture_graph(name: str) -> DiGraph:
    return read_edge_list(FIXTURES / f"{name}.edges")


def random_digraph(rng, n: int, p: float) -> DiGraph:
    nodes = [str(i) for i in range(1, n + 1)]
    edges = [Edge(u, v) for u in nodes for v in nodes if u != v and rng.random() < p]
    return DiGraph(tuple(nodes), tuple(edges))


def random_lscc_free_corpus(count=CORPUS_SIZE, seed=CORPUS_SEED, n_range=(4, 10), p=0.25) -> list[DiGraph]:
    """Rejection-sample LSCC-free digraphs with 4-10 nodes and edge probability ``p``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        g = random_digraph(rng, int(rng.integers(n_range[0], n_range[1] + 1)), p)
        if not find_lsccs(g):
            out.append(g)
    return out


@st.composite
def digraphs(draw, min_nodes=1, max_nodes=8, weighted=False):
    n = draw(st.integers(min_nodes, max_nodes))
    nodes = [str(i) for i in range(1, n + 1)]
    pairs = [(u, v) for u in nodes for v in nodes if u != v]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    weight = st.floats(0.1, 5.0) if weighted else st.just(1.0)
    edges = [Edge(u, v, draw(weight)) for u, v in chosen]
    return DiGraph(tuple(nodes), tuple(edges))


@pytest.fixture(scope="session")
def fig():
    return fixture_graph


@pytest.fixture(scope="session")
def corpus():
    return random_lscc_free_corpus()


# -- acceptance summary -----------------------------------------------------

_ACCEPTANCE: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _ACCEPTANCE.append((marker.args[0], "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _ACCEPTANCE:
        terminalreporter.write_line(f"[{verdict}] {name}")
