import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, digraphs, random_lscc_free_corpus
from topoclust.clusters import topological_clusters
from topoclust.dynamics import (
    WeightAssignment,
    common_refinement,
    default_step,
    draw_initial_state,
    draw_weights,
    empirical_clusters,
    group_by_value,
    integrate,
    parse_initial_state,
    parse_weights,
    refines,
    rk4_propagator,
    steady_state,
    steady_state_map,
    trial_seed,
    weighted_clusters,
)
from topoclust.errors import BadRange, EdgeListSyntaxError, GraphError, MissingWeight, NotConverged
from topoclust.graph import DiGraph, laplacian, parse_edge_list, reachable_from


def load_weights(g, name):
    with open(FIXTURES / name, encoding="utf-8") as fh:
        return parse_weights(fh, g)


# -- random draws -----------------------------------------------------------

def test_draw_weights_deterministic(fig):
    g = fig("fig4")
    assert draw_weights(g, 7) == draw_weights(g, 7)
    assert draw_weights(g, 7) != draw_weights(g, 8)


def test_draw_weights_range(fig):
    w = draw_weights(fig("fig4"), 1, 0.1, 5.0)
    assert len(w.weights) == 19
    assert all(0.1 <= x <= 5.0 for x in w.weights)
    assert w.provenance == "random(seed=1, low=0.1, high=5.0)"


@pytest.mark.parametrize("low, high", [(0.0, 5.0), (-1.0, 5.0), (5.0, 5.0), (3.0, 1.0)])
def test_draw_weights_bad_range(fig, low, high):
    with pytest.raises(BadRange):
        draw_weights(fig("fig4"), 1, low, high)


def test_draw_initial_state_range(fig):
    x = draw_initial_state(fig("fig4"), 3)
    assert x.shape == (15,)
    assert np.all((x >= 1.0) & (x <= 20.0))
    np.testing.assert_array_equal(x, draw_initial_state(fig("fig4"), 3))


def test_trial_seeds_distinct():
    seeds = {trial_seed(0, k) for k in range(100)}
    assert len(seeds) == 100
    assert all(0 <= s < 2 ** 64 for s in seeds)
    assert trial_seed(0, 0) != trial_seed(1, 0)


def test_weight_assignment_rejects_nonpositive():
    with pytest.raises(BadRange):
        WeightAssignment((1.0, 0.0))


# -- integration ------------------------------------------------------------

def test_rk4_propagator_matches_taylor():
    L = laplacian(parse_edge_list("1 2 2\n2 3\n3 2 0.5"))
    h = default_step(L)
    M = -h * L
    expected = np.eye(3) + M + M @ M / 2 + M @ M @ M / 6 + M @ M @ M @ M / 24
    np.testing.assert_allclose(rk4_propagator(L, h), expected, atol=1e-15)


def test_block_stepping_matches_single_steps():
    L = laplacian(parse_edge_list("1 2 2\n2 3\n3 2 0.5\n1 4 3"))
    x0 = np.array([1.0, 4.0, -2.0, 7.0])
    P = rk4_propagator(L, default_step(L))
    x = x0.copy()
    for _ in range(300):
        x = P @ x
    res = integrate(L, x0, tol=0.0, max_steps=300)
    assert res.steps == 300 and not res.converged
    np.testing.assert_allclose(res.state, x, atol=1e-12)


def test_single_edge_follows_leader():
    g = parse_edge_list("1 2 3.7")
    res = steady_state(g, [4.0, -9.0])
    np.testing.assert_allclose(res.state, [4.0, 4.0], atol=1e-9)
    assert res.residual <= 1e-10 and res.converged
    assert res.step_size == pytest.approx(1 / (2 * 3.7 + 1))


def test_fig1_unit_weights_closed_form(fig):
    # reference values also obtained from scipy.linalg.expm(-L t) at large t
    res = steady_state(fig("fig1"), [1, 3, 5, 2, 4, 0, 9])
    np.testing.assert_allclose(res.state, [2, 2, 2, 3, 3, 2.5, 2.5], atol=1e-6)


@pytest.mark.parametrize("name", ["fig1", "fig3", "fig4", "fig6"])
def test_consensus_is_equilibrium(fig, name):
    g = fig(name)
    w = draw_weights(g, 11)
    res = steady_state(g, np.full(len(g.nodes), 6.25), w)
    assert res.steps == 0
    np.testing.assert_array_equal(res.state, 6.25)


@pytest.mark.parametrize("name", ["fig1", "fig3", "fig4", "fig6"])
def test_leaders_conserved(fig, name):
    g = fig(name)
    x0 = draw_initial_state(g, 5)
    res = steady_state(g, x0, draw_weights(g, 5))
    for t in g.leaders:
        i = g.index[t]
        assert abs(res.state[i] - x0[i]) <= 1e-9


@pytest.mark.parametrize("name", ["fig1", "fig3", "fig4", "fig6"])
def test_halving_step(fig, name):
    g = fig(name)
    w = draw_weights(g, 2)
    x0 = draw_initial_state(g, 2)
    full = steady_state(g, x0, w)
    half = steady_state(g, x0, w, step=full.step_size / 2)
    assert np.max(np.abs(full.state - half.state)) <= 1e-8


def test_not_converged_carries_result(fig):
    g = fig("fig4")
    with pytest.raises(NotConverged) as info:
        steady_state(g, draw_initial_state(g, 0), max_steps=3)
    assert info.value.result.steps == 3
    assert info.value.result.residual > 1e-10
    res = steady_state(g, draw_initial_state(g, 0), max_steps=3, strict=False)
    assert not res.converged


def test_trace_records_trajectory():
    g = parse_edge_list("1 2")
    res = steady_state(g, [1.0, 0.0], trace=True)
    times = [t for t, _ in res.trace]
    assert times[0] == 0.0 and times == sorted(times)
    np.testing.assert_array_equal(res.trace[0][1], [1.0, 0.0])
    np.testing.assert_array_equal(res.trace[-1][1], res.state)


def test_x0_length_checked(fig):
    with pytest.raises(ValueError):
        steady_state(fig("fig1"), [1.0, 2.0])


# -- grouping ---------------------------------------------------------------

def test_group_by_value_examples():
    assert group_by_value([2, 2 + 1e-9, 5], 1e-6) == [{0, 1}, {2}]
    assert group_by_value([3.5] * 4) == [{0, 1, 2, 3}]
    assert group_by_value([0, 1, 2], 1e-6) == [{0}, {1}, {2}]
    assert group_by_value([5, 1, 5], labels="abc") == [{"a", "c"}, {"b"}]
    assert group_by_value([]) == []


def test_group_by_value_chains():
    eps = 0.8e-6 * (1 + 1.0)
    assert group_by_value([0.0, eps, 2 * eps, 1.0], 1e-6) == [{0, 1, 2}, {3}]


def test_common_refinement():
    a = [frozenset("ab"), frozenset("cd")]
    b = [frozenset("abc"), frozenset("d")]
    assert common_refinement([a, b]) == [{"a", "b"}, {"c"}, {"d"}]


def test_refines():
    assert refines([{"1"}, {"2"}], [{"1", "2"}])
    assert not refines([{"1", "2"}], [{"1"}, {"2"}])


# -- empirical and weighted clusters ----------------------------------------

def test_empirical_fig4(fig):
    emp = empirical_clusters(fig("fig4"), 5)
    assert emp.groups == [{"1", "2", "3", "4"}, {"5", "6", "7"}, {"8"},
                          {"9", "10", "11"}, {"12", "13", "14"}, {"15"}]
    assert emp.trials == 5 and emp.tol == 1e-6


def test_empirical_fig6(fig):
    emp = empirical_clusters(fig("fig6"), 5)
    assert emp.groups == [{"1", "2", "3"}, {"4", "5"}, {"6"}, {"7"}, {"8"}, {"9"}]


def test_empirical_single_node():
    assert empirical_clusters(DiGraph(("1",)), 5).groups == [{"1"}]


def test_empirical_reports_trial(fig):
    with pytest.raises(NotConverged) as info:
        empirical_clusters(fig("fig4"), 3, max_steps=2)
    assert info.value.trial == 0


def test_empirical_rejects_zero_trials(fig):
    with pytest.raises(ValueError):
        empirical_clusters(fig("fig4"), 0)


def test_weighted_fig6(fig):
    g = fig("fig6")
    assert weighted_clusters(g, load_weights(g, "fig6a.w")) == [
        {"1", "2", "3"}, {"4", "5"}, {"6"}, {"7", "8", "9"}]


def test_weighted_fig1(fig):
    g = fig("fig1")
    assert weighted_clusters(g, load_weights(g, "fig1_ones.w")) == [{"1", "2", "3"}, {"4", "5"}, {"6", "7"}]
    assert weighted_clusters(g) == [{"1", "2", "3"}, {"4", "5"}, {"6", "7"}]
    assert weighted_clusters(g, load_weights(g, "fig1b.w")) == [{"1", "2", "3"}, {"4", "5"}, {"6"}, {"7"}]


def test_steady_state_map_rows_are_stochastic(fig):
    g = fig("fig4")
    S = steady_state_map(g, draw_weights(g, 4))
    np.testing.assert_allclose(S.sum(axis=1), 1.0, atol=1e-9)
    assert S.min() > -1e-9
    for t in g.leaders:
        i = g.index[t]
        np.testing.assert_allclose(S[i], np.eye(len(g.nodes))[i], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(digraphs(max_nodes=7), st.integers(0, 2 ** 32 - 1))
def test_topological_refines_weighted(g, seed):
    w = draw_weights(g, seed)
    topo = topological_clusters(g)[0].as_sets()
    weighted = weighted_clusters(g, w)
    assert refines(topo, weighted)
    x = steady_state(g, draw_initial_state(g, seed), w).state
    assert refines(weighted, group_by_value(x, labels=g.nodes))
    for c in topo:
        vals = x[[g.index[t] for t in c]]
        assert vals.max() - vals.min() <= 1e-6 * (1 + np.max(np.abs(x)))


def test_spanning_tree_reaches_consensus():
    hits = 0
    for g in random_lscc_free_corpus(count=60, seed=99, p=0.35):
        roots = [t for t in g.nodes if reachable_from(g, t) == set(g.nodes)]
        if not roots:
            continue
        hits += 1
        for k in range(3):
            x = steady_state(g, draw_initial_state(g, k), draw_weights(g, k)).state
            assert len(group_by_value(x)) == 1
    assert hits >= 5


# -- file formats -----------------------------------------------------------

def test_parse_weights_requires_every_edge():
    g = parse_edge_list("1 2\n2 3")
    w = parse_weights("2 3 0.5\n1 2 4  # c\n", g)
    assert w.weights == (4.0, 0.5)
    with pytest.raises(MissingWeight):
        parse_weights("1 2 4\n", g)
    with pytest.raises(EdgeListSyntaxError):
        parse_weights("1 2\n2 3 1\n", g)
    with pytest.raises(GraphError, match="line 1"):
        parse_weights("3 1 2\n", g)
    with pytest.raises(GraphError):
        parse_weights("1 2 0\n2 3 1\n", g)


def test_parse_initial_state():
    g = parse_edge_list("1 2\n2 3")
    np.testing.assert_array_equal(parse_initial_state(io.StringIO("3 9\n1 -2.5\n2 0\n"), g), [-2.5, 0.0, 9.0])
    with pytest.raises(GraphError):
        parse_initial_state("1 1\n2 2\n", g)
    with pytest.raises(GraphError):
        parse_initial_state("1 1\n2 2\n3 3\n4 4\n", g)
