import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from growdda.decentralized import (
    AgentState,
    ProtocolStats,
    abs_cosine,
    average_consensus,
    centralized_reference,
    decentralized_capped_projection,
    decentralized_greedy_pick,
    decentralized_subgradient_round,
    edge_owners,
    local_rows,
    max_consensus,
)
from growdda.decentralized import decentralized_top_eigvec
from growdda.design import SelectionProblem, greedy_select, project_capped_simplex
from growdda.graph import CostModel, Graph, consensus_matrix, laplacian, random_sensor_graph
from oracles import path, random_connected


def _design_P(g):
    return np.eye(g.n) - laplacian(g) / g.n


def test_agent_state_validates_row():
    AgentState(0, 0.1, np.zeros(2), {0: 0.5, 1: 0.5})
    with pytest.raises(ValueError):
        AgentState(0, 0.1, np.zeros(2), {0: 0.7, 1: 0.5})


def test_local_rows_respect_sparsity():
    g = Graph(4, path(4))
    rows = local_rows(g, consensus_matrix(laplacian(g), 2))
    assert set(rows[0]) == {0, 1} and set(rows[1]) == {0, 1, 2}
    with pytest.raises(ValueError):
        local_rows(Graph(4, [(0, 1), (1, 2)]), consensus_matrix(laplacian(g), 2))


def test_two_node_exact_inner_limit():
    g = Graph(2, [(0, 1)])
    P = _design_P(g)  # [[1/2,1/2],[1/2,1/2]]: one round reaches the average
    y0 = np.array([0.8, -0.3])
    y, _ = decentralized_top_eigvec(g, P, 1, 1, y0=y0)
    D = P - 0.5
    assert np.allclose(y, D @ y0 / np.linalg.norm(y0), atol=1e-15)


def test_inner_loop_reaches_average():
    g = Graph(5, path(5))
    P = consensus_matrix(laplacian(g), 2)
    Phi0 = np.diag(np.arange(1.0, 6.0))
    Phi = average_consensus(P, Phi0, 4000)
    assert np.allclose(Phi, np.tile(Phi0.sum(0) / 5, (5, 1)), atol=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_inner_loop_conservation_and_contraction(seed):
    rng = np.random.default_rng(seed)
    n = 7
    g = Graph(n, random_connected(rng, n, 0.2))
    P = consensus_matrix(laplacian(g), g.max_degree())
    s2 = np.sort(np.linalg.eigvalsh(P))[-2]
    Phi = rng.standard_normal((n, n))
    total = Phi.sum(0)
    limit = np.tile(total / n, (n, 1))
    for _ in range(30):
        nxt = average_consensus(P, Phi, 1)
        assert np.allclose(nxt.sum(0), total, atol=1e-10)
        assert np.linalg.norm(nxt - limit) <= s2 * np.linalg.norm(Phi - limit) + 1e-12
        Phi = nxt


def test_stats_count_messages():
    g = Graph(4, path(4))
    P = _design_P(g)
    _, stats = decentralized_top_eigvec(g, P, 2, 3)
    assert stats.rounds == 6
    assert stats.messages == 2 * 3 * 2 * g.m + 2 * 2 * g.m
    assert stats.scalars == 2 * 3 * 2 * g.m * 4 + 2 * 2 * g.m


def test_large_inner_rounds_match_centralized():
    g = random_sensor_graph(12, 0.5, seed=4)
    P = _design_P(g)
    y, _ = decentralized_top_eigvec(g, P, 30, 3000, seed=2)
    ref = centralized_reference(P, 30, seed=2)
    assert abs_cosine(y, ref) > 1 - 1e-8


def test_max_consensus_examples():
    g = Graph(3, path(3))
    assert np.array_equal(max_consensus([2.0, 2.0, 2.0], g, 10), [2.0, 2.0, 2.0])
    out, hist = max_consensus([1.0, 2.0, 3.0], g, 40, seed=1, history=True)
    assert np.all(hist <= 3.0) and np.all(np.diff(hist, axis=0) >= 0)
    assert np.array_equal(out, [3.0, 3.0, 3.0])


def test_max_consensus_reaches_max_often():
    hits = 0
    for seed in range(50):
        g = random_sensor_graph(20, 0.35, seed=seed)
        vals = np.random.default_rng(seed).standard_normal(20)
        hits += np.all(max_consensus(vals, g, 500, seed=seed) == vals.max())
    assert hits >= 48


def test_max_consensus_pairs_tie_to_lower_id():
    g = Graph(3, path(3))
    vals, ids = max_consensus([1.0, 1.0, 0.0], g, 60, seed=0, ids=[5, 2, 9])
    assert np.all(ids == 2)


def test_subgradient_round_examples():
    cands = [(0, 0, 2)]
    y = np.array([0.5, 0.0, 0.0])
    # balanced step: (y0 - y2)^2 = gamma c
    out = decentralized_subgradient_round([0.4], cands, 0.7, 0.25, [1.0], y)
    assert out[0] == pytest.approx(0.4)
    y = np.array([1, 0, -1]) / np.sqrt(2)
    out = decentralized_subgradient_round([0.2], cands, 0.1, 0.0, [1.0], y)
    assert out[0] == pytest.approx(0.4)


@given(st.integers(3, 9), st.integers(0, 10**6))
def test_subgradient_round_equals_centralized(n, seed):
    rng = np.random.default_rng(seed)
    g = Graph(n, random_connected(rng, n, 0.2), rng.uniform(size=(n, 2)))
    prob = SelectionProblem.from_graph(g, 0.05, cost_model=CostModel())
    if prob.K == 0:
        return
    y = rng.standard_normal(n)
    w = rng.uniform(size=prob.K)
    kappa = 0.3
    central = np.clip(w - kappa * (-prob.edge_gaps(y) + prob.gamma * prob.costs), 0, 1)
    dec = decentralized_subgradient_round(w, prob.candidates, kappa, prob.gamma, prob.costs, y)
    assert np.array_equal(dec, central)


def test_edge_owner_is_lower_endpoint():
    assert list(edge_owners([(0, 3, 1), (1, 2, 4)])) == [1, 2]


def test_greedy_pick_single_and_tie():
    g = Graph(3, path(3))
    assert decentralized_greedy_pick(g, [(0, 0, 2)], np.array([1.0, 0, -1.0]), 0.0, [1.0]) == 0
    g4 = Graph(4, [(0, 1), (1, 2), (2, 3)])
    cands = [(0, 0, 2), (1, 1, 3)]
    y = np.array([1.0, 0.0, 0.0, -1.0])
    assert decentralized_greedy_pick(g4, cands, y, 0.0, [1.0, 1.0]) == 0


@pytest.mark.parametrize("seed", range(10))
def test_greedy_pick_matches_centralized(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 11))
    g = Graph(n, random_connected(rng, n, 0.15), rng.uniform(size=(n, 2)))
    prob = SelectionProblem.from_graph(g, float(rng.uniform(0, 0.1)), cost_model=CostModel())
    from growdda.spectral import fiedler_pair

    y = fiedler_pair(prob.laplacian(np.zeros(prob.K)), stride=32).vector
    stats = ProtocolStats()
    l = decentralized_greedy_pick(g, prob.candidates, y, prob.gamma, prob.costs, seed=seed, stats=stats)
    assert l == greedy_select(prob, 1)[0]
    assert stats.rounds == 50 * n


def test_decentralized_projection_matches_centralized():
    g = random_sensor_graph(10, 0.5, seed=0)
    prob = SelectionProblem.from_graph(g)
    v = np.random.default_rng(0).uniform(-0.5, 1.5, prob.K)
    P = consensus_matrix(laplacian(g), g.max_degree())
    out = decentralized_capped_projection(v, prob.candidates, g, P, 5, rounds=3000)
    assert np.allclose(out, project_capped_simplex(v, 5), atol=1e-6)
