import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from growdda.graph import (
    CostModel,
    DynamicNetwork,
    EdgeVector,
    Graph,
    GraphError,
    candidate_edges,
    consensus_matrix,
    edge_cost,
    edge_costs,
    edge_vector,
    incidence_matrix,
    laplacian,
    random_sensor_graph,
)
from oracles import complete, lambda_n1, lap, path, random_connected, random_edges


def test_path3_laplacian():
    L = laplacian(Graph(3, path(3)))
    assert np.array_equal(L, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_empty_laplacian_is_zero():
    assert np.array_equal(laplacian(Graph(3)), np.zeros((3, 3)))


def test_laplacian_matches_outer_products():
    rng = np.random.default_rng(3)
    edges = random_edges(rng, 10, 0.4)
    assert np.allclose(laplacian(Graph(10, edges)), lap(10, edges), atol=0)


def test_incidence_product():
    rng = np.random.default_rng(4)
    g = Graph(8, random_edges(rng, 8, 0.5))
    H = incidence_matrix(g)
    assert np.array_equal(H @ H.T, laplacian(g))


def test_edge_vector_shape():
    a = edge_vector(5, (1, 3))
    assert np.count_nonzero(a) == 2 and a.sum() == 0 and a @ a == 2
    assert np.array_equal(EdgeVector(0, 1, 3).vector(5), a)


@pytest.mark.parametrize("bad", [[(0, 0)], [(0, 1), (1, 0)], [(0, 5)]])
def test_graph_rejects_bad_edges(bad):
    with pytest.raises(GraphError):
        Graph(3, bad)


def test_graph_sorts_edges():
    assert Graph(4, [(2, 3), (1, 0)]).edges == ((0, 1), (2, 3))


def test_consensus_path3():
    L = laplacian(Graph(3, path(3)))
    P = consensus_matrix(L, 2)
    assert np.allclose(P, np.eye(3) - L / 6)
    assert np.allclose(P.sum(axis=1), 1)


def test_consensus_triangle_sigma2():
    P = consensus_matrix(laplacian(Graph(3, complete(3))), 2)
    assert np.sort(np.linalg.eigvalsh(P))[-2] == pytest.approx(0.5, abs=1e-12)


def test_consensus_single_node():
    assert np.array_equal(consensus_matrix(np.zeros((1, 1)), 0), [[1.0]])


def test_consensus_rejects_small_delta():
    with pytest.raises(GraphError):
        consensus_matrix(laplacian(Graph(4, [(0, 1), (0, 2), (0, 3)])), 2)


def test_candidates_triangle_and_path():
    assert candidate_edges(Graph(3, complete(3))) == []
    assert [(c.i, c.j) for c in candidate_edges(Graph(3, path(3)))] == [(0, 2)]


def test_candidates_star():
    star = Graph(5, [(0, k) for k in range(1, 5)])
    cands = candidate_edges(star)
    assert len(cands) == 6
    assert all(c.i > 0 for c in cands)
    assert [c.index for c in cands] == list(range(6))


def test_sensor_graph_two_nodes():
    g = random_sensor_graph(2, math.sqrt(2), seed=1)
    assert g.edges == ((0, 1),) and g.is_connected()


def test_sensor_graph_deterministic_and_connected():
    a = random_sensor_graph(100, 0.15, seed=7)
    b = random_sensor_graph(100, 0.15, seed=7)
    assert a.edges == b.edges
    assert lambda_n1(lap(100, a.edges)) > 1e-9


def test_sensor_graph_grows_radius():
    g = random_sensor_graph(30, 0.01, seed=2)
    assert g.is_connected()


def test_edge_cost_examples():
    m = CostModel(10, 0.5, 0.7)
    pos = np.array([[0.0, 0.0], [0.7, 0.0], [0.7 + 2 / 0.5, 0.0]])
    assert edge_cost((0, 1), pos, m) == pytest.approx(10.0)
    assert edge_cost((0, 2), pos, m) == pytest.approx(10 * math.e**2)
    with pytest.raises(GraphError):
        edge_cost((0, 1), None, m)


def test_edge_costs_unit_without_model():
    g = Graph(3, path(3))
    assert np.array_equal(edge_costs(g, [(0, 2)], None), [1.0])


def test_dynamic_network_versions():
    base = Graph(4, path(4))
    net = DynamicNetwork(base, ((1, (0, 3)), (3, (0, 2))))
    assert net.delta_max == 3
    assert [net.edges_added_by(t) for t in range(5)] == [0, 1, 1, 2, 2]
    assert np.array_equal(net.laplacian_at(3), lap(4, path(4) + [(0, 3), (0, 2)]))
    with pytest.raises(GraphError):
        DynamicNetwork(base, ((1, (0, 1)),))
    with pytest.raises(GraphError):
        DynamicNetwork(base, ((2, (0, 2)), (2, (0, 3))))


@given(st.integers(2, 12), st.integers(0, 10**6))
def test_laplacian_invariants(n, seed):
    rng = np.random.default_rng(seed)
    edges = random_edges(rng, n, 0.4)
    L = laplacian(Graph(n, edges))
    x = rng.standard_normal(n)
    assert np.array_equal(L, L.T)
    assert np.allclose(L @ np.ones(n), 0, atol=1e-12)
    assert x @ L @ x == pytest.approx(sum((x[i] - x[j]) ** 2 for i, j in edges), abs=1e-10)


@given(st.integers(2, 12), st.integers(0, 10**6))
def test_consensus_invariants(n, seed):
    rng = np.random.default_rng(seed)
    g = Graph(n, random_edges(rng, n, 0.5))
    P = consensus_matrix(laplacian(g), g.max_degree() + int(rng.integers(3)))
    assert np.allclose(P.sum(axis=0), 1) and np.allclose(P.sum(axis=1), 1)
    assert P.min() >= 0
    assert np.linalg.eigvalsh(P).min() >= -1e-12


@given(st.integers(3, 12), st.integers(0, 10**6))
def test_adding_edge_never_lowers_connectivity(n, seed):
    rng = np.random.default_rng(seed)
    g = Graph(n, random_connected(rng, n, 0.2))
    cands = candidate_edges(g)
    if not cands:
        return
    c = cands[int(rng.integers(len(cands)))]
    before = lambda_n1(laplacian(g))
    after = lambda_n1(laplacian(g.with_edges([(c.i, c.j)])))
    assert after >= before - 1e-10


@given(st.integers(1, 12), st.integers(0, 10**6))
def test_candidates_partition_pairs(n, seed):
    rng = np.random.default_rng(seed)
    g = Graph(n, random_edges(rng, n, 0.3))
    cands = {(c.i, c.j) for c in candidate_edges(g)}
    assert cands.isdisjoint(g.edges)
    assert cands | set(g.edges) == set(complete(n))


def test_cost_monotone_in_length():
    m = CostModel()
    d = np.linspace(0, 1.5, 50)
    assert np.all(np.diff(m.cost_of_length(d)) > 0)
