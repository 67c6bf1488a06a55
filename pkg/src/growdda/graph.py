"""Undirected graphs, Laplacians, mixing matrices and the edge cost model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

Edge = tuple[int, int]


class GraphError(ValueError):
    pass


def _normalize_edges(n: int, edges: Iterable[Sequence[int]]) -> tuple[Edge, ...]:
    out = set()
    for e in edges:
        i, j = int(e[0]), int(e[1])
        if i == j:
            raise GraphError(f"self-loop at node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i}, {j}) out of range for n={n}")
        key = (i, j) if i < j else (j, i)
        if key in out:
            raise GraphError(f"duplicate edge {key}")
        out.add(key)
    return tuple(sorted(out))


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    Edges are stored as ``(i, j)`` with ``i < j`` in lexicographic order, which
    fixes the edge indexing used by every vector over edges. ``positions`` holds
    optional 2D node coordinates (needed by the cost model).
    """

    n: int
    edges: tuple[Edge, ...] = ()
    positions: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("a graph needs at least one node")
        object.__setattr__(self, "edges", _normalize_edges(self.n, self.edges))
        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=float)
            if pos.shape != (self.n, 2):
                raise GraphError(f"positions must have shape ({self.n}, 2), got {pos.shape}")
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_pos = (self.positions is None and other.positions is None) or (
            self.positions is not None
            and other.positions is not None
            and np.array_equal(self.positions, other.positions)
        )
        return self.n == other.n and self.edges == other.edges and same_pos

    def __hash__(self):
        return hash((self.n, self.edges))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        if self.edges:
            idx = np.asarray(self.edges)
            A[idx[:, 0], idx[:, 1]] = 1.0
            A[idx[:, 1], idx[:, 0]] = 1.0
        return A

    def neighbors(self) -> list[list[int]]:
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nb[i].append(j)
            nb[j].append(i)
        return [sorted(x) for x in nb]

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        nb = self.neighbors()
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in nb[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    def with_edges(self, extra: Iterable[Sequence[int]]) -> "Graph":
        return Graph(self.n, self.edges + tuple(tuple(e) for e in extra), self.positions)

    def has_edge(self, i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        return key in set(self.edges)


class EdgeVector(NamedTuple):
    """Candidate edge ``index`` joining ``i < j``.

    Its incidence vector has +1 at ``i`` and -1 at ``j``.
    """

    index: int
    i: int
    j: int

    def vector(self, n: int) -> np.ndarray:
        a = np.zeros(n)
        a[self.i] = 1.0
        a[self.j] = -1.0
        return a


def edge_vector(n: int, edge: Sequence[int]) -> np.ndarray:
    a = np.zeros(n)
    a[edge[0]] = 1.0
    a[edge[1]] = -1.0
    return a


def incidence_matrix(graph: Graph) -> np.ndarray:
    H = np.zeros((graph.n, graph.m))
    for l, (i, j) in enumerate(graph.edges):
        H[i, l] = 1.0
        H[j, l] = -1.0
    return H


def weighted_laplacian(n: int, edges: Sequence[Sequence[int]], weights=None, base=None) -> np.ndarray:
    """Return ``base + sum_l w_l a_l a_l^T`` for the given edge list."""
    L = np.zeros((n, n)) if base is None else np.array(base, dtype=float, copy=True)
    if len(edges) == 0:
        return L
    idx = np.asarray(edges, dtype=int).reshape(-1, 2)
    w = np.ones(len(idx)) if weights is None else np.asarray(weights, dtype=float)
    i, j = idx[:, 0], idx[:, 1]
    np.add.at(L, (i, i), w)
    np.add.at(L, (j, j), w)
    np.add.at(L, (i, j), -w)
    np.add.at(L, (j, i), -w)
    return L


def laplacian(graph: Graph) -> np.ndarray:
    """Graph Laplacian ``L = H H^T = D - A``."""
    return weighted_laplacian(graph.n, graph.edges)


def consensus_matrix(L: np.ndarray, delta_max: int) -> np.ndarray:
    """Mixing matrix ``P = I - L / (2 (1 + delta_max))``.

    ``delta_max`` must bound the degree of every graph the matrix is used for;
    a smaller value would break nonnegativity of ``P``.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if n:
        current = int(round(np.max(np.diag(L))))
        if delta_max < current:
            raise GraphError(f"delta_max={delta_max} is below the current max degree {current}")
    return np.eye(n) - L / (2.0 * (1.0 + delta_max))


def candidate_edges(graph: Graph) -> list[EdgeVector]:
    """Complement edges of ``graph`` in lexicographic order."""
    present = set(graph.edges)
    out = []
    for i in range(graph.n):
        for j in range(i + 1, graph.n):
            if (i, j) not in present:
                out.append(EdgeVector(len(out), i, j))
    return out


def random_sensor_graph(n: int, radius: float, seed: int = 0, growth: float = 1.05) -> Graph:
    """Random geometric graph on the unit square, grown until connected.

    Positions are i.i.d. uniform (``numpy.random.default_rng(seed)``); nodes at
    distance ``<= radius`` are joined. While the graph is disconnected the
    radius is multiplied by ``growth``, capped at ``sqrt(2)``.
    """
    if n < 2:
        raise GraphError("need n >= 2")
    if not 0.0 < radius <= math.sqrt(2.0) + 1e-12:
        raise GraphError("radius must lie in (0, sqrt(2)]")
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, 1.0, size=(n, 2))
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    iu, ju = np.triu_indices(n, k=1)
    r = radius
    while True:
        mask = dist[iu, ju] <= r
        g = Graph(n, list(zip(iu[mask].tolist(), ju[mask].tolist())), pos)
        if g.is_connected():
            return g
        if r >= math.sqrt(2.0):
            # unreachable for points in the unit square, kept as a guard
            raise GraphError("failed to connect the sensor graph")
        r = min(r * growth, math.sqrt(2.0))


@dataclass(frozen=True)
class CostModel:
    """Edge cost ``tau1 * exp(tau2 * (d - d0))`` for an edge of length ``d``."""

    tau1: float = 10.0
    tau2: float = 0.5
    d0: float = 0.7

    def __post_init__(self):
        if self.tau1 <= 0 or self.tau2 <= 0 or self.d0 <= 0:
            raise ValueError("cost model parameters must be positive")

    def cost_of_length(self, d):
        return self.tau1 * np.exp(self.tau2 * (np.asarray(d, dtype=float) - self.d0))


def edge_cost(edge: Sequence[int], positions: Optional[np.ndarray], model: CostModel) -> float:
    if positions is None:
        raise GraphError("edge cost needs node positions")
    i, j = edge[0], edge[1]
    d = float(np.linalg.norm(np.asarray(positions[i]) - np.asarray(positions[j])))
    return float(model.cost_of_length(d))


def edge_costs(graph: Graph, edges: Sequence[Sequence[int]], model: Optional[CostModel]) -> np.ndarray:
    """Costs for a list of edges; unit costs when ``model`` is None."""
    if model is None:
        return np.ones(len(edges))
    if graph.positions is None:
        raise GraphError("edge cost needs node positions")
    if len(edges) == 0:
        return np.zeros(0)
    idx = np.asarray([(e[0], e[1]) for e in edges], dtype=int)
    d = np.linalg.norm(graph.positions[idx[:, 0]] - graph.positions[idx[:, 1]], axis=1)
    return model.cost_of_length(d)


@dataclass(frozen=True, eq=False)
class DynamicNetwork:
    """Base graph plus a time-stamped sequence of single-edge additions.

    ``additions`` holds ``(t, (i, j))`` pairs with strictly increasing ``t``
    (at most one edge per step, ``t >= 1``). The Laplacian at time ``t`` is the
    base Laplacian plus every edge added at a time ``<= t``. ``delta_max`` is
    the maximum degree of the final graph, which bounds every graph in the
    sequence because edges are only ever added.
    """

    base: Graph
    additions: tuple[tuple[int, Edge], ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        adds = []
        seen = set(self.base.edges)
        last_t = 0
        for t, e in self.additions:
            t = int(t)
            i, j = int(e[0]), int(e[1])
            key = (i, j) if i < j else (j, i)
            if t <= last_t:
                raise GraphError("addition times must be strictly increasing and >= 1")
            if key in seen:
                raise GraphError(f"edge {key} already present")
            if not (0 <= key[0] < self.base.n and 0 <= key[1] < self.base.n) or key[0] == key[1]:
                raise GraphError(f"invalid edge {key}")
            seen.add(key)
            adds.append((t, key))
            last_t = t
        object.__setattr__(self, "additions", tuple(adds))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def final_graph(self) -> Graph:
        return self.base.with_edges(e for _, e in self.additions)

    @property
    def delta_max(self) -> int:
        if "delta_max" not in self._cache:
            self._cache["delta_max"] = self.final_graph.max_degree()
        return self._cache["delta_max"]

    @property
    def addition_times(self) -> np.ndarray:
        return np.array([t for t, _ in self.additions], dtype=int)

    def edges_added_by(self, t: int) -> int:
        """Number of additions with time ``<= t``."""
        return int(np.searchsorted(self.addition_times, t, side="right"))

    def laplacian_version(self, k: int) -> np.ndarray:
        """Laplacian after the first ``k`` additions."""
        return weighted_laplacian(self.n, [e for _, e in self.additions[:k]], base=laplacian(self.base))

    def laplacian_at(self, t: int) -> np.ndarray:
        return self.laplacian_version(self.edges_added_by(t))

    def mixing_at(self, t: int) -> np.ndarray:
        return consensus_matrix(self.laplacian_at(t), self.delta_max)
