"""Synchronous message-passing simulations of the decentralized design steps.

Agents are nodes ``0..n-1``. Every protocol below runs in rounds in which all
agents update from the previous round's state; the simulation is
deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .graph import Graph
from .spectral import _start_vector


@dataclass
class ProtocolStats:
    """Round and message counts.

    ``messages`` counts directed point-to-point transmissions; ``scalars``
    counts the numbers carried by them (a vector payload of length ``n``
    counts ``n``).
    """

    rounds: int = 0
    messages: int = 0
    scalars: int = 0
    final_error: float = float("nan")
    trace: list = field(default_factory=list, repr=False)

    def record(self, rnd, agent, quantity, value):
        self.trace.append((rnd, agent, quantity, float(value)))


@dataclass(frozen=True, eq=False)
class AgentState:
    id: int
    y_local: float
    phi_local: np.ndarray
    neighbor_row: dict

    def __post_init__(self):
        vals = np.array(list(self.neighbor_row.values()), dtype=float)
        if np.any(vals < -1e-12) or abs(vals.sum() - 1.0) > 1e-9:
            raise ValueError(f"agent {self.id}: local weights must be nonnegative and sum to 1")


def local_rows(graph: Graph, P: np.ndarray) -> list[dict]:
    """Per-agent ``{j: P_ij}`` over ``j`` in the closed neighborhood."""
    P = np.asarray(P, dtype=float)
    nb = graph.neighbors()
    rows = []
    for i in range(graph.n):
        support = [i] + nb[i]
        off = np.ones(graph.n, dtype=bool)
        off[support] = False
        if np.any(np.abs(P[i, off]) > 1e-12):
            raise ValueError(f"row {i} of P has weight outside the neighborhood of agent {i}")
        rows.append({j: float(P[i, j]) for j in sorted(support)})
    return rows


def _check_pattern(graph: Graph, P: np.ndarray) -> None:
    local_rows(graph, P)


def average_consensus(P: np.ndarray, Phi0: np.ndarray, rounds: int, graph: Optional[Graph] = None, stats=None):
    """``Phi(q+1) = P Phi(q)``: row ``i`` is agent ``i``'s state, mixed with its neighbors' rows."""
    Phi = np.array(Phi0, dtype=float, copy=True)
    two_m = 2 * graph.m if graph is not None else int(np.count_nonzero(P) - P.shape[0])
    width = Phi.shape[1] if Phi.ndim > 1 else 1
    for _ in range(rounds):
        Phi = P @ Phi
    if stats is not None:
        stats.rounds += rounds
        stats.messages += rounds * two_m
        stats.scalars += rounds * two_m * width
    return Phi


def decentralized_top_eigvec(
    graph: Graph,
    P: np.ndarray,
    N1: int,
    N2: int,
    seed: int = 0,
    y0: Optional[np.ndarray] = None,
    trace: bool = False,
):
    """Decentralized power iteration for the top eigenvector of ``P - 11^T/n``.

    Outer round ``s``: agents run ``N2`` consensus rounds on
    ``phi_i(0) = y_i(s) e_i``, then set
    ``y_i(s+1) = (sum_j P_ij y_j(s) - 1^T phi_i) / (n ||phi_i||)``.
    ``N1`` outer rounds are performed. Returns the stacked estimates and the
    protocol statistics.
    """
    if N1 < 1 or N2 < 1:
        raise ValueError("N1 and N2 must be >= 1")
    n = graph.n
    P = np.asarray(P, dtype=float)
    _check_pattern(graph, P)
    stats = ProtocolStats()
    y = _start_vector(n, seed) if y0 is None else np.asarray(y0, dtype=float).copy()
    if not np.any(y):
        y = _start_vector(n, seed)
    two_m = 2 * graph.m
    for s in range(N1):
        Phi = average_consensus(P, np.diag(y), N2, graph, stats)
        sums = Phi.sum(axis=1)
        norms = np.linalg.norm(Phi, axis=1)
        if np.any(norms == 0.0):
            # every local state vanished: restart from a fresh seeded vector
            y = _start_vector(n, seed + s + 1)
            continue
        # one extra exchange of scalars for sum_j P_ij y_j
        mixed = P @ y
        stats.messages += two_m
        stats.scalars += two_m
        y = (mixed - sums) / (n * norms)
        if trace:
            for i in range(n):
                stats.record(s + 1, i, "y", y[i])
    return y, stats


def centralized_reference(P: np.ndarray, N1: int, seed: int = 0, y0=None) -> np.ndarray:
    """``y(s+1) = (P - 11^T/n) y(s) / ||y(s)||`` from the same start, ``N1`` times.

    This is the limit of the decentralized update as ``N2 -> infinity``.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    y = _start_vector(n, seed) if y0 is None else np.asarray(y0, dtype=float).copy()
    D = P - np.full((n, n), 1.0 / n)
    for _ in range(N1):
        y = D @ y / np.linalg.norm(y)
    return y


def abs_cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def _better(sa, ia, sb, ib):
    # (score desc, id asc)
    return (sa > sb) | ((sa == sb) & (ia < ib))


def max_consensus(values, graph: Graph, rounds: int, seed: int = 0, ids=None, stats=None, history=False):
    """Random-broadcast-max.

    Each round one uniformly random agent sends its current value to its
    neighbors, each of which keeps the larger of the two. With ``ids``, the
    state is a ``(value, id)`` pair compared by value then smaller id.
    Returns the final values (and ids when given).
    """
    vals = np.array(values, dtype=float, copy=True)
    n = graph.n
    if vals.shape != (n,):
        raise ValueError("need one value per agent")
    idv = None if ids is None else np.array(ids, copy=True)
    nb = [np.asarray(x, dtype=int) for x in graph.neighbors()]
    rng = np.random.default_rng(seed)
    hist = [vals.copy()] if history else None
    for _ in range(rounds):
        u = int(rng.integers(n))
        js = nb[u]
        if js.size:
            if idv is None:
                vals[js] = np.maximum(vals[js], vals[u])
            else:
                take = _better(vals[u], idv[u], vals[js], idv[js])
                vals[js[take]] = vals[u]
                idv[js[take]] = idv[u]
        if stats is not None:
            stats.rounds += 1
            stats.messages += js.size
            stats.scalars += js.size * (1 if idv is None else 2)
        if history:
            hist.append(vals.copy())
    out = vals if idv is None else (vals, idv)
    if history:
        return out, np.asarray(hist)
    return out


def edge_owners(candidates: Sequence) -> np.ndarray:
    """Each candidate ``(i, j)``, ``i < j``, is handled by agent ``i``."""
    return np.array([min(c[-2], c[-1]) for c in candidates], dtype=int)


def decentralized_subgradient_round(w, candidates, kappa: float, gamma: float, costs, y) -> np.ndarray:
    """Each owner updates ``w_l <- clip(w_l - kappa gamma c_l + kappa (y_i - y_j)^2, 0, 1)``.

    Agent ``i`` only reads its own ``y_i``, its neighbor-candidate's ``y_j`` and
    its own entries; the loop is written per owner to mirror that.
    """
    w = np.asarray(w, dtype=float)
    out = w.copy()
    owners = edge_owners(candidates)
    y = np.asarray(y, dtype=float)
    costs = np.asarray(costs, dtype=float)
    for agent in np.unique(owners):
        for l in np.flatnonzero(owners == agent):
            i, j = candidates[l][-2], candidates[l][-1]
            # same operation order as the centralized step, so results match bitwise
            step = w[l] - kappa * (-((y[i] - y[j]) ** 2) + gamma * costs[l])
            out[l] = min(max(step, 0.0), 1.0)
    return out


def local_best(candidates, y, gamma: float, costs, n: int):
    """Per-agent ``(score, edge index)`` of its best owned candidate; ``-inf`` if none."""
    owners = edge_owners(candidates)
    y = np.asarray(y, dtype=float)
    costs = np.asarray(costs, dtype=float)
    score = np.full(n, -np.inf)
    idx = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    for l, c in enumerate(candidates):
        i, j = c[-2], c[-1]
        s = (y[i] - y[j]) ** 2 - gamma * costs[l]
        a = owners[l]
        if _better(s, l, score[a], idx[a]):
            score[a], idx[a] = s, l
    return score, idx


def decentralized_greedy_pick(
    graph: Graph, candidates, y, gamma: float, costs, rounds: Optional[int] = None, seed: int = 0, stats=None
) -> int:
    """Global ``argmax (y_i - y_j)^2 - gamma c_l`` via local maxima and max-consensus.

    Ties go to the lower edge index. ``rounds`` defaults to ``50 n``; the
    result is read at agent 0.
    """
    n = graph.n
    score, idx = local_best(candidates, y, gamma, costs, n)
    rounds = 50 * n if rounds is None else rounds
    _, ids = max_consensus(score, graph, rounds, seed=seed, ids=idx, stats=stats)
    if ids[0] == np.iinfo(np.int64).max:
        raise ValueError("no candidate edges")
    return int(ids[0])


def consensus_sum(local: np.ndarray, P: np.ndarray, rounds: int) -> np.ndarray:
    """Each agent's estimate of ``sum_i local_i`` after ``rounds`` of averaging."""
    n = P.shape[0]
    return n * average_consensus(P, np.asarray(local, dtype=float), rounds)


def decentralized_capped_projection(
    v, candidates, graph: Graph, P: np.ndarray, k: float, rounds: int = 1000, bisect_iters: int = 60, seed: int = 0
) -> np.ndarray:
    """Projection onto ``[0,1]^K ∩ {1^T w = k}`` with only local sums and max-consensus.

    The bracket ``[min(v) - 1, max(v)]`` comes from max-consensus on ``max v``
    and ``max(1 - v)``; each bisection step evaluates ``h(mu)`` through an
    averaging consensus of per-agent partial sums. Agent 0's estimate of
    ``mu`` is applied by every owner.
    """
    v = np.asarray(v, dtype=float)
    n = graph.n
    owners = edge_owners(candidates)
    loc_max = np.full(n, -np.inf)
    loc_max1 = np.full(n, -np.inf)
    for l, a in enumerate(owners):
        loc_max[a] = max(loc_max[a], v[l])
        loc_max1[a] = max(loc_max1[a], 1.0 - v[l])
    hi = max_consensus(loc_max, graph, 50 * n, seed=seed)[0]
    lo = -max_consensus(loc_max1, graph, 50 * n, seed=seed + 1)[0]
    for _ in range(bisect_iters):
        mu = 0.5 * (lo + hi)
        part = np.zeros(n)
        np.add.at(part, owners, np.clip(v - mu, 0.0, 1.0))
        h = consensus_sum(part, P, rounds)[0] - k
        if h >= 0:
            lo = mu
        else:
            hi = mu
    return np.clip(v - 0.5 * (lo + hi), 0.0, 1.0)
