"""Edge selection: convex relaxation, projected subgradient, rounding, greedy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .graph import CostModel, EdgeVector, Graph, candidate_edges, edge_costs, laplacian, weighted_laplacian
from .spectral import EigPair, fiedler_pair, top_eig_deflated

MODES = ("C1", "C2")

# power-iteration stride used by the solvers below; see spectral.top_eig_deflated
STRIDE = 32


@dataclass(frozen=True, eq=False)
class SelectionProblem:
    """Choose candidate edges trading connectivity against ``gamma * c^T w``.

    ``mode`` is ``"C1"`` (box ``[0,1]^K``) or ``"C2"`` (box plus ``1^T w = k``).
    """

    base: Graph
    candidates: tuple[EdgeVector, ...]
    costs: np.ndarray
    gamma: float = 0.0
    mode: str = "C1"
    k: Optional[int] = None
    L0: np.ndarray = field(init=False, repr=False)
    _ij: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=float)
        K = len(self.candidates)
        if costs.shape != (K,):
            raise ValueError(f"costs must have shape ({K},)")
        if K and np.any(costs <= 0):
            raise ValueError("edge costs must be strictly positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "C2":
            if self.k is None or not 0 <= self.k <= K:
                raise ValueError(f"C2 mode needs 0 <= k <= K={K}")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "L0", laplacian(self.base))
        ij = np.array([(c.i, c.j) for c in self.candidates], dtype=int).reshape(-1, 2)
        object.__setattr__(self, "_ij", ij)

    @classmethod
    def from_graph(cls, base: Graph, gamma=0.0, mode="C1", k=None, cost_model: Optional[CostModel] = None):
        cands = candidate_edges(base)
        costs = edge_costs(base, [(c.i, c.j) for c in cands], cost_model)
        return cls(base, tuple(cands), costs, gamma, mode, k)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def K(self) -> int:
        return len(self.candidates)

    def laplacian(self, w) -> np.ndarray:
        return weighted_laplacian(self.n, self._ij, w, base=self.L0)

    def mixing(self, w) -> np.ndarray:
        """``P(w) = I - L(w)/n``."""
        return np.eye(self.n) - self.laplacian(w) / self.n

    def edge_gaps(self, y: np.ndarray) -> np.ndarray:
        """``(y_i - y_j)^2 = y^T a_l a_l^T y`` for every candidate."""
        if self.K == 0:
            return np.zeros(0)
        return (y[self._ij[:, 0]] - y[self._ij[:, 1]]) ** 2


@dataclass(eq=False)
class SelectionResult:
    w_relaxed: np.ndarray
    w_binary: np.ndarray
    objective_trace: np.ndarray
    selected_edges: list
    best_objective: float = math.nan


def _check_box(w, K):
    w = np.asarray(w, dtype=float)
    if w.shape != (K,):
        raise ValueError(f"w must have shape ({K},)")
    if np.any(w < -1e-12) or np.any(w > 1 + 1e-12):
        raise ValueError("w must lie in [0, 1]^K")
    return w


def _top_pair(problem: SelectionProblem, w, v0=None, seed=0, stride=STRIDE) -> EigPair:
    return top_eig_deflated(problem.mixing(w), v0=v0, seed=seed, stride=stride)


def objective_phi(problem: SelectionProblem, w, *, pair: Optional[EigPair] = None) -> float:
    """``n * lambda_1(P(w) - 11^T/n) + gamma * c^T w``.

    Equals ``n - lambda_{n-1}(L(w)) + gamma c^T w``.
    """
    w = _check_box(w, problem.K)
    if pair is None:
        pair = _top_pair(problem, w)
    return problem.n * pair.value + problem.gamma * float(problem.costs @ w)


def subgradient_phi(problem: SelectionProblem, w, *, pair: Optional[EigPair] = None) -> np.ndarray:
    """Subgradient ``-(y_i - y_j)^2 + gamma c_l`` with ``y`` the top deflated eigenvector."""
    w = _check_box(w, problem.K)
    if pair is None:
        pair = _top_pair(problem, w)
    return -problem.edge_gaps(pair.vector) + problem.gamma * problem.costs


def project_box(v) -> np.ndarray:
    return np.clip(np.asarray(v, dtype=float), 0.0, 1.0)


def project_capped_simplex(v, k: float) -> np.ndarray:
    """Euclidean projection onto ``{w in [0,1]^K : 1^T w = k}``.

    The multiplier ``mu`` solving ``sum(clip(v - mu, 0, 1)) = k`` is bracketed
    by bisection over the breakpoints ``{v_l, v_l - 1}`` until no breakpoint is
    left strictly inside the bracket; ``h`` is then affine and ``mu`` follows in
    closed form.
    """
    v = np.asarray(v, dtype=float).ravel()
    K = v.size
    if not 0 <= k <= K:
        raise ValueError(f"k={k} must lie in [0, {K}]")
    if K == 0:
        return v.copy()

    def h(mu):
        return float(np.clip(v - mu, 0.0, 1.0).sum() - k)

    bps = np.unique(np.concatenate([v, v - 1.0]))
    # h is nonincreasing; h(bps[0]) = K - k >= 0 and h(bps[-1]) = -k <= 0
    lo_i, hi_i = 0, bps.size - 1
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if h(bps[mid]) >= 0:
            lo_i = mid
        else:
            hi_i = mid
    lo, hi = bps[lo_i], bps[hi_i]
    if h(lo) == 0.0:
        mu = lo
    elif h(hi) == 0.0:
        mu = hi
    else:
        free = (v - 1.0 <= lo) & (v >= hi)
        upper = v - 1.0 >= hi
        nfree = int(free.sum())
        mu = (v[free].sum() + upper.sum() - k) / nfree if nfree else 0.5 * (lo + hi)
    return np.clip(v - mu, 0.0, 1.0)


def project(problem: SelectionProblem, v) -> np.ndarray:
    if problem.mode == "C1":
        return project_box(v)
    return project_capped_simplex(v, problem.k)


def round_selection(w_relaxed, mode: str = "C1", rho: float = 0.5, k: Optional[int] = None) -> np.ndarray:
    """Boolean selection from a relaxed solution.

    C1 thresholds at ``rho`` (entries ``>= rho`` become 1); C2 keeps the ``k``
    largest entries, lower index first on ties.
    """
    w = np.asarray(w_relaxed, dtype=float)
    out = np.zeros(w.size, dtype=int)
    if mode == "C1":
        out[w - rho >= 0] = 1
    elif mode == "C2":
        if k is None or not 0 <= k <= w.size:
            raise ValueError("C2 rounding needs 0 <= k <= K")
        order = np.lexsort((np.arange(w.size), -w))
        out[order[:k]] = 1
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out


def default_step(ell: int, step_scale: float = 0.2) -> float:
    return 1.0 / (step_scale * math.sqrt(ell))


def projected_subgradient_solve(
    problem: SelectionProblem,
    step_scale: float = 0.2,
    iters: int = 2000,
    w0=None,
    rho: float = 0.5,
    seed: int = 0,
) -> SelectionResult:
    """Projected subgradient descent on the relaxed selection problem.

    Step ``kappa_l = 1 / (step_scale * sqrt(l))``; returns the best iterate
    seen (subgradient descent is not monotone) together with its rounding.
    """
    K = problem.K
    if K == 0:
        phi0 = objective_phi(problem, np.zeros(0))
        return SelectionResult(np.zeros(0), np.zeros(0, dtype=int), np.array([phi0]), [], phi0)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    w = project(problem, np.full(K, 0.5) if w0 is None else np.asarray(w0, dtype=float))
    pair = _top_pair(problem, w, seed=seed)
    phi = objective_phi(problem, w, pair=pair)
    trace = [phi]
    best_w, best_phi = w.copy(), phi
    for ell in range(1, iters + 1):
        g = subgradient_phi(problem, w, pair=pair)
        w = project(problem, w - default_step(ell, step_scale) * g)
        pair = _top_pair(problem, w, v0=pair.vector, seed=seed)
        phi = objective_phi(problem, w, pair=pair)
        trace.append(phi)
        if phi < best_phi:
            best_w, best_phi = w.copy(), phi
    wb = round_selection(best_w, problem.mode, rho=rho, k=problem.k)
    sel = [(problem.candidates[l].i, problem.candidates[l].j) for l in np.flatnonzero(wb)]
    return SelectionResult(best_w, wb, np.asarray(trace), sel, best_phi)


def greedy_scores(problem: SelectionProblem, v: np.ndarray) -> np.ndarray:
    return problem.edge_gaps(v) - problem.gamma * problem.costs


def greedy_select(problem: SelectionProblem, budget: int, seed: int = 0) -> list[int]:
    """Add ``budget`` candidates one at a time, each maximizing ``(v_i - v_j)^2 - gamma c_l``.

    ``v`` is the Fiedler vector of the current graph, recomputed after every
    addition. Returns candidate indices in pick order; ties go to the lower
    index.
    """
    if budget > problem.K or budget < 0:
        raise ValueError(f"budget must lie in [0, {problem.K}]")
    w = np.zeros(problem.K)
    remaining = np.ones(problem.K, dtype=bool)
    picks: list[int] = []
    v0 = None
    for _ in range(budget):
        pair = fiedler_pair(problem.laplacian(w), v0=v0, seed=seed, stride=STRIDE)
        v0 = pair.vector
        scores = np.where(remaining, greedy_scores(problem, pair.vector), -np.inf)
        l = int(np.argmax(scores))
        picks.append(l)
        remaining[l] = False
        w[l] = 1.0
    return picks


def greedy_result(problem: SelectionProblem, budget: int, seed: int = 0) -> SelectionResult:
    picks = greedy_select(problem, budget, seed=seed)
    wb = np.zeros(problem.K, dtype=int)
    wb[picks] = 1
    phi = objective_phi(problem, wb.astype(float))
    sel = [(problem.candidates[l].i, problem.candidates[l].j) for l in picks]
    return SelectionResult(wb.astype(float), wb, np.array([phi]), sel, phi)


def greedy_schedule(selected: Sequence[Sequence[int]], base: Graph, seed: int = 0) -> list[tuple[int, int]]:
    """Order selected edges by repeatedly taking the largest ``(v_i - v_j)^2``.

    ``v`` is the Fiedler vector of the graph built so far; ties go to the edge
    that comes first lexicographically.
    """
    edges = sorted({(min(e), max(e)) for e in ((int(a), int(b)) for a, b in selected)})
    present = set(base.edges)
    for e in edges:
        if e in present:
            raise ValueError(f"edge {e} already in the base graph")
    if not edges:
        return []
    ij = np.asarray(edges)
    L = laplacian(base)
    remaining = np.ones(len(edges), dtype=bool)
    order = []
    v0 = None
    for _ in range(len(edges)):
        pair = fiedler_pair(L, v0=v0, seed=seed, stride=STRIDE)
        v0 = pair.vector
        gaps = (pair.vector[ij[:, 0]] - pair.vector[ij[:, 1]]) ** 2
        l = int(np.argmax(np.where(remaining, gaps, -np.inf)))
        remaining[l] = False
        i, j = edges[l]
        order.append((i, j))
        L = weighted_laplacian(base.n, [(i, j)], base=L)
    return order


def connectivity_distance(problem: SelectionProblem, w_binary) -> float:
    """``n - lambda_{n-1}(L(w))`` for a selection."""
    pair = fiedler_pair(problem.laplacian(np.asarray(w_binary, dtype=float)), stride=STRIDE)
    return problem.n - pair.value
