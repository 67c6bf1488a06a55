"""Distributed dual averaging over a growing network, on an l1-regression instance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .graph import DynamicNetwork, Graph, GraphError
from .spectral import ConvergenceError, jacobi_eigh


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """``f(x) = (1/n) sum_i |y_i - b_i^T x|`` over the ball ``||x|| <= R``.

    Row ``i`` of ``B`` is agent ``i``'s regressor ``b_i``.
    """

    B: np.ndarray
    y: np.ndarray
    R: float = 5.0

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if B.shape[0] != y.size:
            raise ValueError(f"B has {B.shape[0]} rows but y has {y.size} entries")
        if not self.R > 0:
            raise ValueError("R must be positive")
        B.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "y", y)
        if not self.L > 0:
            raise ValueError("all regressors are zero; the Lipschitz constant must be positive")

    @classmethod
    def random(cls, n: int, p: int = 5, R: float = 5.0, rng=None) -> "ProblemInstance":
        """Standard normal ``y`` and ``B``."""
        rng = np.random.default_rng(rng)
        y = rng.standard_normal(n)
        B = rng.standard_normal((n, p))
        return cls(B, y, R)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def L(self) -> float:
        return float(np.linalg.norm(self.B, axis=1).max())

    def objective(self, X) -> np.ndarray | float:
        """``f`` at a point ``(p,)`` or at each row of ``(m, p)``."""
        X = np.asarray(X, dtype=float)
        r = np.abs(self.y[None, :] - X.reshape(-1, self.p) @ self.B.T).mean(axis=1)
        return float(r[0]) if X.ndim == 1 else r

    def local_subgradients(self, X: np.ndarray) -> np.ndarray:
        """Row ``i``: subgradient of ``f_i`` at ``X[i]``."""
        res = self.y - np.einsum("ij,ij->i", self.B, X)
        return -np.sign(res)[:, None] * self.B


def l1_subgradient(x, y_i: float, b_i) -> np.ndarray:
    """``-sign(y_i - b_i^T x) b_i`` with ``sign(0) = 0``."""
    b_i = np.asarray(b_i, dtype=float)
    return -np.sign(y_i - float(b_i @ np.asarray(x, dtype=float))) * b_i


def prox_step(z, alpha: float, R: float) -> np.ndarray:
    """``argmin_{||x|| <= R} z^T x + ||x||^2 / (2 alpha)``, row-wise for 2D ``z``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    z = np.asarray(z, dtype=float)
    x = -alpha * z
    nrm = np.linalg.norm(x, axis=-1, keepdims=True)
    scale = np.minimum(1.0, R / np.where(nrm > 0, nrm, 1.0))
    return x * scale


@dataclass(eq=False)
class DdaState:
    z: np.ndarray
    x: np.ndarray
    xsum: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int, p: int) -> "DdaState":
        return cls(np.zeros((n, p)), np.zeros((n, p)), np.zeros((n, p)), 0)

    @property
    def xbar(self) -> np.ndarray:
        """Running averages ``(1/t) sum_{s=1}^t x_i(s)``."""
        if self.t == 0:
            return np.zeros_like(self.x)
        return self.xsum / self.t


def dda_step(state: DdaState, P: np.ndarray, instance: ProblemInstance, alpha: float) -> DdaState:
    """One synchronous round: mix duals, add local subgradients, prox."""
    if state.z.shape != (instance.n, instance.p) or P.shape != (instance.n, instance.n):
        raise ValueError("dimension mismatch between state, mixing matrix and instance")
    g = instance.local_subgradients(state.x)
    z = P.T @ state.z + g
    x = prox_step(z, alpha, instance.R)
    return DdaState(z, x, state.xsum + x, state.t + 1)


def step_size(t: int, a: float) -> float:
    """``a / sqrt(t)`` with ``alpha_0 = alpha_1``."""
    return a / math.sqrt(max(t, 1))


def step_constant(R: float, L: float, sigma2_P0: float) -> float:
    return R * math.sqrt(max(1.0 - sigma2_P0, 0.0)) / L


def interval_schedule(ordered_edges: Sequence[Sequence[int]], Delta: int, T: int) -> list:
    """Add the ``q``-th edge at ``t = (q-1) Delta + 1`` while ``t <= T``."""
    if Delta < 1:
        raise ValueError("Delta must be >= 1")
    if T < 1:
        raise ValueError("T must be >= 1")
    out = []
    for q, e in enumerate(ordered_edges):
        t = q * Delta + 1
        if t > T:
            break
        out.append((t, (int(e[0]), int(e[1]))))
    return out


@dataclass(frozen=True)
class ScheduleSpec:
    selected: tuple
    Delta: int = 1
    T: int = 5000
    ordering: str = "greedy"

    def __post_init__(self):
        if self.ordering not in ("greedy", "given"):
            raise ValueError("ordering must be 'greedy' or 'given'")
        if self.Delta < 1 or self.T < 1:
            raise ValueError("Delta and T must be >= 1")
        object.__setattr__(self, "selected", tuple((int(a), int(b)) for a, b in self.selected))

    def network(self, base: Graph, seed: int = 0) -> DynamicNetwork:
        if self.ordering == "greedy":
            from .design import greedy_schedule

            order = greedy_schedule(self.selected, base, seed=seed)
        else:
            order = list(self.selected)
        return DynamicNetwork(base, tuple(interval_schedule(order, self.Delta, self.T)))


@dataclass(frozen=True, eq=False)
class VersionSpectrum:
    """Eigen-data of one Laplacian in a growing sequence."""

    values: np.ndarray  # descending
    vectors: np.ndarray  # columns match values
    sigma2_P: float

    @property
    def lambda_n1(self) -> float:
        return float(self.values[-2]) if self.values.size > 1 else 0.0

    @property
    def gap(self) -> float:
        if self.values.size < 3:
            return 0.0
        return max(float(self.values[-3] - self.values[-2]), 0.0)

    @property
    def fiedler(self) -> np.ndarray:
        return self.vectors[:, -2]


def version_spectrum(network: DynamicNetwork, k: int) -> VersionSpectrum:
    """Jacobi spectrum of the Laplacian after ``k`` additions (cached on the network)."""
    cache = network._cache.setdefault("spectra", {})
    if k not in cache:
        vals, vecs = jacobi_eigh(network.laplacian_version(k))
        order = np.argsort(-vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
        n = network.n
        if n > 1:
            # P eigenvalues are 1 - lambda/(2(1+delta_max)); P is PSD so sigma2 is the second largest
            s2 = 1.0 - vals[-2] / (2.0 * (1.0 + network.delta_max))
        else:
            s2 = 0.0
        cache[k] = VersionSpectrum(vals, vecs, float(min(max(s2, 0.0), 1.0)))
    return cache[k]


def sigma2_at(network: DynamicNetwork, t: int) -> float:
    return version_spectrum(network, network.edges_added_by(t)).sigma2_P


def checkpoint_times(T: int, every: Optional[int] = None) -> np.ndarray:
    every = max(1, T // 1000) if every is None else int(every)
    if every < 1:
        raise ValueError("checkpoint interval must be >= 1")
    ts = list(range(every, T + 1, every))
    if not ts or ts[-1] != T:
        ts.append(T)
    return np.asarray(ts, dtype=int)


@dataclass(eq=False)
class Trajectory:
    t: np.ndarray
    max_regret: np.ndarray
    sigma2_Pt: np.ndarray
    lambda_n1_Lt: np.ndarray
    edges_added: np.ndarray
    f_star: float
    a: float
    xbar_final: np.ndarray = field(repr=False, default=None)

    def columns(self) -> dict:
        return {
            "t": self.t,
            "max_regret": self.max_regret,
            "sigma2_Pt": self.sigma2_Pt,
            "lambda_n1_Lt": self.lambda_n1_Lt,
            "edges_added_cumulative": self.edges_added,
        }


def solve_lad_ball(instance: ProblemInstance, tol: float = 1e-9):
    """Minimizer of ``f`` over the ball ``||x|| <= R``.

    First an LP over the box ``|x_j| <= R`` (HiGHS); if its vertex solution is
    inside the ball it is optimal for the ball too. Otherwise the problem is
    solved as a second-order cone program. Returns ``(x_star, f_star)`` with
    ``x_star`` feasible and ``f_star = f(x_star)``.
    """
    n, p, R = instance.n, instance.p, instance.R
    B, y = instance.B, instance.y
    c = np.concatenate([np.zeros(p), np.full(n, 1.0 / n)])
    # y - Bx <= s and Bx - y <= s
    A = np.block([[-B, -np.eye(n)], [B, -np.eye(n)]])
    b = np.concatenate([-y, y])
    bounds = [(-R, R)] * p + [(0, None)] * n
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise ConvergenceError(f"LP oracle failed: {res.message}")
    x = res.x[:p]
    if np.linalg.norm(x) <= R:
        return x, instance.objective(x)
    return _lad_socp(instance, tol)


def _lad_socp(instance: ProblemInstance, tol: float):
    import cvxpy as cp

    R = instance.R
    x = cp.Variable(instance.p)
    prob = cp.Problem(cp.Minimize(cp.sum(cp.abs(instance.y - instance.B @ x)) / instance.n), [cp.norm(x, 2) <= R])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol)
    if prob.status not in ("optimal", "optimal_inaccurate") or x.value is None:
        raise ConvergenceError(f"cone oracle failed: {prob.status}")
    xs = np.asarray(x.value, dtype=float)
    nx = float(np.linalg.norm(xs))
    if nx > R:
        xs = xs * (R / nx)
    return xs, instance.objective(xs)


def centralized_dual_averaging(instance: ProblemInstance, T: int, a: float, checkpoints=None):
    """Single-agent dual averaging on the full objective.

    ``z <- z + g(x)``, ``x <- prox(z, a/sqrt(t))``. Returns the running
    averages at each checkpoint (rows) and the final ``(z, x)``. For a one-agent
    instance the arithmetic is identical to ``run_dda``.
    """
    p = instance.p
    ts = checkpoint_times(T) if checkpoints is None else np.asarray(checkpoints, dtype=int)
    want = set(int(t) for t in ts)
    z = np.zeros((1, p))
    x = np.zeros((1, p))
    xsum = np.zeros((1, p))
    out = []
    for t in range(T):
        res = instance.y - instance.B @ x[0]
        g = (-np.sign(res)[:, None] * instance.B).mean(axis=0, keepdims=True)
        z = z + g
        x = prox_step(z, step_size(t, a), instance.R)
        xsum = xsum + x
        if t + 1 in want:
            out.append((xsum / (t + 1))[0])
    return np.asarray(out), z[0], x[0]


def run_dda(
    instance: ProblemInstance,
    network: DynamicNetwork,
    T: int,
    a: Optional[float] = None,
    checkpoint_every: Optional[int] = None,
    f_star: Optional[float] = None,
    record_states: bool = False,
):
    """Run DDA for ``T`` steps over ``network`` and record regret checkpoints.

    Step ``t = 0..T-1`` mixes with ``P_t`` (the Laplacian after all additions
    at times ``<= t``), then applies ``alpha_t = a / sqrt(t)``, ``alpha_0 =
    alpha_1``. The default ``a`` is ``R sqrt(1 - sigma2(P_0)) / L``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if network.n != instance.n:
        raise ValueError("network and instance disagree on the number of agents")
    if not network.base.is_connected():
        raise GraphError("the base graph must be connected")
    n, p = instance.n, instance.p
    if a is None:
        a = step_constant(instance.R, instance.L, version_spectrum(network, 0).sigma2_P)
    if a <= 0:
        raise ValueError("step constant must be positive (sigma2(P_0) = 1?)")
    if f_star is None:
        f_star = solve_lad_ball(instance)[1]
    ts = checkpoint_times(T, checkpoint_every)
    cp = {int(t): i for i, t in enumerate(ts)}
    regret = np.empty(ts.size)
    s2 = np.empty(ts.size)
    lam = np.empty(ts.size)
    added = np.empty(ts.size, dtype=int)

    times = network.addition_times
    version = network.edges_added_by(0)
    P = network.mixing_at(0)
    state = DdaState.zeros(n, p)
    states = [] if record_states else None
    for t in range(T):
        k = int(np.searchsorted(times, t, side="right"))
        if k != version:
            version = k
            P = network.mixing_at(t)
        state = dda_step(state, P, instance, step_size(t, a))
        if record_states:
            states.append(state)
        i = cp.get(state.t)
        if i is not None:
            fx = instance.objective(state.xbar)
            regret[i] = float(np.max(fx)) - f_star
            # spectral data of the topology in force at this checkpoint
            spec = version_spectrum(network, network.edges_added_by(state.t))
            s2[i] = spec.sigma2_P
            lam[i] = spec.lambda_n1
            added[i] = network.edges_added_by(state.t)
    traj = Trajectory(ts, regret, s2, lam, added, float(f_star), float(a), state.xbar.copy())
    if record_states:
        return traj, states
    return traj


def convergence_time(traj: Trajectory, eps: float) -> int:
    """First checkpoint after which regret stays at or below ``eps``; ``T`` if never."""
    above = np.flatnonzero(traj.max_regret > eps)
    if above.size == 0:
        return int(traj.t[0])
    last = above[-1]
    if last + 1 >= traj.t.size:
        return int(traj.t[-1])
    return int(traj.t[last + 1])
