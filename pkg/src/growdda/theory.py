"""Computable bounds: connectivity increments, mixing time, regret and convergence time."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dda import VersionSpectrum, step_constant, step_size, version_spectrum
from .graph import DynamicNetwork, Graph, laplacian, weighted_laplacian
from .spectral import jacobi_eigh, sigma2_general


class DegenerateWarning(RuntimeWarning):
    """A bound hit a degenerate case (zero spectral gap, clamped log argument)."""


def _spectrum(L: np.ndarray):
    vals, vecs = jacobi_eigh(L)
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


def _gap(vals: np.ndarray) -> float:
    # rounding leaves ~1e-15 where the gap is exactly zero
    gap = float(vals[-3] - vals[-2])
    return 0.0 if gap <= 1e-10 * max(float(vals[0]), 1.0) else gap


def _coefficient(gap: float, delta_max: int) -> float:
    if gap <= 0.0:
        return 0.0
    return 1.0 / (2.0 * (1.0 + delta_max) + 12.0 * (1.0 + delta_max) / gap)


def prop1_increment_bound(L_prev: np.ndarray, edge: Sequence[int], u: int = 1) -> float:
    """Lower bound ``u (a^T v)^2 / (6/gap + 1)`` on the algebraic-connectivity increment.

    ``v`` is the Fiedler vector of ``L_prev`` and ``gap = lambda_{n-2} - lambda_{n-1}``.
    A zero gap gives 0 (the limit) with a ``DegenerateWarning``.
    """
    L_prev = np.asarray(L_prev, dtype=float)
    n = L_prev.shape[0]
    if n < 3:
        raise ValueError("the increment bound needs n >= 3")
    if u == 0:
        return 0.0
    vals, vecs = _spectrum(L_prev)
    gap = _gap(vals)
    if gap <= 0.0:
        warnings.warn("zero spectral gap; increment bound set to 0", DegenerateWarning, stacklevel=2)
        return 0.0
    v = vecs[:, -2]
    c = float(v[edge[0]] - v[edge[1]])
    return u * c * c / (6.0 / gap + 1.0)


def b_coefficient(L_i: np.ndarray, delta_max: int) -> float:
    """``1 / (2(1+delta_max) + 12(1+delta_max)/gap)``; 0 with a warning when the gap vanishes."""
    vals = _spectrum(np.asarray(L_i, dtype=float))[0]
    if vals.size < 3:
        raise ValueError("b coefficient needs n >= 3")
    gap = _gap(vals)
    if gap <= 0.0:
        warnings.warn("zero spectral gap; b coefficient set to 0", DegenerateWarning, stacklevel=2)
    return _coefficient(gap, delta_max)


def _edge_term(spec: VersionSpectrum, edge, delta_max: int) -> float:
    v = spec.fiedler
    c = float(v[edge[0]] - v[edge[1]])
    return _coefficient(_gap(spec.values), delta_max) * c * c


def edge_terms(network: DynamicNetwork) -> np.ndarray:
    """``b_{q-1} (a_q^T v_{q-1})^2`` for the ``q``-th addition, from Jacobi spectra."""
    out = np.empty(len(network.additions))
    for q, (_, e) in enumerate(network.additions):
        out[q] = _edge_term(version_spectrum(network, q), e, network.delta_max)
    return out


def place_terms(times: Sequence[int], terms: Sequence[float], T: int) -> np.ndarray:
    """Dense time-indexed terms: entry ``i-1`` holds the term of the edge added at time ``i``.

    Additions after ``T`` are dropped.
    """
    dense = np.zeros(T)
    for t, term in zip(times, terms):
        if 1 <= t <= T:
            dense[t - 1] = term
    return dense


def schedule_terms(network: DynamicNetwork, T: int) -> np.ndarray:
    """Time-indexed ``u_i b_{i-1} (a_{l_i}^T v_{i-1})^2`` for ``i = 1..T``."""
    return place_terms(network.addition_times, edge_terms(network), T)


def sigma2_recursion(network: DynamicNetwork, T: int) -> tuple[np.ndarray, np.ndarray]:
    """Actual ``sigma2(P_t)`` and the bound ``sigma2(P_0) - sum_{i<=t} terms`` for ``t = 0..T``."""
    terms = schedule_terms(network, T)
    s0 = version_spectrum(network, 0).sigma2_P
    bound = s0 - np.concatenate([[0.0], np.cumsum(terms)])
    actual = np.array([version_spectrum(network, network.edges_added_by(t)).sigma2_P for t in range(T + 1)])
    return actual, bound


def transition_product(Ps: Sequence[np.ndarray]) -> np.ndarray:
    """``Phi = P_t P_{t-1} ... P_s`` for ``Ps = [P_s, ..., P_t]``."""
    out = np.eye(np.asarray(Ps[0]).shape[0])
    for P in Ps:
        out = np.asarray(P, dtype=float) @ out
    return out


def lemma1_gap(Ps: Sequence[np.ndarray]) -> float:
    """``prod sigma2(P_i) - sigma2(Phi)``; nonnegative when the product bound holds."""
    prod = 1.0
    for P in Ps:
        prod *= sigma2_general(P)
    return prod - sigma2_general(transition_product(Ps))


@dataclass(frozen=True, eq=False)
class MixingTimeResult:
    delta_star: int
    beta_star: float
    lower_bound_rhs: float
    clamped: bool = False
    deltas: np.ndarray = None
    log_betas: np.ndarray = None
    rhs: np.ndarray = None


def _log_inv(sigma2_P0: float) -> float:
    return -math.log(sigma2_P0)


def static_rhs(sigma2_P0: float, T: int, n: int) -> float:
    """``log(T sqrt(n)) / log(1/sigma2(P_0))``."""
    return math.log(T * math.sqrt(n)) / _log_inv(sigma2_P0)


def delta_cap(sigma2_P0: float, T: int, n: int) -> int:
    return max(1, math.ceil(static_rhs(sigma2_P0, T, n)))


def static_delta(sigma2_P0: float, T: int, n: int) -> int:
    """Closed form for a time-invariant network."""
    return delta_cap(sigma2_P0, T, n)


def _check_sigma(sigma2_P0):
    if not 0.0 < sigma2_P0 < 1.0:
        raise ValueError("sigma2(P_0) must lie in (0, 1)")


def solve_mixing_time(
    schedule_terms: Sequence[float], sigma2_P0: float, T: int, n: int, floor: float = 1e-12
) -> MixingTimeResult:
    """Smallest integer ``delta`` with ``delta >= (log(T sqrt n) + log beta(delta)) / log(1/sigma2)``.

    ``log beta(delta) = sum_{k=1}^{delta-1} log(1 - S_k / sigma2)`` where ``S_k``
    is the partial sum of the first ``k`` time-indexed schedule terms. Factors
    are clamped below at ``floor``; ``clamped`` reports whether that happened.
    """
    _check_sigma(sigma2_P0)
    if T < 1:
        raise ValueError("T must be >= 1")
    cap = delta_cap(sigma2_P0, T, n)
    terms = np.asarray(schedule_terms, dtype=float)[: max(cap - 1, 0)]
    S = np.zeros(cap - 1)
    if terms.size:
        cs = np.cumsum(terms)
        S[: cs.size] = cs
        S[cs.size :] = cs[-1] if cs.size else 0.0
    raw = 1.0 - S / sigma2_P0
    clamped_mask = raw < floor
    factors = np.maximum(raw, floor)
    log_beta = np.concatenate([[0.0], np.cumsum(np.log(factors))])
    deltas = np.arange(1, cap + 1)
    lg = math.log(T * math.sqrt(n))
    rhs = (lg + log_beta) / _log_inv(sigma2_P0)
    feasible = deltas >= rhs
    # the cap is feasible because log beta <= 0
    feasible[-1] = True
    k = int(np.argmax(feasible))
    clamped = bool(clamped_mask[:k].any()) if k > 0 else False
    if clamped:
        warnings.warn("schedule terms exceed sigma2(P_0); log factors clamped", DegenerateWarning, stacklevel=2)
    return MixingTimeResult(
        int(deltas[k]), float(math.exp(log_beta[k])), float(rhs[k]), clamped,
        deltas[: k + 1], log_beta[: k + 1], rhs[: k + 1],
    )


def approx_delta(beta_star: float, sigma2_P0: float, T: int, n: int) -> int:
    """``ceil(log(T sqrt n)/log(1/sigma2) - log(1/beta)/log(1/sigma2))``, at least 1."""
    _check_sigma(sigma2_P0)
    if not 0.0 < beta_star <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    val = (math.log(T * math.sqrt(n)) + math.log(beta_star)) / _log_inv(sigma2_P0)
    return max(1, math.ceil(val))


def net_bound(delta_star: int, alphas: Sequence[float], L_lip: float, T: int) -> float:
    """``sum_{t=1}^T (L^2 alpha_t / T)(6 delta + 9)`` for ``alphas = (alpha_1, ..., alpha_T)``."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size != T:
        raise ValueError("need exactly T step sizes")
    if delta_star < 1:
        raise ValueError("delta must be >= 1")
    return float(L_lip**2 * alphas.sum() / T * (6 * delta_star + 9))


def opt_bound(R: float, L_lip: float, alphas: Sequence[float], T: int) -> float:
    """``psi(x*)/(T alpha_T) + (L^2/2T) sum_t alpha_{t-1}`` with ``psi(x*) <= R^2`` and ``alpha_0 = alpha_1``."""
    alphas = np.asarray(alphas, dtype=float)
    prev = np.concatenate([[alphas[0]], alphas[:-1]])
    return float(R**2 / (T * alphas[-1]) + L_lip**2 / (2 * T) * prev.sum())


def thm2_bound(R: float, L_lip: float, sigma2_P0: float, delta_star: int, T: int) -> float:
    """``R^2/(a sqrt T) + a L^2 (12 delta + 19)/sqrt T`` with ``a = R sqrt(1 - sigma2)/L``."""
    if not 0.0 <= sigma2_P0 < 1.0:
        raise ValueError("sigma2(P_0) must lie in [0, 1)")
    a = step_constant(R, L_lip, sigma2_P0)
    rt = math.sqrt(T)
    return R**2 / (a * rt) + a * L_lip**2 * (12 * delta_star + 19) / rt


def prop3_alpha(sigma2_P0: float, total_terms: float) -> float:
    return min(max(1.0 - total_terms / sigma2_P0, 0.0), 1.0)


def prop3_convergence_time(epsilon: float, sigma2_P0: float, schedule_terms) -> float:
    """``(1/eps^2) (1 - sigma2) / (1 - alpha sigma2)^2`` with ``alpha = clamp(1 - sum terms / sigma2)``.

    The asymptotic statement hides a constant; this is the argument of the
    Omega with constant 1, useful only for comparisons.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _check_sigma(sigma2_P0)
    alpha = prop3_alpha(sigma2_P0, float(np.sum(schedule_terms)))
    return (1.0 - sigma2_P0) / (epsilon**2 * (1.0 - alpha * sigma2_P0) ** 2)


def ordered_edge_terms(base: Graph, ordered_edges: Sequence[Sequence[int]], delta_max: int) -> np.ndarray:
    """Terms of an ordered edge list; independent of the time each edge is added."""
    L = laplacian(base)
    out = []
    for e in ordered_edges:
        vals, vecs = _spectrum(L)
        gap = _gap(vals)
        v = vecs[:, -2]
        c = float(v[e[0]] - v[e[1]])
        out.append(_coefficient(gap, delta_max) * c * c)
        L = weighted_laplacian(base.n, [e], base=L)
    return np.asarray(out)


def corollary3_check(schedule_a, schedule_b, base: Graph, sigma2_P0: float, T: int, delta_max: int) -> bool:
    """``delta*(a) <= delta*(b)`` for two schedules of the same ordered edges.

    Each schedule is a list of ``(t, edge)``; ``a`` must add every edge no
    later than ``b``.
    """
    ea = [tuple(sorted(e)) for _, e in schedule_a]
    eb = [tuple(sorted(e)) for _, e in schedule_b]
    if ea != eb:
        raise ValueError("schedules must add the same edges in the same order")
    ta = [t for t, _ in schedule_a]
    tb = [t for t, _ in schedule_b]
    if any(x > y for x, y in zip(ta, tb)):
        raise ValueError("the first schedule must add every edge no later than the second")
    terms = ordered_edge_terms(base, ea, delta_max)
    da = solve_mixing_time(place_terms(ta, terms, T), sigma2_P0, T, base.n).delta_star
    db = solve_mixing_time(place_terms(tb, terms, T), sigma2_P0, T, base.n).delta_star
    return da <= db


@dataclass(eq=False)
class BoundReport:
    delta_star: int
    beta_star: float
    net_bound: float
    opt_bound: float
    thm2_bound_at_T: float
    prop3_scale: float
    alpha_coeff: float
    checkpoints: np.ndarray
    delta_star_series: np.ndarray
    thm2_bound_series: np.ndarray
    approx_delta: int
    clamped: bool = False


def bound_report(
    network: DynamicNetwork,
    R: float,
    L_lip: float,
    T: int,
    checkpoints: Optional[Sequence[int]] = None,
    epsilon: float = 0.1,
) -> BoundReport:
    """Every theory quantity for one run configuration.

    The regret-bound series re-solves the mixing-time problem with horizon ``t``
    at each checkpoint ``t``.
    """
    spec0 = version_spectrum(network, 0)
    s0 = spec0.sigma2_P
    n = network.n
    terms = schedule_terms(network, T)
    a = step_constant(R, L_lip, s0)
    alphas = np.array([step_size(t, a) for t in range(1, T + 1)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        res = solve_mixing_time(terms, s0, T, n)
        cps = np.asarray([T] if checkpoints is None else checkpoints, dtype=int)
        ds = np.array([solve_mixing_time(terms[:t], s0, int(t), n).delta_star for t in cps])
    series = np.array([thm2_bound(R, L_lip, s0, int(d), int(t)) for d, t in zip(ds, cps)])
    return BoundReport(
        delta_star=res.delta_star,
        beta_star=res.beta_star,
        net_bound=net_bound(res.delta_star, alphas, L_lip, T),
        opt_bound=opt_bound(R, L_lip, alphas, T),
        thm2_bound_at_T=thm2_bound(R, L_lip, s0, res.delta_star, T),
        prop3_scale=prop3_convergence_time(epsilon, s0, terms),
        alpha_coeff=prop3_alpha(s0, float(terms.sum())),
        checkpoints=cps,
        delta_star_series=ds,
        thm2_bound_series=series,
        approx_delta=approx_delta(res.beta_star, s0, T, n),
        clamped=res.clamped,
    )
