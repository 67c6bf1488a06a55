"""Dense symmetric eigen-computations.

``full_spectrum`` is a cyclic Jacobi solver and serves as the reference for
everything else here. ``top_eig_deflated`` is plain power iteration on
``P - 11^T/n`` and is what the design algorithms use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class EigPair:
    value: float
    vector: np.ndarray
    iterations: int = 0
    converged: bool = True
    degenerate: bool = False


def _sign_fix(v: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    # first non-negligible component positive
    idx = np.flatnonzero(np.abs(v) > eps * max(np.abs(v).max(), 1.0))
    if idx.size and v[idx[0]] < 0:
        return -v
    return v


def _offdiag_norm(A: np.ndarray) -> float:
    d = np.diag(A).copy()
    np.fill_diagonal(A, 0.0)
    off = float(np.linalg.norm(A))
    np.fill_diagonal(A, d)
    return off


@lru_cache(maxsize=64)
def _round_robin(m: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    # m even; circle method: m-1 rounds of m/2 disjoint pairs
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array([min(players[k], players[m - 1 - k]) for k in range(m // 2)])
        q = np.array([max(players[k], players[m - 1 - k]) for k in range(m // 2)])
        rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def jacobi_eigh(A: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60):
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Rotations are applied in tournament (parallel) order so each round updates
    ``n/2`` disjoint index pairs at once. Stops when the off-diagonal Frobenius
    norm is at most ``tol * ||A||_F``.

    Returns eigenvalues (unsorted, matching columns of ``V``) and ``V``.
    """
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    n = A.shape[0]
    if np.abs(A - A.T).max(initial=0.0) > 1e-9 * max(np.abs(A).max(initial=0.0), 1.0):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if n <= 1:
        return np.diag(A).copy(), V
    m = n + (n % 2)
    if m != n:
        # pad with a decoupled zero row/column so the tournament is even
        Ap = np.zeros((m, m))
        Ap[:n, :n] = A
        A = Ap
        V = np.eye(m)
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n), np.eye(n)
    target = tol * scale
    rounds = _round_robin(m)
    for _ in range(max_sweeps):
        off = _offdiag_norm(A)
        if off <= target:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = np.abs(apq) > 1e-18 * scale
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (A[q, q] - A[p, p]) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # A <- J^T A J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = Ap * c - Aq * s
            A[:, q] = Ap * s + Aq * c
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = Vp * c - Vq * s
            V[:, q] = Vp * s + Vq * c
    else:
        off = _offdiag_norm(A)
        if off > target:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
    vals = np.diag(A)[:n].copy()
    return vals, V[:n, :n].copy()


def full_spectrum(A: np.ndarray, tol: float = 1e-14) -> list[EigPair]:
    """All eigenpairs of symmetric ``A``, eigenvalues in descending order."""
    vals, V = jacobi_eigh(A, tol=tol)
    order = np.argsort(-vals, kind="stable")
    return [EigPair(float(vals[k]), _sign_fix(V[:, k])) for k in order]


def eigvals_desc(A: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    vals, _ = jacobi_eigh(A, tol=tol)
    return np.sort(vals)[::-1]


def _start_vector(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v -= v.mean()
    nv = np.linalg.norm(v)
    if nv == 0.0:
        v = np.zeros(n)
        v[0], v[-1] = 1.0, -1.0
        nv = math.sqrt(2.0)
    return v / nv


WARM_MIX = 1e-2


def default_max_iter(n: int) -> int:
    # 10 n log n is far too few for slowly mixing graphs; see README
    return max(int(math.ceil(10 * n * math.log(max(n, 2)))), 20000)


def top_eig_deflated(
    P: np.ndarray,
    v0: np.ndarray | None = None,
    seed: int = 0,
    tol: float = 1e-12,
    max_iter: int | None = None,
    stride: int = 1,
    resid_tol: float = 1e-10,
) -> EigPair:
    """Largest eigenpair of ``P - 11^T/n`` by power iteration.

    ``P`` must be symmetric, doubly stochastic and PSD so that the largest
    eigenvalue of the deflated matrix is also the largest in magnitude. The
    start vector is a seeded random vector, or ``v0`` plus ``WARM_MIX`` times
    that vector when warm starting; it is projected orthogonal to ``1``.
    Iteration stops once successive Rayleigh quotients differ by less than
    ``tol`` and the residual ``||D y - lam y||`` is below ``resid_tol``; the
    quotient alone settles long before the vector does (error ~ sqrt(tol)).

    With ``stride = 2^k`` each step applies ``(P - 11^T/n)^stride`` (formed by
    repeated squaring), i.e. only every ``stride``-th power iterate is
    visited. Same fixed point, far fewer Python-level steps. ``max_iter``
    counts single applications of ``P`` either way.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if n == 1:
        return EigPair(0.0, np.ones(1), 0, True, True)
    if stride < 1 or stride & (stride - 1):
        raise ValueError("stride must be a power of two")
    if max_iter is None:
        max_iter = default_max_iter(n)
    D = P - np.full((n, n), 1.0 / n)
    M = D
    s = 1
    while s < stride:
        M = M @ M
        s *= 2
    M = 0.5 * (M + M.T)
    y = _start_vector(n, seed)
    if v0 is not None:
        w = np.array(v0, dtype=float)
        w -= w.mean()
        nw = np.linalg.norm(w)
        if nw > 1e-300:
            # a warm start can be exactly orthogonal to the new top
            # eigenvector (symmetric graphs); keep a seeded component in it
            y = w / nw + WARM_MIX * y
            y /= np.linalg.norm(y)
    lam_prev = None
    it = 0
    converged = False
    steps = max(1, -(-max_iter // stride))
    for k in range(1, steps + 1):
        it = k * stride
        z = M @ y
        z -= z.mean()
        nz = np.linalg.norm(z)
        if nz < 1e-300:
            if stride > 1:
                # the power underflowed; fall back to single steps
                return top_eig_deflated(P, v0=y, seed=seed, tol=tol, max_iter=max_iter, stride=1, resid_tol=resid_tol)
            # deflated matrix annihilates y: the top eigenvalue is 0
            return EigPair(0.0, _sign_fix(y), it, True, True)
        y = z / nz
        w = D @ y
        lam = float(y @ w)
        if lam_prev is not None and abs(lam - lam_prev) < tol and np.linalg.norm(w - lam * y) < resid_tol:
            converged = True
            break
        lam_prev = lam
    z = D @ y
    z -= z.mean()
    lam = float(y @ z)
    resid = float(np.linalg.norm(z - lam * y))
    degenerate = resid > math.sqrt(tol)
    return EigPair(lam, _sign_fix(y), it, converged, degenerate)


def fiedler_pair(
    L: np.ndarray, v0=None, seed: int = 0, tol: float = 1e-12, max_iter=None, stride: int = 1
) -> EigPair:
    """Algebraic connectivity and Fiedler vector of a Laplacian.

    Uses ``lambda_{n-1}(L) = n - n * lambda_1(I - L/n - 11^T/n)``.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if n == 1:
        return EigPair(0.0, np.ones(1), 0, True, True)
    P = np.eye(n) - L / n
    pair = top_eig_deflated(P, v0=v0, seed=seed, tol=tol, max_iter=max_iter, stride=stride)
    return EigPair(n - n * pair.value, pair.vector, pair.iterations, pair.converged, pair.degenerate)


def algebraic_connectivity(L: np.ndarray) -> float:
    """``lambda_{n-1}(L)`` from the Jacobi reference."""
    vals = eigvals_desc(L)
    return float(vals[-2]) if len(vals) > 1 else 0.0


def spectral_gap(L: np.ndarray) -> float:
    """``lambda_{n-2}(L) - lambda_{n-1}(L)`` (nonnegative)."""
    L = np.asarray(L, dtype=float)
    if L.shape[0] < 3:
        raise ValueError("spectral gap needs n >= 3")
    vals = eigvals_desc(L)
    return max(float(vals[-3] - vals[-2]), 0.0)


def sigma2(P: np.ndarray) -> float:
    """Second-largest singular value of a symmetric PSD matrix.

    For such matrices singular values coincide with eigenvalues, so this is
    the second-largest eigenvalue.
    """
    P = np.asarray(P, dtype=float)
    if P.shape[0] < 2:
        return 0.0
    vals = eigvals_desc(P)
    return float(max(vals[1], 0.0))


def sigma2_general(M: np.ndarray) -> float:
    """Second-largest singular value of a doubly stochastic (not necessarily symmetric) matrix.

    Computed as the largest singular value of ``M - 11^T/n`` through the Gram
    matrix, so only the symmetric solver is needed.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    D = M - np.full((n, n), 1.0 / n)
    vals = eigvals_desc(D.T @ D)
    return float(math.sqrt(max(vals[0], 0.0)))
