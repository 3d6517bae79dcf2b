"""Brute-force reference solvers used only by the tests.

Each one takes a route unrelated to the package's algorithms: enumeration
of sign patterns, of LP bases, or of active constraint sets, followed by a
dense linear solve.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate, optimize, stats


def l1_qp_oracle(G: np.ndarray, c: np.ndarray, w: float) -> tuple[np.ndarray, float]:
    """argmin 1/2 b'Gb - c'b + w ||b||_1 by enumerating all 3^p sign patterns.

    For each pattern the face-restricted quadratic has a closed-form
    stationary point; only sign-consistent ones are kept.
    """
    p = len(c)
    best_b, best_f = np.zeros(p), 0.0
    for signs in itertools.product((-1, 0, 1), repeat=p):
        sg = np.array(signs, dtype=float)
        S = np.flatnonzero(sg)
        if S.size == 0:
            continue
        GS = G[np.ix_(S, S)]
        if np.linalg.cond(GS) > 1e12:
            continue
        bS = np.linalg.solve(GS, c[S] - w * sg[S])
        if np.any(bS * sg[S] < 0):
            continue
        b = np.zeros(p)
        b[S] = bS
        f = 0.5 * b @ G @ b - c @ b + w * np.abs(b).sum()
        if f < best_f:
            best_b, best_f = b, f
    return best_b, best_f


def lasso_oracle(X, y, penalty):
    X = np.asarray(X, dtype=float)
    return l1_qp_oracle(X.T @ X, X.T @ y, penalty)


def perturbed_oracle(X, y, penalty, mu, Sigma, b_ref):
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    G = X.T @ X + mu * n * Sigma
    c = X.T @ y + mu * n * (Sigma @ b_ref)
    return l1_qp_oracle(G, c, penalty)


def bp_lp_oracle(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """min ||b||_1 s.t. Xb = y over all basic feasible solutions of
    [X, -X] z = y, z >= 0."""
    n, p = X.shape
    A = np.hstack([X, -X])
    best_z, best_f = None, math.inf
    rank = np.linalg.matrix_rank(X)
    for cols in itertools.combinations(range(2 * p), rank):
        B = A[:, cols]
        if np.linalg.matrix_rank(B) < rank:
            continue
        zB, *_ = np.linalg.lstsq(B, y, rcond=None)
        if np.linalg.norm(B @ zB - y) > 1e-9 * max(1.0, np.linalg.norm(y)):
            continue
        if np.any(zB < -1e-12):
            continue
        f = float(zB.sum())
        if f < best_f:
            z = np.zeros(2 * p)
            z[list(cols)] = zB
            best_z, best_f = z, f
    return best_z[:p] - best_z[p:], best_f


def cone_rows(s: np.ndarray) -> np.ndarray:
    """K = {h : a'h <= 0 for every row a}, one row per sign choice off the support."""
    off = np.flatnonzero(s == 0)
    rows = []
    for signs in itertools.product((-1.0, 1.0), repeat=off.size):
        a = s.astype(float).copy()
        a[off] = signs
        rows.append(a)
    return np.array(rows)


def polyhedral_projection(B: np.ndarray, g: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Projection of g onto {u : Bu <= 0} by enumerating active constraint sets."""
    m, p = B.shape
    best, best_d = np.zeros(p), float(g @ g)
    if np.all(B @ g <= tol * max(1.0, np.linalg.norm(g))):
        return g.copy()
    for r in range(1, min(m, p) + 1):
        for act in itertools.combinations(range(m), r):
            BA = B[list(act)]
            coef, *_ = np.linalg.lstsq(BA.T, g, rcond=None)
            u = g - BA.T @ coef
            if np.any(B @ u > tol * max(1.0, np.linalg.norm(g))):
                continue
            d = float((g - u) @ (g - u))
            if d < best_d:
                best, best_d = u, d
    return best


def transformed_cone_projection(s: np.ndarray, sqrt_sigma: np.ndarray, g: np.ndarray):
    """Projection onto Sigma^{1/2} K: u in C iff A Sigma^{-1/2} u <= 0."""
    A = cone_rows(s)
    return polyhedral_projection(A @ np.linalg.inv(sqrt_sigma), g)


def _tail_moment(tau: float) -> float:
    """E (|g| - tau)_+^2 by quadrature."""
    val, _ = integrate.quad(lambda x: (x - tau) ** 2 * stats.norm.pdf(x), tau, np.inf,
                            epsabs=1e-12, epsrel=1e-12)
    return 2.0 * val


def _golden_min(f, a: float, b: float, tol: float = 1e-10) -> float:
    """Minimum value of a unimodal f on [a, b] by golden-section search."""
    r = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - r * (b - a), a + r * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = f(d)
    return min(fc, fd, f(0.0) if a == 0.0 else math.inf)


def _sd_objective(p: float, k: float):
    return lambda tau: k * (1 + tau * tau) + (p - k) * _tail_moment(tau)


def l1_statistical_dimension(p: int, k: int) -> float:
    """inf_tau { k (1 + tau^2) + (p - k) E (|g| - tau)_+^2 } over tau >= 0."""
    if k == 0:
        return 0.0
    if k == p:
        return p - 0.5
    return _golden_min(_sd_objective(p, k), 0.0, 10.0)


def l1_transition_rho(delta: float, n: int, lo: float = 0.01, hi: float = 0.99) -> float:
    """rho = k/n at which the statistical dimension reaches n, with p = n/delta."""
    p = n / delta
    excess = lambda rho: _golden_min(_sd_objective(p, rho * n), 0.0, 10.0, 1e-9) - n  # noqa: E731
    return float(optimize.brentq(excess, lo, hi, xtol=1e-8))
