"""Lasso and its quadratically perturbed variant, solved to certified KKT accuracy.

Both problems are instances of the weighted l1 quadratic program

    minimize  0.5 b'Gb - c'b + sum_j w_j |b_j|

which is solved by cyclic coordinate descent on the gradient ``c - Gb``.
Once the sign pattern of the iterate stops changing, the stationarity
equations on that pattern are solved directly; the result is kept only if
it passes the KKT check, so "polishing" never returns a worse point.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .homotopy import homotopy_solve
from .problem_gen import RegressionProblem

DEFAULT_TOL = 1e-9
CHUNK = 25


@numba.njit(cache=True)
def _kkt(b, g, w):
    worst = 0.0
    for j in range(b.size):
        if b[j] > 0.0:
            r = abs(g[j] - w[j])
        elif b[j] < 0.0:
            r = abs(g[j] + w[j])
        else:
            r = abs(g[j]) - w[j]
        if r > worst:
            worst = r
    return worst


@numba.njit(cache=True)
def _sweep(G, b, g, w, diag, active_only):
    """One cyclic pass; returns the largest coordinate move."""
    p = b.size
    big = 0.0
    for j in range(p):
        if active_only and b[j] == 0.0 and w[j] > 0.0:
            continue
        d = diag[j]
        if d <= 0.0:
            continue
        z = g[j] + d * b[j]
        if z > w[j]:
            new = (z - w[j]) / d
        elif z < -w[j]:
            new = (z + w[j]) / d
        else:
            new = 0.0
        delta = new - b[j]
        if delta != 0.0:
            b[j] = new
            for i in range(p):
                g[i] -= delta * G[i, j]
            if abs(delta) * np.sqrt(d) > big:
                big = abs(delta) * np.sqrt(d)
    return big


@numba.njit(cache=True)
def _cd_chunk(G, b, g, w, n_sweeps, tol):
    """Up to ``n_sweeps`` full sweeps, each followed by active-set passes."""
    diag = np.diag(G).copy()
    done = 0
    kkt = _kkt(b, g, w)
    for _ in range(n_sweeps):
        if kkt <= tol:
            break
        _sweep(G, b, g, w, diag, False)
        done += 1
        for _inner in range(20):
            if _sweep(G, b, g, w, diag, True) <= 1e-3 * tol:
                break
        kkt = _kkt(b, g, w)
    return done, kkt


def quadratic_objective(G: np.ndarray, c: np.ndarray, w: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * b @ G @ b - c @ b + np.sum(w * np.abs(b)))


@dataclass
class QPSolution:
    b: np.ndarray
    kkt: float
    sweeps: int
    converged: bool
    degenerate: bool
    history: list[float] = field(default_factory=list)


def _polish(G, c, w, b, tol):
    """Solve the stationarity equations on the current sign pattern; None if rejected."""
    free = (b != 0.0) | (w == 0.0)
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return None
    signs = np.sign(b[idx])
    rhs = c[idx] - w[idx] * signs
    Gff = G[np.ix_(idx, idx)]
    try:
        sol = np.linalg.solve(Gff, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    pen = w[idx] > 0
    if np.any(np.sign(sol[pen]) != signs[pen]):
        return None
    cand = np.zeros_like(b)
    cand[idx] = sol
    g = c - G @ cand
    if _kkt(cand, g, w) > tol:
        return None
    return cand


def solve_weighted_l1_qp(
    G: np.ndarray,
    c: np.ndarray,
    w: np.ndarray,
    tol_abs: float,
    max_sweeps: int,
    init: np.ndarray | None = None,
    record: bool = False,
    n_rows: int | None = None,
    homotopy_after: int | None = 50,
) -> QPSolution:
    """Minimize 0.5 b'Gb - c'b + sum w_j |b_j| to KKT residual ``tol_abs``.

    ``record=True`` stores the objective after every full sweep (slow; for tests).
    ``n_rows`` flags solutions whose free set exceeds the row count as degenerate.
    With uniform positive weights, a fit still unconverged after
    ``homotopy_after`` sweeps is re-solved by the exact path algorithm.
    """
    G = np.ascontiguousarray(G, dtype=float)
    c = np.asarray(c, dtype=float)
    w = np.asarray(w, dtype=float)
    p = c.size
    b = np.zeros(p) if init is None else np.array(init, dtype=float)
    g = c - G @ b
    history = [quadratic_objective(G, c, w, b)] if record else []
    chunk = 1 if record else CHUNK
    sweeps = 0
    kkt = float(_kkt(b, g, w))
    last_signs = None
    uniform = w.size > 0 and w[0] > 0 and np.all(w == w[0])
    tried_path = False
    while kkt > tol_abs and sweeps < max_sweeps:
        if (uniform and not tried_path and homotopy_after is not None
                and sweeps >= homotopy_after):
            tried_path = True
            cand, _steps, status = homotopy_solve(G, c, float(w[0]), rank_limit=n_rows)
            if status == 0:
                g_c = c - G @ cand
                if _kkt(cand, g_c, w) > tol_abs:
                    cand = _polish(G, c, w, cand, tol_abs) if np.any(cand) else None
                if cand is not None:
                    b = cand
                    g = c - G @ b
                    kkt = float(_kkt(b, g, w))
                    if record:
                        history.append(quadratic_objective(G, c, w, b))
                    if kkt <= tol_abs:
                        break
        done, kkt = _cd_chunk(G, b, g, w, min(chunk, max_sweeps - sweeps), tol_abs)
        sweeps += done
        if record:
            history.append(quadratic_objective(G, c, w, b))
        if kkt <= tol_abs:
            break
        signs = np.sign(b)
        if last_signs is not None and np.array_equal(signs, last_signs):
            cand = _polish(G, c, w, b, tol_abs)
            if cand is not None:
                b = cand
                g = c - G @ b
                kkt = float(_kkt(b, g, w))
                if record:
                    history.append(quadratic_objective(G, c, w, b))
                break
        last_signs = signs
        # recompute the gradient to stop rounding drift in long runs
        g = c - G @ b
    converged = kkt <= tol_abs
    free = np.flatnonzero((b != 0.0) | (w == 0.0))
    degenerate = False
    if n_rows is not None and free.size > n_rows:
        degenerate = True
    elif free.size:
        ev = np.linalg.eigvalsh(G[np.ix_(free, free)])
        degenerate = bool(ev[0] <= 1e-12 * max(ev[-1], 1.0))
    return QPSolution(b, float(kkt), sweeps, converged, degenerate, history)


@dataclass
class LassoFit:
    coefficients: np.ndarray
    active_set: np.ndarray
    df: int
    kkt_residual: float
    objective: float
    iterations: int
    converged: bool
    penalty: float
    tol: float = DEFAULT_TOL
    degenerate: bool = False
    history: list[float] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "df": self.df,
            "kkt_residual": self.kkt_residual,
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "penalty": self.penalty,
        }

    def to_record(self, coefficients: bool = False) -> dict:
        rec = self.summary()
        rec["active_set"] = self.active_set.tolist()
        if coefficients:
            rec["coefficients"] = self.coefficients.tolist()
        return rec


@dataclass
class PerturbedFit(LassoFit):
    mu: float = 0.0


def lasso_objective(problem: RegressionProblem, b: np.ndarray, lam: float | None = None) -> float:
    lam = problem.lam if lam is None else lam
    r = problem.X @ b - problem.y
    return float(0.5 * r @ r + lam * np.sqrt(problem.n) * np.abs(b).sum())


def perturbed_objective(problem: RegressionProblem, b: np.ndarray, b_star_ref: np.ndarray,
                        mu: float) -> float:
    d = b - b_star_ref
    return lasso_objective(problem, b) + 0.5 * mu * problem.n * float(d @ problem.cov.sigma @ d)


def kkt_certificate(b: np.ndarray, problem: RegressionProblem, lam: float | None = None) -> float:
    """Largest distance from x_j'(y - Xb) to lambda*sqrt(n) times the subdifferential of |b_j|."""
    lam = problem.lam if lam is None else lam
    pen = lam * np.sqrt(problem.n)
    g = problem.X.T @ (problem.y - problem.X @ b)
    return float(_kkt(np.asarray(b, dtype=float), g, np.full(b.size, pen)))


def _max_sweeps(p: int, max_iter: int | None) -> int:
    return 100 * p if max_iter is None else int(max_iter)


def _warn_unconverged(sol: QPSolution, pen: float, tol: float) -> None:
    if not sol.converged:
        warnings.warn(f"coordinate descent stopped after {sol.sweeps} sweeps with "
                      f"KKT residual {sol.kkt:.3e} > {tol * pen:.3e}", RuntimeWarning, stacklevel=3)


def lasso_fit(
    problem: RegressionProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    lam: float | None = None,
    init: np.ndarray | None = None,
    eta: float = 1e-10,
    record_objective: bool = False,
) -> LassoFit:
    """Lasso with penalty lambda*sqrt(n)*||b||_1 by coordinate descent.

    Parameters
    ----------
    tol
        Relative KKT tolerance; convergence means residual <= tol * lambda * sqrt(n).
    max_iter
        Maximum number of full sweeps (default ``100 * p``).
    lam
        Override the problem's tuning parameter (used along lambda paths).
    init
        Warm start.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if lam is not None:
        problem = problem.with_lam(lam)
    pen = problem.penalty
    w = np.full(problem.p, pen)
    sol = solve_weighted_l1_qp(problem.gram, problem.xty, w, tol * pen,
                               _max_sweeps(problem.p, max_iter), init, record_objective,
                               n_rows=problem.n)
    _warn_unconverged(sol, pen, tol)
    fit = LassoFit(sol.b, np.empty(0, dtype=int), 0, sol.kkt, lasso_objective(problem, sol.b),
                   sol.sweeps, sol.converged, pen, tol, sol.degenerate, sol.history)
    fit.active_set = extract_active_set(fit, problem, eta)
    fit.df = int(fit.active_set.size)
    return fit


def perturbed_fit(
    problem: RegressionProblem,
    b_star_ref: np.ndarray,
    mu: float,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    init: np.ndarray | None = None,
    eta: float = 1e-10,
) -> PerturbedFit:
    """Minimize the Lasso objective plus (mu*n/2) ||Sigma^{1/2}(b - b_star_ref)||^2."""
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    b_star_ref = np.asarray(b_star_ref, dtype=float)
    n, pen = problem.n, problem.penalty
    Sig = problem.cov.sigma
    G = problem.gram + mu * n * Sig
    c = problem.xty + mu * n * (Sig @ b_star_ref)
    w = np.full(problem.p, pen)
    sol = solve_weighted_l1_qp(G, c, w, tol * pen, _max_sweeps(problem.p, max_iter), init)
    _warn_unconverged(sol, pen, tol)
    b = sol.b
    active = np.flatnonzero(np.abs(b) > eta * max(1.0, np.abs(b).max(initial=0.0)))
    return PerturbedFit(b, active, int(active.size), sol.kkt,
                        perturbed_objective(problem, b, b_star_ref, mu), sol.sweeps,
                        sol.converged, pen, tol, sol.degenerate, sol.history, mu=mu)


def extract_active_set(fit: LassoFit, problem: RegressionProblem, eta: float = 1e-10) -> np.ndarray:
    """Indices with a non-negligible coefficient AND a saturated KKT gradient."""
    b = fit.coefficients
    if not np.any(b):
        return np.empty(0, dtype=int)
    grad = np.abs(problem.X.T @ (problem.y - problem.X @ b))
    big = np.abs(b) > eta * max(1.0, np.abs(b).max())
    saturated = grad >= (1.0 - 10.0 * fit.tol) * fit.penalty
    return np.flatnonzero(big & saturated)
