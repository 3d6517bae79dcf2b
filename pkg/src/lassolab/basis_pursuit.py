"""Basis pursuit by Douglas-Rachford splitting, with recovery/failure certificates.

The affine constraint ``Xb = Xb0`` is handled by exact projection through an
orthonormal basis of the row space of X (reduced QR of X^T, computed once per
design). The l1 part is handled by soft-thresholding.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .problem_gen import SignPattern

Status = Literal["recovered", "failed_strictly", "ambiguous"]


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


class RowSpace:
    """Cached orthonormal basis Q of range(X^T); P_ker(h) = h - Q Q^T h."""

    def __init__(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        self.X = X
        n, p = X.shape
        Q, R = np.linalg.qr(X.T)
        d = np.abs(np.diag(R))
        self.rank = int(np.sum(d > 1e-10 * max(d.max(initial=0.0), 1.0)))
        self.full_row_rank = self.rank == n
        self.injective = self.rank == p
        self.Q = Q

    def kernel_project(self, h: np.ndarray) -> np.ndarray:
        return h - self.Q @ (self.Q.T @ h)

    def affine_project(self, z: np.ndarray, b0: np.ndarray) -> np.ndarray:
        """Project onto {b : Xb = Xb0}."""
        return z - self.Q @ (self.Q.T @ (z - b0))


@dataclass
class BPResult:
    solution: np.ndarray
    target: np.ndarray
    l1_gap: float
    recovery_error: float
    feasibility_residual: float
    status: Status
    duality_gap: float
    iterations: int
    converged: bool

    def summary(self) -> dict:
        return {
            "l1_gap": self.l1_gap,
            "recovery_error": self.recovery_error,
            "feasibility_residual": self.feasibility_residual,
            "status": self.status,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def gap_tolerance(b0: np.ndarray) -> float:
    return 1e-7 * max(1.0, float(np.abs(b0).sum()))


def recovery_tolerance(b0: np.ndarray) -> float:
    return 1e-6 * max(1.0, float(np.linalg.norm(b0)))


def classify(X: np.ndarray, b0: np.ndarray, sol: np.ndarray) -> tuple[float, float, float, Status]:
    l1_gap = float(np.abs(b0).sum() - np.abs(sol).sum())
    rec = float(np.linalg.norm(sol - b0))
    feas = float(np.linalg.norm(X @ (sol - b0)))
    if rec <= recovery_tolerance(b0):
        status: Status = "recovered"
    elif l1_gap >= gap_tolerance(b0):
        status = "failed_strictly"
    else:
        status = "ambiguous"
    return l1_gap, rec, feas, status


def _dual_gap(rs: RowSpace, b0: np.ndarray, u: np.ndarray, q: np.ndarray) -> float:
    """l1(u) minus the dual value of q rescaled into the unit l_inf ball (q in range(X^T))."""
    scale = max(1.0, float(np.abs(q).max(initial=0.0)))
    return float(np.abs(u).sum() - (q / scale) @ b0)


def _polish(rs: RowSpace, b0: np.ndarray, u: np.ndarray):
    """Least squares on a support guessed from u plus a dual certificate; (v, gap) or None.

    Guesses: the entries of u above a relative threshold (or the n largest,
    a vertex of the feasible polytope), plus single swaps between the three
    weakest kept entries and the three strongest dropped ones, which catches
    slow convergence near a degenerate vertex.
    """
    X = rs.X
    n = X.shape[0]
    big = np.abs(u).max(initial=0.0)
    if big == 0.0:
        return None
    target = X @ b0
    tnorm = max(1.0, float(np.linalg.norm(target)))
    guesses = []
    S = np.flatnonzero(np.abs(u) > 1e-8 * big)
    if S.size <= n:
        guesses.append(S)
    order = np.argsort(-np.abs(u), kind="stable")
    top, rest = order[:n], order[n:]
    guesses.append(np.sort(top))
    for i in top[-3:]:
        for j in rest[:3]:
            guesses.append(np.sort(np.append(top[top != i], j)))
    best = None
    for S in guesses:
        XS = X[:, S]
        vS, *_ = np.linalg.lstsq(XS, target, rcond=None)
        if np.linalg.norm(XS @ vS - target) > 1e-9 * tnorm:
            continue
        if np.any(vS == 0):
            continue
        v = np.zeros_like(u)
        v[S] = vS
        # least-norm dual vector with q_S = sign(v_S)
        sg = np.sign(vS)
        wdual, *_ = np.linalg.lstsq(XS.T, sg, rcond=None)
        q = X.T @ wdual
        if np.abs(q[S] - sg).max() > 1e-9:
            continue
        gap = _dual_gap(rs, b0, v, q)
        if best is None or gap < best[1]:
            best = (v, gap)
    return best


def bp_solve(
    X: np.ndarray,
    b0: np.ndarray,
    tol: float = 1e-9,
    max_iter: int = 20000,
    step: float | None = None,
    rowspace: RowSpace | None = None,
    decide_only: bool = False,
) -> BPResult:
    """Minimize ||b||_1 subject to Xb = Xb0 by Douglas-Rachford splitting.

    Stops when the duality gap is below ``tol * max(1, ||b0||_1)``. Every 25
    iterations the current support is polished by least squares; the polished
    point is accepted only with a dual certificate. With ``decide_only`` the
    run also stops once a feasible point beats ||b0||_1 by the gap tolerance,
    which already settles the status as ``failed_strictly``.
    """
    X = np.asarray(X, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    rs = RowSpace(X) if rowspace is None else rowspace
    if rs.injective:
        sol = b0.copy()
        l1_gap, rec, feas, status = classify(X, b0, sol)
        return BPResult(sol, b0, l1_gap, rec, feas, status, 0.0, 0, True)
    if not rs.full_row_rank:
        raise ValueError(f"X is rank deficient (rank {rs.rank} < n = {X.shape[0]})")
    if not np.any(b0):
        sol = np.zeros_like(b0)
        l1_gap, rec, feas, status = classify(X, b0, sol)
        return BPResult(sol, b0, l1_gap, rec, feas, status, 0.0, 0, True)

    gap_target = tol * max(1.0, float(np.abs(b0).sum()))
    z = rs.affine_project(np.zeros_like(b0), b0)
    if step is None:
        step = float(np.abs(z).mean())
    best, best_gap = None, np.inf
    last_supp = None
    it = 0
    converged = decided = False
    while it < max_iter:
        u = rs.affine_project(z, b0)
        x = soft_threshold(2.0 * u - z, step)
        z = z + x - u
        it += 1
        if it % 25 == 0:
            u = rs.affine_project(z, b0)
            q = (u - z) / step
            gap = _dual_gap(rs, b0, u, q)
            if gap < best_gap:
                best, best_gap = u, gap
            if gap <= gap_target:
                converged = True
                break
            if decide_only and np.abs(b0).sum() - np.abs(u).sum() >= gap_tolerance(b0):
                best, best_gap = u, gap
                decided = True
                break
            n = X.shape[0]
            supp = np.sort(np.argsort(-np.abs(u))[:n])
            if last_supp is None or not np.array_equal(supp, last_supp):
                last_supp = supp
                continue
            pol = _polish(rs, b0, u)
            if pol is not None and pol[1] <= gap_target:
                best, best_gap = pol
                converged = True
                break
    if best is None:
        best = rs.affine_project(z, b0)
    else:
        pol = _polish(rs, b0, best)
        if pol is not None and pol[1] <= best_gap + 1e-12:
            best, best_gap = pol
    if not (converged or decided):
        warnings.warn(f"basis pursuit stopped after {it} iterations with duality gap {best_gap:.3e}",
                      RuntimeWarning, stacklevel=2)
    l1_gap, rec, feas, status = classify(X, b0, best)
    return BPResult(best, b0, l1_gap, rec, feas, status, float(best_gap), it, converged)


@dataclass
class InteriorDirection:
    h0: np.ndarray
    margin: float
    kernel_residual: float


@dataclass
class DirectionSearch:
    """Outcome of the interior-direction search when nothing was found."""

    found: InteriorDirection | None
    objective: float
    stalled: bool


def cone_objective(pattern: SignPattern, h: np.ndarray) -> float:
    """s'h + sum over the off-support of |h_j|; negative exactly on the interior of K."""
    s = pattern.entries
    return float(s @ h + np.abs(h[pattern.off_support]).sum())


def _prox_cone_ball(w: np.ndarray, pattern: SignPattern, step: float) -> np.ndarray:
    # the cone objective is sublinear, so the prox with the ball constraint
    # is the ball projection of the unconstrained prox
    x = w - step * pattern.entries
    off = pattern.off_support
    x[off] = soft_threshold(w[off], step)
    nrm = np.linalg.norm(x)
    return x / nrm if nrm > 1.0 else x


def search_interior_direction(
    X: np.ndarray,
    pattern: SignPattern,
    tol: float = 1e-8,
    max_iter: int = 20000,
    rowspace: RowSpace | None = None,
) -> DirectionSearch:
    """Minimize the cone objective over {Xh = 0, ||h|| <= 1} by Douglas-Rachford."""
    X = np.asarray(X, dtype=float)
    rs = RowSpace(X) if rowspace is None else rowspace
    p = X.shape[1]
    if rs.injective:
        return DirectionSearch(None, 0.0, False)
    step = 1.0 / np.sqrt(p)
    z = rs.kernel_project(-pattern.entries.copy())
    best_h, best_val = np.zeros(p), 0.0
    prev = None
    stalled = True
    for it in range(1, max_iter + 1):
        u = rs.kernel_project(z)
        x = _prox_cone_ball(2.0 * u - z, pattern, step)
        z = z + x - u
        if it % 25 == 0:
            h = rs.kernel_project(x)
            val = cone_objective(pattern, h)
            if val < best_val:
                best_h, best_val = h, val
            if best_val <= -tol and it >= 100:
                stalled = False
                break
            if prev is not None and np.linalg.norm(z - prev) <= 1e-12 * max(1.0, np.linalg.norm(z)):
                stalled = False
                break
            prev = z.copy()
    nrm = np.linalg.norm(best_h)
    if best_val <= -tol and nrm > 0:
        h0 = best_h / nrm
        margin = -cone_objective(pattern, h0)
        res = float(np.linalg.norm(X @ h0))
        return DirectionSearch(InteriorDirection(h0, margin, res), best_val, False)
    return DirectionSearch(None, best_val, stalled)


def find_interior_direction(
    X: np.ndarray,
    pattern: SignPattern,
    tol: float = 1e-8,
    max_iter: int = 20000,
    rowspace: RowSpace | None = None,
) -> InteriorDirection | None:
    """A unit kernel vector strictly inside K, or None.

    Emits a RuntimeWarning when the search stalled, so "no direction found"
    is distinguishable from a converged search whose minimum is above ``-tol``.
    """
    res = search_interior_direction(X, pattern, tol, max_iter, rowspace)
    if res.found is None and res.stalled:
        warnings.warn("interior-direction search stalled before converging", RuntimeWarning,
                      stacklevel=2)
    return res.found


@dataclass
class FailureCertificate:
    failed: bool
    witness: np.ndarray | None
    tau: float
    l1_gap: float
    direction: InteriorDirection | None
    bp: BPResult | None


def certify_b0_failure(
    X: np.ndarray,
    pattern: SignPattern,
    amplitude: float = 1.0,
    tol: float = 1e-8,
    b0: np.ndarray | None = None,
) -> FailureCertificate:
    """Certify that basis pursuit does not recover b0 = amplitude * s.

    A witness is b0 + tau*h0 with h0 an interior kernel direction and tau
    halved from 1 until the l1 norm drops by more than the gap tolerance.
    Without a direction, falls back to solving basis pursuit.
    """
    X = np.asarray(X, dtype=float)
    b0 = amplitude * pattern.entries if b0 is None else np.asarray(b0, dtype=float)
    rs = RowSpace(X)
    if rs.injective:
        return FailureCertificate(False, None, 0.0, 0.0, None, None)
    gap_tol = gap_tolerance(b0)
    l1_b0 = float(np.abs(b0).sum())
    direction = find_interior_direction(X, pattern, tol, rowspace=rs) if rs.full_row_rank else None
    if direction is not None:
        tau = 1.0
        for _ in range(80):
            cand = b0 + tau * direction.h0
            if np.abs(cand).sum() < l1_b0 - gap_tol:
                feas = np.linalg.norm(X @ (cand - b0))
                if feas <= 1e-8 * (1.0 + np.linalg.norm(X @ b0)):
                    return FailureCertificate(True, cand, tau, l1_b0 - float(np.abs(cand).sum()),
                                              direction, None)
            tau *= 0.5
    bp = bp_solve(X, b0, rowspace=rs, decide_only=True)
    failed = bp.status == "failed_strictly"
    return FailureCertificate(failed, bp.solution if failed else None, 0.0, bp.l1_gap, direction, bp)
