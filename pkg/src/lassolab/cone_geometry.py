"""The cone K = {h : sum_{j off support} |h_j| <= -s'h} and its Gaussian width.

The width of K under a covariance Sigma is the expected norm of the Euclidean
projection of a standard Gaussian vector onto C = Sigma^{1/2} K. Projection
onto C is a one-constraint convex program, solved through its scalar dual:
the multiplier nu of the constraint is bisected, and each inner problem is
soft-thresholding (Sigma = I) or a small weighted-l1 quadratic program.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lasso import solve_weighted_l1_qp
from .problem_gen import Covariance, CovarianceSpec, SignPattern, build_covariance, stream

BISECTION_STEPS = 60
BLOCK = 256
DEFAULT_FAIL_PROB = 0.01


class ProjectionError(RuntimeError):
    """The dual bisection saw a constraint value that was not monotone in nu."""


@dataclass(frozen=True)
class ConeSpec:
    pattern: SignPattern
    covariance: CovarianceSpec | None = None

    def __post_init__(self):
        if self.covariance is None:
            object.__setattr__(self, "covariance", CovarianceSpec("identity", self.pattern.p))
        elif self.covariance.p != self.pattern.p:
            raise ValueError("covariance and pattern dimensions differ")

    @property
    def p(self) -> int:
        return self.pattern.p

    @property
    def k(self) -> int:
        return self.pattern.k

    @property
    def trivial(self) -> bool:
        """K = {0}: with an empty support the constraint forces ||h||_1 <= 0."""
        return self.pattern.k == 0

    @cached_property
    def cov(self) -> Covariance:
        return build_covariance(self.covariance)

    def euclidean(self) -> "ConeSpec":
        """Same K, identity metric."""
        return ConeSpec(self.pattern, CovarianceSpec("identity", self.p))


def constraint_value(pattern: SignPattern, h: np.ndarray) -> np.ndarray:
    """s'h + ||h_{S^c}||_1 along the last axis; K is where this is <= 0."""
    h = np.asarray(h, dtype=float)
    off = pattern.off_support
    return h @ pattern.entries + np.abs(h[..., off]).sum(axis=-1)


def cone_membership(cone: ConeSpec, h: np.ndarray, tol: float = 1e-9) -> bool:
    h = np.asarray(h, dtype=float)
    return bool(constraint_value(cone.pattern, h) <= tol * np.linalg.norm(h))


@dataclass
class ConeProjection:
    u: np.ndarray     # projection of g onto C = Sigma^{1/2} K
    h: np.ndarray     # preimage in K: u = Sigma^{1/2} h
    nu: np.ndarray    # dual multiplier(s)


def _project_identity(pattern: SignPattern, G: np.ndarray) -> ConeProjection:
    """Vectorized projection of the rows of G onto K (Sigma = I)."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    m, p = G.shape
    s = pattern.entries
    S, off = pattern.support, pattern.off_support
    k = pattern.k
    sg = G @ s
    absoff = np.abs(G[:, off])

    def phi(nu):
        return sg - nu * k + np.maximum(absoff - nu[:, None], 0.0).sum(axis=1)

    nu = np.zeros(m)
    need = phi(nu) > 0
    if np.any(need):
        lo = np.zeros(m)
        hi = np.ones(m)
        if k == 0:
            hi = np.maximum(absoff.max(axis=1, initial=0.0), 1.0)
        grow = need & (phi(hi) > 0)
        while np.any(grow):
            hi[grow] *= 2.0
            grow = need & (phi(hi) > 0)
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            pos = phi(mid) > 0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        # phi is linear between breakpoints; solve exactly on the final piece
        act = absoff > hi[:, None]
        cnt = k + act.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            exact = (sg + np.where(act, absoff, 0.0).sum(axis=1)) / cnt
        ok = (cnt > 0) & (exact >= lo - 1e-12 * hi) & (exact <= hi + 1e-12 * hi)
        nu = np.where(need, np.where(ok, exact, hi), 0.0)
        if k == 0:
            nu = np.where(need, np.maximum(nu, absoff.max(axis=1, initial=0.0)), 0.0)
    H = G.copy()
    H[:, S] -= nu[:, None] * s[S]
    H[:, off] = np.sign(G[:, off]) * np.maximum(absoff - nu[:, None], 0.0)
    return ConeProjection(H, H, nu)


def _project_general(cone: ConeSpec, g: np.ndarray, tol: float) -> ConeProjection:
    cov = cone.cov
    pattern = cone.pattern
    s = pattern.entries
    off = pattern.off_support
    Sig = cov.sigma
    rhs = cov.sqrt @ g
    wmask = np.zeros(cone.p)
    wmask[off] = 1.0
    scale = max(1.0, float(np.abs(rhs).max()))
    max_sweeps = 100 * cone.p

    def inner(nu, init=None):
        sol = solve_weighted_l1_qp(Sig, rhs - nu * s, nu * wmask, tol * scale, max_sweeps, init)
        return sol.b, float(constraint_value(pattern, sol.b))

    h0, c0 = inner(0.0)
    if c0 <= tol * max(1.0, np.linalg.norm(h0)):
        return ConeProjection(cov.sqrt @ h0, h0, np.array([0.0]))
    lo, hi = 0.0, 1.0
    h_hi, c_hi = inner(hi, h0)
    while c_hi > 0:
        lo = hi
        hi *= 2.0
        h_hi, c_hi = inner(hi, h_hi)
        if hi > 1e12 * scale:
            raise ProjectionError("could not bracket the dual multiplier")
    c_lo = c0
    h_lo = h0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        h_mid, c_mid = inner(mid, h_hi)
        slack = 1e-9 * max(1.0, abs(c_lo), abs(c_hi))
        if c_mid > c_lo + slack or c_mid < c_hi - slack:
            raise ProjectionError(f"constraint value not monotone at nu={mid:.6g}")
        if c_mid > 0:
            lo, c_lo, h_lo = mid, c_mid, h_mid
        else:
            hi, c_hi, h_hi = mid, c_mid, h_mid
    return ConeProjection(cov.sqrt @ h_hi, h_hi, np.array([hi]))


def project_cone(cone: ConeSpec, g: np.ndarray, tol: float = 1e-10) -> ConeProjection:
    g = np.asarray(g, dtype=float)
    if cone.trivial:
        return ConeProjection(np.zeros_like(g), np.zeros_like(g), np.array([np.inf]))
    if cone.covariance.is_identity:
        proj = _project_identity(cone.pattern, g)
        return ConeProjection(proj.u[0], proj.h[0], proj.nu)
    return _project_general(cone, g, tol)


def project_transformed_cone(cone: ConeSpec, g: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Euclidean projection of g onto Sigma^{1/2} K."""
    return project_cone(cone, g, tol).u


def projection_norms(cone: ConeSpec, G: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """||Pi_C(g)|| for every row g of G."""
    G = np.atleast_2d(G)
    if cone.trivial:
        return np.zeros(G.shape[0])
    if cone.covariance.is_identity:
        return np.linalg.norm(_project_identity(cone.pattern, G).u, axis=1)
    return np.array([np.linalg.norm(project_transformed_cone(cone, g, tol)) for g in G])


@dataclass
class WidthEstimate:
    mean: float
    std_error: float
    samples: int
    normalized: float
    mean_sq: float
    mean_sq_se: float
    n: int | None = None

    def row(self) -> dict:
        return {
            "width_mean": self.mean,
            "width_se": self.std_error,
            "normalized": self.normalized,
            "samples": self.samples,
        }


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    m = math.fsum(x) / x.size
    var = math.fsum((x - m) ** 2) / (x.size - 1)
    return m, math.sqrt(var / x.size)


def gaussian_width(cone: ConeSpec, samples: int = 2000, seed: int = 0,
                   n: int | None = None) -> WidthEstimate:
    """Monte-Carlo estimate of the Gaussian width of K under Sigma.

    Samples whose projection is 0 contribute 0 (the supremum over the unit
    sphere would be negative there). Blocks of samples come from independent
    substreams and sums are exact (``math.fsum``), so the estimate does not
    depend on evaluation order.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    norms = np.empty(samples)
    for start in range(0, samples, BLOCK):
        m = min(BLOCK, samples - start)
        G = stream(seed, 7, start // BLOCK).standard_normal((m, cone.p))
        norms[start:start + m] = projection_norms(cone, G)
    mean, se = _mean_se(norms)
    msq, msq_se = _mean_se(norms ** 2)
    normalized = mean / math.sqrt(n) if n else float("nan")
    return WidthEstimate(mean, se, samples, normalized, msq, msq_se, n)


def default_gordon_t(fail_prob: float = DEFAULT_FAIL_PROB) -> float:
    """t with exp(-t^2/2) = fail_prob."""
    return math.sqrt(2.0 * math.log(1.0 / fail_prob))


@dataclass
class GordonPrediction:
    lower_bound: float   # (sqrt(n-1) - width - t)/sqrt(n), Sigma-normalized directions
    re_constant: float   # same bound divided by sqrt(kappa), for Euclidean-normalized v
    width: float
    t: float


def gordon_re_prediction(cone: ConeSpec, n: int, t: float | None = None,
                         width: WidthEstimate | float | None = None,
                         samples: int = 2000, seed: int = 0) -> GordonPrediction:
    """Escape-through-a-mesh lower bound on the restricted minimum of ||Xh||/sqrt(n).

    A negative value means no guarantee.
    """
    t = default_gordon_t() if t is None else float(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if width is None:
        width = gaussian_width(cone, samples, seed, n)
    w = width.mean if isinstance(width, WidthEstimate) else float(width)
    lb = (math.sqrt(n - 1) - w - t) / math.sqrt(n)
    return GordonPrediction(lb, lb / math.sqrt(cone.covariance.kappa), w, t)
