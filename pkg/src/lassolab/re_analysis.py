"""Restricted eigenvalues over K and the deterministic risk bounds they imply.

The restricted eigenvalue of X over K is estimated from above by projected
gradient descent on the sphere (the problem is nonconvex); a *lower* bound
only comes from Gordon's escape-through-a-mesh prediction. The risk bounds
take the RE constant, the noise level and the signal geometry and bound the
prediction error ||X(b - b*)||/sqrt(n) and the estimation error ||b - b*||.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._linalg import op_norm
from .cone_geometry import (ConeSpec, GordonPrediction, WidthEstimate, _project_identity,
                            constraint_value, gordon_re_prediction)
from .lasso import LassoFit
from .problem_gen import RegressionProblem, stream

PGD_ITERS = 500


@dataclass
class REEstimate:
    delta_star_heuristic: float
    restarts: int
    gordon_prediction: float
    certified: bool
    best_by_restart: list[float] = field(default_factory=list)
    minimizer: np.ndarray | None = None


def _project_sphere_k(cone: ConeSpec, v: np.ndarray) -> np.ndarray | None:
    u = _project_identity(cone.pattern, v).u[0]
    nrm = np.linalg.norm(u)
    return u / nrm if nrm > 0 else None


def re_heuristic(
    cone: ConeSpec,
    X: np.ndarray,
    restarts: int = 5,
    seed: int = 0,
    iters: int = PGD_ITERS,
    gordon: GordonPrediction | None = None,
    width: WidthEstimate | float | None = None,
    t: float | None = None,
) -> REEstimate:
    """Smallest ||Xv|| / (sqrt(n) ||v||) found over v in K by multi-start projected gradient.

    This is an upper bound on the true restricted eigenvalue. Restart 0
    starts from -s; restart r > 0 from -s plus a Gaussian perturbation, all
    projected into K.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if cone.trivial:
        raise ValueError("K = {0}: the restricted eigenvalue over K is undefined")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    lip = 2.0 * op_norm(X) ** 2 / n
    s = cone.pattern.entries
    if gordon is None:
        gordon = gordon_re_prediction(cone, n, t, width)

    def value(v):
        return float(np.linalg.norm(X @ v) / math.sqrt(n))

    best, best_v, per_restart = np.inf, None, []
    for r in range(restarts):
        start = -s.copy()
        if r > 0:
            start = start + stream(seed, 13, r).standard_normal(cone.p)
        v = _project_sphere_k(cone, start)
        if v is None:
            v = _project_sphere_k(cone, -s)
        cur = value(v)
        if cur < best:
            best, best_v = cur, v
        for _ in range(iters):
            grad = 2.0 * (X.T @ (X @ v)) / n
            nxt = _project_sphere_k(cone, v - grad / lip)
            if nxt is None:
                break
            v = nxt
            cur = value(v)
            if cur < best:
                best, best_v = cur, v
        per_restart.append(best)
    pred = gordon.re_constant
    return REEstimate(best, restarts, pred, bool(pred > 0 and best >= pred), per_restart, best_v)


@dataclass
class REBoundInputs:
    c1: float
    c2: float
    c3: float
    lam: float
    delta_star: float
    k: int
    n: int


def bound_inputs(problem: RegressionProblem, cone: ConeSpec, delta_star: float) -> REBoundInputs:
    """c1 = ||Xs||/sqrt(nk), c2 = sqrt(n/k), c3 = ||noise||/sqrt(n), realized on the instance."""
    k, n = cone.k, problem.n
    if k < 1:
        raise ValueError("bounds need a nonempty support")
    s = cone.pattern.entries
    c1 = float(np.linalg.norm(problem.X @ s) / math.sqrt(n * k))
    c2 = math.sqrt(n / k)
    c3 = float(np.linalg.norm(problem.noise) / math.sqrt(n))
    return REBoundInputs(c1, c2, c3, problem.lam, float(delta_star), k, n)


def risk_bounds(inputs: REBoundInputs) -> tuple[float, float]:
    """(bound on ||Xh||/sqrt(n), bound on ||h||_2) for the Lasso error h."""
    d = inputs.delta_star
    if not d > 0:
        raise ValueError("delta_star must be positive")
    c123 = inputs.c1 * inputs.c2 * inputs.c3
    pre = (inputs.lam * math.sqrt(inputs.k / inputs.n) + c123) / d
    l2 = pre * (inputs.c2 * inputs.c3 / inputs.lam + (1.0 + c123 / inputs.lam) / d)
    return pre, l2


@dataclass
class RiskBoundReport:
    seed: int
    k: int
    n: int
    p: int
    lam: float
    c1: float
    c2: float
    c3: float
    delta_heur: float
    gordon_pred: float
    prerisk_bound: float
    prerisk_measured: float
    l2_bound: float
    l2_measured: float
    v_in_K: bool
    v_constraint: float
    v_norm: float
    scale: float
    certified: bool
    bounds_hold: bool

    CSV_COLUMNS = ("seed", "k", "n", "p", "lambda", "c1", "c2", "c3", "delta_heur",
                   "gordon_pred", "prerisk_bound", "prerisk_measured", "l2_bound",
                   "l2_measured", "v_in_K")

    def csv_row(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return {c: d[c] for c in self.CSV_COLUMNS}


def pivot_vector(problem: RegressionProblem, cone: ConeSpec, b_hat: np.ndarray) -> np.ndarray:
    """h - s ||Xh|| ||noise|| / (k lambda sqrt(n)) with h = b_hat - b*; lies in K.

    The KKT conditions give s'w >= ||w_{S^c}||_1 for w = s*a - h, i.e.
    w in -K; its negative is returned so membership in K is the check.
    """
    h = b_hat - problem.b_star
    k = cone.k
    a = (np.linalg.norm(problem.X @ h) * np.linalg.norm(problem.noise)
         / (k * problem.lam * math.sqrt(problem.n)))
    return h - a * cone.pattern.entries


def check_risk_bound_chain(problem: RegressionProblem, cone: ConeSpec, fit: LassoFit,
                       re: REEstimate, tol: float = 1e-7) -> RiskBoundReport:
    """Recompute the pivot vector, its membership in K, and both risk bounds."""
    if not fit.converged:
        raise ValueError("fit did not converge")
    h = fit.coefficients - problem.b_star
    v = pivot_vector(problem, cone, fit.coefficients)
    vn = float(np.linalg.norm(v))
    vc = float(constraint_value(cone.pattern, v))
    inputs = bound_inputs(problem, cone, re.delta_star_heuristic)
    pre_b, l2_b = risk_bounds(inputs) if inputs.delta_star > 0 else (math.inf, math.inf)
    pre_m = float(np.linalg.norm(problem.X @ h) / math.sqrt(problem.n))
    l2_m = float(np.linalg.norm(h))
    return RiskBoundReport(
        seed=problem.config.seed, k=cone.k, n=problem.n, p=problem.p, lam=problem.lam,
        c1=inputs.c1, c2=inputs.c2, c3=inputs.c3, delta_heur=re.delta_star_heuristic,
        gordon_pred=re.gordon_prediction, prerisk_bound=pre_b, prerisk_measured=pre_m,
        l2_bound=l2_b, l2_measured=l2_m, v_in_K=bool(vc <= tol * vn), v_constraint=vc,
        v_norm=vn, scale=float(np.linalg.norm(problem.b_star)), certified=re.certified,
        bounds_hold=bool(pre_m <= pre_b and l2_m <= l2_b),
    )
