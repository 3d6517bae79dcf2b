"""Risk, sparsity and GCV diagnostics of a fitted Lasso instance."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._linalg import op_norm
from .lasso import LassoFit, lasso_fit
from .problem_gen import RegressionProblem


def default_mu(n: int) -> float:
    return n ** (-1.0 / 8.0)


@dataclass
class DiagnosticsReport:
    risk: float
    l2_error: float
    df: int
    support_fraction: float
    residual_norm: float
    gcv: float
    gcv_defined: bool
    gcv_gap: float
    mu_used: float
    event_chi2: bool
    event_opnorm: bool
    opnorm: float

    CSV_COLUMNS = ("risk", "l2_error", "df", "support_fraction", "residual_norm", "gcv",
                   "gcv_defined", "gcv_gap", "mu_used", "event_chi2", "event_opnorm")

    def to_dict(self) -> dict:
        return asdict(self)


def risk(problem: RegressionProblem, b: np.ndarray) -> float:
    """||Sigma^{1/2}(b - b*)||^2."""
    d = b - problem.b_star
    if problem.cov.is_identity:
        return float(d @ d)
    return float(d @ problem.cov.sigma @ d)


def gcv_gap(residual_norm: float, R: float, df: int, n: int, sigma: float, mu: float) -> float:
    return (residual_norm / math.sqrt(sigma ** 2 + R) - (1.0 - df / n)
            - math.sqrt(mu) * R / (2.0 * sigma ** 2))


def diagnose(problem: RegressionProblem, fit: LassoFit, mu: float | None = None,
             check_opnorm: bool = True) -> DiagnosticsReport:
    """Risk, GCV and the one-sided GCV gap, plus the two high-probability events.

    ``mu`` defaults to n^{-1/8}. The operator-norm event uses power iteration
    on X Sigma^{-1/2}; pass ``check_opnorm=False`` to skip it in hot loops.
    """
    n, sigma = problem.n, problem.config.sigma
    mu = default_mu(n) if mu is None else float(mu)
    b = fit.coefficients
    R = risk(problem, b)
    df = int(fit.df)
    resid = float(np.linalg.norm(problem.y - problem.X @ b) / math.sqrt(n))
    if df < n:
        gcv, defined = resid ** 2 / (1.0 - df / n) ** 2, True
    else:
        gcv, defined = math.inf, False
    gap = gcv_gap(resid, R, df, n, sigma, mu)
    chi2 = bool(np.linalg.norm(problem.noise) <= 2.0 * sigma * math.sqrt(n))
    if check_opnorm:
        Z = problem.X if problem.cov.is_identity else problem.X @ problem.cov.inv_sqrt
        opn = op_norm(Z)
        ev_op = bool(opn <= math.sqrt(n) * (2.0 + math.sqrt(problem.config.gamma_eff)))
    else:
        opn, ev_op = math.nan, False
    return DiagnosticsReport(R, float(np.linalg.norm(b - problem.b_star)), df, df / n, resid,
                             gcv, defined, gap, mu, chi2, ev_op, opn)


def kkt_sparsity_bound(problem: RegressionProblem, fit: LassoFit) -> tuple[float, float]:
    """(n lambda^2 df, ||y - Xb||^2 ||X_A||_op^2); the first never exceeds the second."""
    A = fit.active_set
    lhs = problem.n * problem.lam ** 2 * fit.df
    if A.size == 0:
        return float(lhs), 0.0
    r2 = float(np.sum((problem.y - problem.X @ fit.coefficients) ** 2))
    return float(lhs), r2 * float(np.linalg.norm(problem.X[:, A], 2)) ** 2


@dataclass
class SparsityFloor:
    holds: bool
    lhs: float
    rhs: float
    margin: float                 # 1 - df/n
    implied_lower_bound: float    # on 1 - df/n


def sparsity_floor_check(problem: RegressionProblem, fit: LassoFit, report: DiagnosticsReport,
                         kappa: float | None = None, gamma: float | None = None) -> SparsityFloor:
    """Check lambda' sqrt(df/n) - (1 - df/n) <= 2 n^{-1/32} with risk R plugged in.

    lambda' = lambda / (sqrt(kappa) (2 + sqrt(gamma)) sqrt(sigma^2 + R)).
    When df/n >= 1/2 the inequality forces 1 - df/n >= lambda'/sqrt(2) - 2 n^{-1/32}.
    """
    n = problem.n
    kappa = problem.config.covariance.kappa if kappa is None else kappa
    gamma = problem.config.gamma_eff if gamma is None else gamma
    frac = report.df / n
    lam_eff = problem.lam / (math.sqrt(kappa) * (2.0 + math.sqrt(gamma))
                             * math.sqrt(problem.config.sigma ** 2 + report.risk))
    lhs = lam_eff * math.sqrt(frac) - (1.0 - frac)
    rhs = 2.0 * n ** (-1.0 / 32.0)
    if frac >= 0.5:
        lower = lam_eff / math.sqrt(2.0) - rhs
    else:
        lower = 0.5
    return SparsityFloor(lhs <= rhs, lhs, rhs, 1.0 - frac, lower)


@dataclass
class PathPoint:
    lam: float
    support_fraction: float
    keep: bool
    risk: float
    fit: LassoFit


def lambda_path_screen(problem: RegressionProblem, lambdas, threshold: float) -> list[PathPoint]:
    """Fit a decreasing lambda path with warm starts; drop lambdas whose fit is too dense."""
    lambdas = [float(x) for x in lambdas]
    if any(a < b for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be sorted in decreasing order")
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    out, init = [], None
    for lam in lambdas:
        fit = lasso_fit(problem, lam=lam, init=init)
        init = fit.coefficients
        frac = fit.df / problem.n
        out.append(PathPoint(lam, frac, frac <= threshold, risk(problem, fit.coefficients), fit))
    return out
