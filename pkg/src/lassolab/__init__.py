"""Lasso risk, sparsity and the basis-pursuit phase transition in proportional regimes."""
from .basis_pursuit import bp_solve, certify_b0_failure, find_interior_direction
from .cone_geometry import ConeSpec, gaussian_width, gordon_re_prediction, project_cone
from .diagnostics import diagnose, risk
from .lasso import lasso_fit, perturbed_fit
from .problem_gen import (CovarianceSpec, ProblemConfig, SignPattern, sample_problem,
                          sample_sign_pattern)
from .re_analysis import check_risk_bound_chain, risk_bounds, re_heuristic

__version__ = "0.1.0"
