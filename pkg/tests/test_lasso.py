import numpy as np
import pytest
from hypothesis import given, strategies as st

from lassolab.diagnostics import kkt_sparsity_bound, risk
from lassolab.homotopy import homotopy_solve
from lassolab.lasso import (extract_active_set, kkt_certificate, lasso_fit, lasso_objective,
                            perturbed_fit, solve_weighted_l1_qp)
from lassolab.problem_gen import (CovarianceSpec, ProblemConfig, SignPattern, problem_from_arrays,
                                  sample_problem, sample_sign_pattern)

from oracles import lasso_oracle, perturbed_oracle


def small_problem(seed, n=6, p=4, k=2, lam=0.3, cov=None, amplitude=1.0):
    pcfg = ProblemConfig(n=n, p=p, lam=lam, covariance=cov, seed=seed)
    return sample_problem(pcfg, sample_sign_pattern(p, k, seed), amplitude)


def test_large_penalty_gives_zero():
    prob = small_problem(0)
    lam = 1.01 * np.abs(prob.xty).max() / np.sqrt(prob.n)
    fit = lasso_fit(prob, lam=lam)
    assert not fit.coefficients.any() and fit.df == 0
    assert extract_active_set(fit, prob.with_lam(lam)).size == 0


def test_scalar_soft_threshold():
    prob = problem_from_arrays([[1.0]], [2.0], lam=1.0)
    fit = lasso_fit(prob)
    assert fit.coefficients[0] == pytest.approx(1.0, abs=1e-12)
    assert list(fit.active_set) == [0]
    grad = prob.X.T @ (prob.y - prob.X @ fit.coefficients)
    assert grad[0] == pytest.approx(prob.penalty)


def test_six_by_four_matches_oracle():
    prob = small_problem(42)
    fit = lasso_fit(prob)
    b_or, f_or = lasso_oracle(prob.X, prob.y, prob.penalty)
    np.testing.assert_allclose(fit.coefficients, b_or, atol=1e-6)
    assert set(fit.active_set) == set(np.flatnonzero(b_or))
    assert kkt_certificate(b_or, prob) <= 1e-8


@given(st.integers(0, 10**6), st.integers(1, 8), st.integers(1, 5),
       st.floats(0.05, 1.5))
def test_lasso_matches_sign_pattern_oracle(seed, n, p, lam):
    prob = small_problem(seed, n=n, p=p, k=min(2, p), lam=lam)
    b_or, f_or = lasso_oracle(prob.X, prob.y, prob.penalty)
    fit = lasso_fit(prob)
    assert fit.converged
    # objective always; coefficients when the minimizer is unique
    assert lasso_objective(prob, fit.coefficients) <= lasso_objective(prob, b_or) + 1e-9
    if np.count_nonzero(b_or) <= n:
        np.testing.assert_allclose(fit.coefficients, b_or, atol=1e-6)


@given(st.integers(0, 10**6), st.integers(1, 8), st.integers(1, 5),
       st.floats(1e-3, 1.0))
def test_perturbed_matches_oracle(seed, n, p, mu):
    cov = CovarianceSpec("toeplitz", p, kappa=4.0, rho=0.4)
    prob = small_problem(seed, n=n, p=p, k=min(2, p), cov=cov)
    b_or, _ = perturbed_oracle(prob.X, prob.y, prob.penalty, mu, prob.cov.sigma, prob.b_star)
    fit = perturbed_fit(prob, prob.b_star, mu)
    np.testing.assert_allclose(fit.coefficients, b_or, atol=1e-6)


def test_vanishing_perturbation_recovers_lasso():
    prob = small_problem(7, n=40, p=30, k=4)
    a = lasso_fit(prob).coefficients
    b = perturbed_fit(prob, prob.b_star, 1e-10).coefficients
    np.testing.assert_allclose(a, b, atol=1e-4)


def test_perturbed_zero_when_penalty_dominates():
    pcfg = ProblemConfig(n=10, p=8, lam=0.5, seed=1)
    prob = sample_problem(pcfg, SignPattern(np.zeros(8)))
    lam = 1.01 * np.abs(prob.xty).max() / np.sqrt(prob.n)
    fit = perturbed_fit(prob.with_lam(lam), prob.b_star, 0.5)
    assert not fit.coefficients.any()
    with pytest.raises(ValueError):
        perturbed_fit(prob, prob.b_star, 0.0)


def test_kkt_certificate_examples():
    prob = small_problem(3, n=8, p=5)
    fit = lasso_fit(prob)
    assert kkt_certificate(fit.coefficients, prob) <= 1e-9 * prob.penalty * 10
    assert kkt_certificate(fit.coefficients + 5.0, prob) > 1.0


def test_objective_monotone_over_sweeps():
    prob = small_problem(5, n=50, p=120, k=10)
    fit = lasso_fit(prob, record_objective=True)
    h = np.array(fit.history)
    assert h.size >= 1
    assert np.all(np.diff(h) <= 1e-9 * np.abs(h[:-1]).clip(1.0))


def test_warm_start_agrees_with_cold_start():
    prob = small_problem(9, n=60, p=100, k=8)
    cold = lasso_fit(prob).coefficients
    warm = lasso_fit(prob, init=cold + 0.1).coefficients
    np.testing.assert_allclose(cold, warm, atol=1e-7)


def test_homotopy_matches_oracle():
    prob = small_problem(11, n=5, p=5, k=3)
    b, steps, status = homotopy_solve(prob.gram, prob.xty, prob.penalty)
    assert status == 0
    np.testing.assert_allclose(b, lasso_oracle(prob.X, prob.y, prob.penalty)[0], atol=1e-8)


def test_dense_fit_uses_exact_path():
    # df close to n, where plain coordinate descent crawls
    prob = small_problem(1, n=100, p=200, k=70, amplitude=1000.0)
    fit = lasso_fit(prob)
    assert fit.converged
    assert fit.kkt_residual <= 1e-9 * prob.penalty
    assert fit.df <= prob.n


def test_weighted_qp_with_zero_weights():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((10, 4))
    G, c = A.T @ A, rng.standard_normal(4)
    sol = solve_weighted_l1_qp(G, c, np.zeros(4), 1e-12, 1000)
    np.testing.assert_allclose(sol.b, np.linalg.solve(G, c), atol=1e-8)


@given(st.integers(0, 10**6), st.sampled_from([(20, 40), (40, 40), (30, 90)]),
       st.floats(0.05, 1.0))
def test_deterministic_inequalities(seed, shape, mu):
    n, p = shape
    prob = small_problem(seed, n=n, p=p, k=max(1, n // 10), lam=0.5)
    fit = lasso_fit(prob)
    pf = perturbed_fit(prob, prob.b_star, mu)
    R = risk(prob, fit.coefficients)
    assert risk(prob, pf.coefficients) <= R + 1e-6
    d = prob.X @ (fit.coefficients - pf.coefficients)
    assert d @ d <= mu * n * R + 1e-6
    lhs, rhs = kkt_sparsity_bound(prob, fit)
    assert lhs <= rhs * (1 + 1e-9) + 1e-9
    assert fit.df == np.count_nonzero(fit.coefficients)
