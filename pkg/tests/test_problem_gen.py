import numpy as np
import pytest
from hypothesis import given, strategies as st

from lassolab.problem_gen import (CovarianceSpec, ProblemConfig, SignPattern, build_covariance,
                                  load_problem, problem_from_arrays, sample_problem,
                                  sample_sign_pattern, save_problem, stream)


def _problem(n=30, p=50, k=5, seed=0, cov=None, rep=0):
    pcfg = ProblemConfig(n=n, p=p, covariance=cov, seed=seed)
    return sample_problem(pcfg, sample_sign_pattern(p, k, seed), replication=rep)


def test_identity_covariance():
    c = build_covariance(CovarianceSpec("identity", 4))
    assert np.array_equal(c.sigma, np.eye(4))
    assert np.array_equal(c.sqrt, np.eye(4))


def test_zero_correlation_toeplitz_is_identity():
    c = build_covariance(CovarianceSpec("toeplitz", 3, rho=0.0))
    assert np.array_equal(c.sigma, np.eye(3))


def test_toeplitz_eigenvalues_match_characteristic_polynomial():
    r = 0.5
    T = np.array([[1, r, r * r], [r, 1, r], [r * r, r, 1]])
    coeffs = np.poly(T)
    roots = np.sort(np.roots(coeffs).real)
    c = build_covariance(CovarianceSpec("toeplitz", 3, kappa=10.0, rho=r))
    assert np.all(c.eigenvalues >= 0.1 - 1e-10) and np.all(c.eigenvalues <= 10 + 1e-10)
    np.testing.assert_allclose(np.sort(c.eigenvalues), roots, atol=1e-12)
    np.testing.assert_allclose(c.sqrt @ c.sqrt, c.sigma, atol=1e-12)
    np.testing.assert_allclose(c.sqrt @ c.inv_sqrt, np.eye(3), atol=1e-12)


@given(st.integers(2, 30), st.floats(0.0, 0.95), st.floats(1.0, 20.0))
def test_clipped_spectrum_within_kappa(p, rho, kappa):
    c = build_covariance(CovarianceSpec("toeplitz", p, kappa=kappa, rho=rho))
    eig = np.linalg.eigvalsh(c.sigma)
    assert eig.min() >= 1 / kappa - 1e-10
    assert eig.max() <= kappa + 1e-10


def test_invalid_covariance_specs():
    with pytest.raises(ValueError):
        CovarianceSpec("banded", 3)
    with pytest.raises(ValueError):
        CovarianceSpec("identity", 3, kappa=0.5)
    with pytest.raises(ValueError):
        CovarianceSpec("diagonal", 3, values=(1.0, 2.0))


def test_null_signal_gives_pure_noise():
    pcfg = ProblemConfig(n=10, p=12)
    prob = sample_problem(pcfg, SignPattern(np.zeros(12)))
    assert np.all(prob.b_star == 0)
    assert np.array_equal(prob.y, prob.noise)
    with pytest.raises(ValueError):
        sample_problem(pcfg, SignPattern(np.zeros(12)), amplitude=0.0)


def test_fixed_seed_is_bit_identical():
    a, b = _problem(seed=3), _problem(seed=3)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    c = _problem(seed=3, rep=1)
    assert not np.array_equal(a.X, c.X)
    d = _problem(seed=3, rep=(0, 1))
    assert not np.array_equal(c.X, d.X)


def test_column_variances_near_one():
    prob = _problem(n=2000, p=100, k=10, seed=1)
    v = prob.X.var(axis=0, ddof=1)
    assert np.all(np.abs(v - 1) < 0.2)


def test_toeplitz_design_has_requested_covariance():
    spec = CovarianceSpec("toeplitz", 20, kappa=5.0, rho=0.6)
    prob = _problem(n=20000, p=20, k=3, cov=spec, seed=2)
    emp = prob.X.T @ prob.X / prob.n
    assert np.max(np.abs(emp - prob.cov.sigma)) < 0.06


@given(st.integers(0, 2**32), st.integers(1, 12), st.integers(0, 12), st.integers(1, 12))
def test_response_is_assembled_from_signal_and_noise(seed, n, k, extra):
    p = max(k, 1) + extra
    k = min(k, p)
    prob = _problem(n=n, p=p, k=k, seed=seed)
    assert np.array_equal(prob.y, prob.X @ prob.b_star + prob.noise)
    scale = np.abs(prob.X) @ np.abs(prob.b_star) + np.abs(prob.noise) + 1.0
    assert np.all(np.abs(prob.y - prob.X @ prob.b_star - prob.noise) <= 4e-16 * scale)


@given(st.integers(1, 40), st.data())
def test_sign_pattern_cardinality(p, data):
    k = data.draw(st.integers(0, p))
    s = sample_sign_pattern(p, k, data.draw(st.integers(0, 1000)))
    assert s.k == k and np.count_nonzero(s.entries) == k
    assert set(np.unique(s.entries)) <= {-1.0, 0.0, 1.0}


def test_sign_pattern_edge_cases():
    assert not sample_sign_pattern(5, 0, 0).entries.any()
    assert np.all(sample_sign_pattern(5, 5, 0).entries != 0)
    assert sample_sign_pattern(10, 3, 7).k == 3
    with pytest.raises(ValueError):
        SignPattern(np.array([0.0, 2.0]))


def test_config_validation():
    with pytest.raises(ValueError):
        ProblemConfig(n=10, p=20, sigma=0.0)
    with pytest.raises(ValueError):
        ProblemConfig(n=10, p=40, gamma=2.0)
    assert ProblemConfig(n=10, p=20).aspect == 2.0


def test_save_load_round_trip(tmp_path):
    spec = CovarianceSpec("toeplitz", 15, kappa=4.0, rho=0.3)
    prob = _problem(n=8, p=15, k=3, cov=spec, seed=11, rep=(2, 5))
    path = tmp_path / "prob.txt"
    save_problem(prob, path)
    back = load_problem(path)
    for name in ("X", "y", "b_star", "noise"):
        assert np.array_equal(getattr(prob, name), getattr(back, name))
    assert back.config == prob.config
    assert back.replication == (2, 5)


def test_problem_from_arrays():
    prob = problem_from_arrays([[1.0, 0.0], [0.0, 1.0]], [1.0, 2.0], lam=0.1)
    assert prob.n == 2 and prob.p == 2 and prob.penalty == pytest.approx(0.1 * np.sqrt(2))


def test_streams_are_independent_of_call_order():
    a = stream(5, 1, 2).standard_normal(3)
    stream(5, 9).standard_normal(100)
    assert np.array_equal(a, stream(5, 1, 2).standard_normal(3))
