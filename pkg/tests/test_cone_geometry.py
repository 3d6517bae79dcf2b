import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lassolab.cone_geometry import (ConeSpec, cone_membership, constraint_value, gaussian_width,
                                    gordon_re_prediction, project_cone, projection_norms)
from lassolab.problem_gen import (CovarianceSpec, SignPattern, build_covariance,
                                  sample_sign_pattern, stream)

from oracles import (cone_rows, l1_statistical_dimension, polyhedral_projection,
                     transformed_cone_projection)

# frozen from oracles.l1_statistical_dimension(200, 20)
SD_200_20 = 65.75870109072602


def test_oracle_value_is_frozen():
    assert l1_statistical_dimension(200, 20) == pytest.approx(SD_200_20, rel=1e-9)


def test_membership_examples():
    pat = sample_sign_pattern(10, 4, 0)
    cone = ConeSpec(pat)
    s = pat.entries
    assert cone_membership(cone, -s)
    assert constraint_value(pat, -s) == pytest.approx(-4.0)
    assert not cone_membership(cone, s)
    h = np.zeros(10)
    h[pat.off_support[0]] = 1.0
    assert not cone_membership(cone, h)


def test_members_are_fixed_points():
    pat = sample_sign_pattern(8, 3, 1)
    g = -pat.entries * 2.0
    np.testing.assert_allclose(project_cone(ConeSpec(pat), g).u, g)


def test_trivial_cone_projects_to_zero():
    cone = ConeSpec(SignPattern(np.zeros(5)))
    assert cone.trivial
    assert not project_cone(cone, np.ones(5)).u.any()


def test_two_dimensional_boundary_point():
    cone = ConeSpec(SignPattern(np.array([-1.0, 0.0])))
    np.testing.assert_allclose(project_cone(cone, np.array([1.0, 1.0])).u, [1.0, 1.0])


def _kkt_identity(pat, g, proj):
    u, nu = proj.u, float(proj.nu[0])
    r = g - u
    S, off = pat.support, pat.off_support
    s = pat.entries
    assert nu >= 0
    np.testing.assert_allclose(r[S], nu * s[S], atol=1e-7)
    for j in off:
        if abs(u[j]) > 1e-12:
            assert r[j] == pytest.approx(nu * np.sign(u[j]), abs=1e-7)
        else:
            assert abs(r[j]) <= nu + 1e-7
    assert abs(nu * constraint_value(pat, u)) <= 1e-7 * max(1.0, np.linalg.norm(g))


@given(st.integers(0, 10**6), st.integers(1, 6), st.data())
def test_identity_projection_matches_enumeration(seed, p, data):
    k = data.draw(st.integers(1, p))
    pat = sample_sign_pattern(p, k, seed)
    if p - k > 3:
        return
    g = stream(seed, 1).standard_normal(p) * 3
    proj = project_cone(ConeSpec(pat), g)
    np.testing.assert_allclose(proj.u, polyhedral_projection(cone_rows(pat.entries), g),
                               atol=1e-8)
    _kkt_identity(pat, g, proj)


@given(st.integers(0, 10**6), st.integers(2, 5), st.floats(0.0, 0.8))
def test_general_projection_matches_enumeration(seed, p, rho):
    pat = sample_sign_pattern(p, max(1, p // 2), seed)
    spec = CovarianceSpec("toeplitz", p, kappa=6.0, rho=rho)
    g = stream(seed, 2).standard_normal(p)
    u = project_cone(ConeSpec(pat, spec), g).u
    ref = transformed_cone_projection(pat.entries, build_covariance(spec).sqrt, g)
    np.testing.assert_allclose(u, ref, atol=1e-7)


@given(st.integers(0, 10**6), st.sampled_from([0.5, 2.0]), st.booleans())
def test_projection_homogeneous_and_contractive(seed, alpha, general):
    p = 12
    pat = sample_sign_pattern(p, 4, seed)
    spec = CovarianceSpec("toeplitz", p, kappa=3.0, rho=0.5) if general else None
    cone = ConeSpec(pat, spec)
    g = stream(seed, 3).standard_normal(p)
    u = project_cone(cone, g).u
    np.testing.assert_allclose(project_cone(cone, alpha * g).u, alpha * u, atol=1e-7)
    assert np.linalg.norm(u) <= np.linalg.norm(g) + 1e-12
    assert abs((g - u) @ u) <= 1e-7 * max(1.0, g @ g)


def test_batched_norms_match_single_projections():
    pat = sample_sign_pattern(30, 5, 4)
    G = stream(4).standard_normal((7, 30))
    single = [np.linalg.norm(project_cone(ConeSpec(pat), g).u) for g in G]
    np.testing.assert_allclose(projection_norms(ConeSpec(pat), G), single, atol=1e-12)


def test_width_of_trivial_cone_is_zero():
    est = gaussian_width(ConeSpec(SignPattern(np.zeros(20))), 100)
    assert est.mean == 0.0 and est.std_error == 0.0


def test_half_space_second_moment():
    p = 100
    est = gaussian_width(ConeSpec(SignPattern(np.ones(p))), 10_000, seed=0)
    assert abs(est.mean_sq - (p - 0.5)) <= 3 * est.mean_sq_se


def test_statistical_dimension_agreement():
    est = gaussian_width(ConeSpec(sample_sign_pattern(200, 20, 0)), 4000, seed=1)
    tol = max(0.02 * SD_200_20, 4 * est.std_error * est.mean)
    assert abs(est.mean_sq - SD_200_20) <= tol


def test_width_monotone_in_nested_cones():
    # zeroing a support entry replaces s_j h_j by |h_j|, which shrinks K
    big = sample_sign_pattern(60, 12, 5)
    small_entries = big.entries.copy()
    small_entries[big.support[0]] = 0.0
    a = gaussian_width(ConeSpec(big), 2000, seed=2)
    b = gaussian_width(ConeSpec(SignPattern(small_entries)), 2000, seed=2)
    assert b.mean <= a.mean + 3 * math.hypot(a.std_error, b.std_error)


def test_width_is_seed_deterministic():
    cone = ConeSpec(sample_sign_pattern(50, 5, 0))
    a = gaussian_width(cone, 600, seed=3)
    b = gaussian_width(cone, 600, seed=3)
    assert a.mean == b.mean and a.mean_sq == b.mean_sq


def test_gordon_examples():
    cone = ConeSpec(sample_sign_pattern(20, 5, 0))
    n = 10
    assert gordon_re_prediction(cone, n, t=0.0, width=math.sqrt(n - 1)).lower_bound <= 0
    trivial = ConeSpec(SignPattern(np.zeros(20)))
    pred = gordon_re_prediction(trivial, n, t=0.0, samples=10)
    assert pred.lower_bound == pytest.approx(math.sqrt(n - 1) / math.sqrt(n))
    with pytest.raises(ValueError):
        gordon_re_prediction(cone, n, t=-1.0, width=1.0)
