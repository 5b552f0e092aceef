import numpy as np
import pytest
import scipy.stats

from lcurve.errors import DegenerateData, DomainError, NotPositiveDefinite, SingularCovariance
from lcurve.utils_numerics import (RngStream, ar1_covariance, ar1_profile_loglik, as_sym_matrix, cholesky,
                                   fit_mvn_ar1, fit_mvn_full, nearest_correlation, ridge_jitter, sample_mvn,
                                   std_normal_cdf, std_normal_quantile)


def test_rng_stream_reproducible_and_independent():
    a = RngStream(1, 2, (3,)).generator().random(5)
    b = RngStream(1, 2, (3,)).generator().random(5)
    c = RngStream(1, 2, (4,)).generator().random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_rng_child_extends_path():
    parent = RngStream(9, 1)
    assert parent.child(2, 3) == RngStream(9, 1, (2, 3))
    np.testing.assert_array_equal(parent.child(2).child(3).generator().random(3),
                                  parent.child(2, 3).generator().random(3))


def test_ar1_covariance_entries():
    S = ar1_covariance(4, 0.5, sigma2=2.0)
    assert S[0, 0] == pytest.approx(2.0)
    assert S[0, 3] == pytest.approx(2.0 * 0.125)
    np.testing.assert_allclose(S, S.T)


def test_as_sym_matrix_rejects_asymmetry():
    with pytest.raises(DomainError):
        as_sym_matrix([[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(DomainError):
        as_sym_matrix(np.ones((2, 3)))


def test_cholesky_reconstructs():
    S = ar1_covariance(5, 0.3)
    L = cholesky(S)
    np.testing.assert_allclose(L @ L.T, S, atol=1e-12)


def test_cholesky_rejects_singular():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.ones((3, 3)))


def test_sample_mvn_moments():
    S = ar1_covariance(3, 0.6)
    X = sample_mvn(np.array([1.0, 0.0, -1.0]), S, 20000, RngStream(3))
    np.testing.assert_allclose(X.mean(axis=0), [1.0, 0.0, -1.0], atol=0.05)
    np.testing.assert_allclose(np.cov(X.T), S, atol=0.05)


def test_sample_mvn_deterministic():
    S = ar1_covariance(2, 0.1)
    np.testing.assert_array_equal(sample_mvn(np.zeros(2), S, 4, RngStream(5)),
                                  sample_mvn(np.zeros(2), S, 4, RngStream(5)))


def test_normal_cdf_and_quantile():
    assert std_normal_cdf(0.0) == pytest.approx(0.5)
    assert std_normal_quantile(0.975) == pytest.approx(1.959963984540054)
    assert std_normal_quantile(std_normal_cdf(0.7)) == pytest.approx(0.7)
    with pytest.raises(DomainError):
        std_normal_quantile(1.0)
    with pytest.raises(DomainError):
        std_normal_quantile([0.5, 0.0])


def test_fit_mvn_ar1_recovers_parameters():
    S = ar1_covariance(6, 0.5, sigma2=2.0)
    X = sample_mvn(np.full(6, 3.0), S, 4000, RngStream(21))
    est = fit_mvn_ar1(X)
    assert est.rho == pytest.approx(0.5, abs=0.03)
    assert est.sigma2 == pytest.approx(2.0, rel=0.05)
    np.testing.assert_allclose(est.mean, 3.0, atol=0.1)
    assert not est.at_boundary


def test_fit_mvn_ar1_maximizes_profile_likelihood():
    X = sample_mvn(np.zeros(4), ar1_covariance(4, -0.3), 300, RngStream(8))
    est = fit_mvn_ar1(X)
    best = ar1_profile_loglik(X, est.rho)
    for rho in (est.rho - 0.05, est.rho + 0.05):
        assert ar1_profile_loglik(X, rho) < best


def test_fit_mvn_ar1_rejects_constant_columns():
    with pytest.raises(DegenerateData):
        fit_mvn_ar1(np.ones((10, 3)))


def test_fit_mvn_full_needs_more_rows_than_columns():
    with pytest.raises(SingularCovariance):
        fit_mvn_full(np.random.default_rng(0).standard_normal((3, 3)))


def test_fit_mvn_full_uses_divisor_n():
    X = np.array([[0.0, 1.0], [2.0, 0.0], [1.0, 2.0]])
    mean, cov = fit_mvn_full(X)
    Z = X - X.mean(axis=0)
    np.testing.assert_allclose(cov, Z.T @ Z / 3)
    np.testing.assert_allclose(mean, [1.0, 1.0])


def test_ridge_jitter_scales_with_trace():
    S = np.diag([2.0, 4.0])
    np.testing.assert_allclose(ridge_jitter(S) - S, 3e-8 * np.eye(2))
    np.testing.assert_allclose(ridge_jitter(np.zeros((2, 2))), 1e-8 * np.eye(2))


def test_nearest_correlation_projects_indefinite():
    C = np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]])
    fixed, projected = nearest_correlation(C)
    assert projected
    np.testing.assert_allclose(np.diag(fixed), 1.0)
    assert np.linalg.eigvalsh(fixed)[0] > 0
    same, projected = nearest_correlation(np.eye(3))
    assert not projected
    np.testing.assert_array_equal(same, np.eye(3))


def test_cholesky_small_example():
    L = cholesky([[4.0, 2.0], [2.0, 3.0]])
    np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], atol=1e-15)
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(cholesky(ar1_covariance(4, 0.0)), np.eye(4))


@pytest.mark.parametrize("p", [1, 2, 5, 10, 20])
def test_cholesky_random_spd(p):
    gen = np.random.default_rng(p)
    G = gen.standard_normal((p, p))
    S = G @ G.T + p * np.eye(p)
    L = cholesky(S)
    np.testing.assert_array_equal(L, np.tril(L))
    assert np.all(np.diag(L) > 0)
    assert np.max(np.abs(L @ L.T - S)) < 1e-10 * np.max(np.abs(S))
    np.testing.assert_allclose(cholesky(L @ L.T), L, atol=1e-10)


def test_sample_mvn_identity_passes_ks():
    X = sample_mvn(np.zeros(3), np.eye(3), 10000, RngStream(41))
    np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=0.05)
    for j in range(3):
        assert scipy.stats.kstest(X[:, j], "norm").pvalue > 1e-4


def test_sample_mvn_correlation():
    X = sample_mvn(np.zeros(2), np.array([[1.0, 0.9], [0.9, 1.0]]), 10000, RngStream(42))
    assert np.corrcoef(X.T)[0, 1] == pytest.approx(0.9, abs=0.02)


def test_normal_quantile_round_trip_precision():
    q = np.concatenate([[1e-8, 1.0 - 1e-8], np.logspace(-8, -1, 50), np.linspace(0.01, 0.99, 99),
                        1.0 - np.logspace(-8, -1, 50)])
    np.testing.assert_allclose(std_normal_cdf(std_normal_quantile(q)), q, rtol=0, atol=1e-9)
    assert std_normal_quantile(std_normal_cdf(1.7)) == pytest.approx(1.7, abs=1e-9)
    assert std_normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)


@pytest.mark.parametrize("p,rho,lo,hi", [(10, 0.0, -0.03, 0.03), (15, 0.75, 0.72, 0.78)])
def test_fit_mvn_ar1_large_sample(p, rho, lo, hi):
    X = sample_mvn(np.zeros(p), ar1_covariance(p, rho), 5000, RngStream(50, p))
    est = fit_mvn_ar1(X)
    assert lo < est.rho < hi
    assert 0.95 < est.sigma2 < 1.05


@pytest.mark.parametrize("step", [0.01, 0.05])
def test_fit_mvn_ar1_is_locally_optimal(step):
    X = sample_mvn(np.zeros(5), ar1_covariance(5, 0.4), 500, RngStream(9))
    est = fit_mvn_ar1(X)
    best = ar1_profile_loglik(X, est.rho)
    assert ar1_profile_loglik(X, est.rho - step) <= best
    assert ar1_profile_loglik(X, est.rho + step) <= best


def test_fit_mvn_ar1_identical_columns_hit_boundary():
    x = np.random.default_rng(6).standard_normal(40)
    X = np.column_stack([x, x, x, x])
    try:
        est = fit_mvn_ar1(X)
    except DegenerateData:
        return
    assert est.at_boundary
    assert est.rho == pytest.approx(0.999, abs=1e-3)


@pytest.mark.parametrize("p", [1, 2])
def test_fit_mvn_full_repeated_point_is_singular(p):
    with pytest.raises(SingularCovariance):
        fit_mvn_full(np.ones((2, p)))


def test_fit_mvn_full_large_sample():
    S = ar1_covariance(4, 0.5, sigma2=1.5)
    mean, cov = fit_mvn_full(sample_mvn(np.full(4, 2.0), S, 10000, RngStream(60)))
    assert np.max(np.abs(cov - S)) < 0.05
    np.testing.assert_allclose(mean, 2.0, atol=0.05)


def test_fit_mvn_full_orthogonal_columns_give_diagonal():
    X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    _, cov = fit_mvn_full(X)
    np.testing.assert_allclose(cov, np.eye(2), atol=1e-15)
