import numpy as np
import pytest
import scipy.optimize
import scipy.special

from lcurve.errors import DataError, DimensionMismatch, DomainError, OneClassOnly
from lcurve.logistic import (Dataset, LogisticFit, _irls, classify, fit_logistic, fit_logistic_or_constant,
                             loocv_error, misclassification_rate, predict_prob, subsample_error)
from lcurve.utils_numerics import RngStream


def separable_1d(gap: float=5.0, per_side: int=25) -> Dataset:
    x = np.concatenate([-(gap + np.arange(per_side)), gap + np.arange(per_side)])
    return Dataset(x.reshape(-1, 1), (x > 0).astype(int))


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), [0, 1, 2])
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), [0, 1])
    with pytest.raises(DataError):
        Dataset([[0.0], [np.nan]], [0, 1])
    D = Dataset([[1.0], [2.0]], [0, 1], column_names=["x"])
    assert (D.n, D.p) == (2, 1)


def test_score_vanishes_at_unpenalized_fit(logistic_data):
    fit = fit_logistic(logistic_data, include_intercept=True)
    assert fit.converged
    assert fit.ridge_lambda_used == 0.0
    X = np.hstack([np.ones((logistic_data.n, 1)), logistic_data.features])
    score = X.T @ (logistic_data.labels - scipy.special.expit(X @ fit.beta))
    assert np.max(np.abs(score)) < 1e-6


def test_matches_direct_likelihood_maximization():
    X = np.array([[0.5, -1.0], [1.5, 0.3], [-0.7, 0.8], [2.0, 1.1], [-1.2, -0.4], [0.1, 0.9]])
    y = np.array([0, 1, 0, 1, 1, 0])
    fit = fit_logistic(Dataset(X, y), include_intercept=True)
    A = np.hstack([np.ones((6, 1)), X])

    def nll(beta):
        eta = A @ beta
        return np.sum(np.logaddexp(0.0, eta) - y * eta)

    ref = scipy.optimize.minimize(nll, np.zeros(3), method="BFGS", options={"gtol": 1e-10})
    np.testing.assert_allclose(fit.beta, ref.x, atol=1e-5)


def test_separation_triggers_ridge():
    fit = fit_logistic(separable_1d(gap=0.5), include_intercept=True)
    assert fit.ridge_lambda_used > 0
    assert fit.beta[1] > 0
    assert np.all(np.isfinite(fit.beta))


def test_larger_ridge_shrinks_coefficients():
    D = separable_1d()
    norms = [np.linalg.norm(_irls(D.features, D.labels.astype(float), lam, False)[0]) for lam in (1e-3, 1e-2, 1e-1)]
    assert norms[0] > norms[1] > norms[2]


def test_null_model_coefficients_near_zero():
    gen = np.random.default_rng(99)
    D = Dataset(gen.standard_normal((5000, 2)), gen.integers(0, 2, 5000))
    fit = fit_logistic(D, include_intercept=True)
    assert np.all(np.abs(fit.beta) < 0.1)


def test_one_class_only():
    D = Dataset([[0.1], [0.4], [0.9]], [1, 1, 1])
    fit = fit_logistic(D, include_intercept=True)
    assert fit.constant_class == 1
    np.testing.assert_array_equal(classify(fit, [[-5.0], [5.0]]), [1, 1])
    with pytest.raises(OneClassOnly) as info:
        fit_logistic(D, include_intercept=False)
    assert info.value.label == 1
    assert fit_logistic_or_constant(D, include_intercept=False).constant_class == 1


def test_classify_and_predict_prob():
    fit = LogisticFit(beta=np.array([1.0, 1.0]))
    assert classify(fit, [3.0, 4.0]) == 1
    assert predict_prob(fit, [3.0, 4.0]) == pytest.approx(1.0 / (1.0 + np.exp(-7.0)))
    boundary = LogisticFit(beta=np.array([1.0, -1.0]))
    assert classify(boundary, [2.0, 2.0]) == 0
    assert predict_prob(boundary, [2.0, 2.0]) == pytest.approx(0.5)
    huge_kappa = LogisticFit(beta=np.array([1.0, 1.0]), kappa=1e9)
    assert classify(huge_kappa, [1e3, 1e3]) == 0
    with pytest.raises(DimensionMismatch):
        classify(fit, [1.0, 2.0, 3.0])


def test_classify_invariant_to_joint_rescaling():
    gen = np.random.default_rng(1)
    x = gen.standard_normal((100, 3))
    fit = LogisticFit(beta=np.array([0.3, -1.0, 2.0]), kappa=0.4)
    scaled = LogisticFit(beta=fit.beta * 7.5, kappa=fit.kappa * 7.5)
    np.testing.assert_array_equal(classify(fit, x), classify(scaled, x))


def test_misclassification_rate(logistic_data):
    fit = fit_logistic(logistic_data)
    rate = misclassification_rate(fit, logistic_data)
    assert 0.0 <= rate < 0.5


def test_loocv_constant_labels_is_zero():
    D = Dataset(np.random.default_rng(0).standard_normal((10, 2)), np.ones(10))
    assert loocv_error(D, include_intercept=True) == 0.0


def test_loocv_null_data(null_data):
    assert 0.4 < loocv_error(null_data) < 0.6


def test_loocv_separable_is_zero():
    assert loocv_error(separable_1d()) == 0.0


def test_loocv_needs_three_rows():
    with pytest.raises(DataError):
        loocv_error(Dataset([[0.0], [1.0]], [0, 1]))


def test_subsample_error(null_data):
    constant = Dataset(null_data.features, np.zeros(null_data.n))
    assert subsample_error(constant, 50, 5, RngStream(1)) == 0.0
    first = subsample_error(null_data, 100, 20, RngStream(2))
    assert first == subsample_error(null_data, 100, 20, RngStream(2))
    assert 0.42 < subsample_error(null_data, 100, 200, RngStream(3)) < 0.58


@pytest.mark.parametrize("m_prime,B", [(1, 10), (199, 10), (100, 0)])
def test_subsample_error_domain(null_data, m_prime, B):
    with pytest.raises(DomainError):
        subsample_error(null_data, m_prime, B, RngStream(1))
