"""
Fitted, sampleable models of the covariate distribution p_X.

Four kinds are offered: AR(1)-structured normal, unrestricted normal, a Gaussian
mixture stratified on binary columns, and a Gaussian copula with empirical marginals.
The plain empirical distribution is not a kind: imputing from it puts
training points into the test population and biases the learning curve downward.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.stats

from .errors import DataError, DegenerateData, EmptyStratum, SingularCovariance
from .logger import logger
from .utils_numerics import (RngStream, ar1_covariance, as_sym_matrix, check_nonsingular, cholesky,
                             fit_mvn_ar1, fit_mvn_full, nearest_correlation, ridge_jitter, sample_mvn,
                             std_normal_cdf, std_normal_quantile)


class ModelKind:
    MVN_AR1 = "mvn-ar1"
    MVN_FULL = "mvn-full"
    GAUSSIAN_MIXTURE = "gm"
    GAUSSIAN_COPULA = "gc"

    LIST = [MVN_AR1, MVN_FULL, GAUSSIAN_MIXTURE, GAUSSIAN_COPULA]


class CovariateModel(ABC):
    kind: str = None

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @abstractmethod
    def sample(self, m: int, rng: RngStream) -> np.ndarray:
        pass


class MvnAr1Model(CovariateModel):
    kind = ModelKind.MVN_AR1

    def __init__(self, mean: np.ndarray, sigma2: float, rho: float):
        self.mean = np.asarray(mean, dtype=float)
        self.sigma2 = float(sigma2)
        self.rho = float(rho)
        self.cov = ar1_covariance(self.mean.shape[0], self.rho, self.sigma2)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, m: int, rng: RngStream) -> np.ndarray:
        return sample_mvn(self.mean, self.cov, m, rng)


class MvnFullModel(CovariateModel):
    kind = ModelKind.MVN_FULL

    def __init__(self, mean: np.ndarray, cov: np.ndarray):
        self.mean = np.asarray(mean, dtype=float)
        self.cov = as_sym_matrix(cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, m: int, rng: RngStream) -> np.ndarray:
        return sample_mvn(self.mean, self.cov, m, rng)


@dataclass
class MixtureStratification:
    binary_column_indices: list[int]
    stratum_labels: np.ndarray    # one row per kept binary pattern
    stratum_means: np.ndarray     # one row per pattern, non-binary columns only
    pooled_cov: Optional[np.ndarray]
    weights: np.ndarray


class GaussianMixtureModel(CovariateModel):
    kind = ModelKind.GAUSSIAN_MIXTURE

    def __init__(self, strata: MixtureStratification, dim: int):
        self.strata = strata
        self._dim = dim
        self.binary_columns = np.asarray(strata.binary_column_indices, dtype=int)
        self.continuous_columns = np.setdiff1d(np.arange(dim), self.binary_columns)
        self._chol = cholesky(strata.pooled_cov) if strata.pooled_cov is not None else None

    @property
    def dim(self) -> int:
        return self._dim

    def sample(self, m: int, rng: RngStream) -> np.ndarray:
        gen = rng.generator()
        component = gen.choice(len(self.strata.weights), size=m, p=self.strata.weights)
        X = np.empty((m, self._dim))
        X[:, self.binary_columns] = self.strata.stratum_labels[component]
        if self._chol is not None:
            z = gen.standard_normal((m, self.continuous_columns.shape[0]))
            X[:, self.continuous_columns] = self.strata.stratum_means[component] + z @ self._chol.T
        return X


class GaussianCopulaModel(CovariateModel):
    kind = ModelKind.GAUSSIAN_COPULA

    def __init__(self, sorted_columns: np.ndarray, latent_corr: np.ndarray):
        # column j holds the training order statistics of feature j
        self.sorted_columns = np.asarray(sorted_columns, dtype=float)
        self.latent_corr = latent_corr

    @property
    def dim(self) -> int:
        return self.sorted_columns.shape[1]

    def sample(self, m: int, rng: RngStream) -> np.ndarray:
        n, p = self.sorted_columns.shape
        z = sample_mvn(np.zeros(p), self.latent_corr, m, rng)
        u = std_normal_cdf(z)
        # left-continuous inverse ECDF: the ceil(u*n)-th order statistic
        idx = np.clip(np.ceil(u * n).astype(int), 1, n) - 1
        return np.take_along_axis(self.sorted_columns, idx, axis=0)


def normal_scores(X: np.ndarray) -> np.ndarray:
    """Phi^-1(rank / (n+1)) per column, average ranks for ties."""
    n = X.shape[0]
    ranks = scipy.stats.rankdata(X, method="average", axis=0)
    return std_normal_quantile(ranks / (n + 1.0))


def _jittered_if_singular(cov: np.ndarray, what: str) -> np.ndarray:
    try:
        check_nonsingular(cov)
        return cov
    except SingularCovariance as e:
        logger.warning(f"{what}: {e} Adding ridge jitter to the diagonal.")
        cov = ridge_jitter(cov)
        check_nonsingular(cov)
        return cov


def _fit_mvn_full(X: np.ndarray) -> MvnFullModel:
    try:
        mean, cov = fit_mvn_full(X)
    except SingularCovariance:
        if X.shape[0] <= X.shape[1]:
            raise
        mean = X.mean(axis=0)
        Z = X - mean
        cov = _jittered_if_singular(as_sym_matrix(Z.T @ Z / X.shape[0]), "Unrestricted normal fit")
    return MvnFullModel(mean, cov)


def _fit_gaussian_mixture(X: np.ndarray, binary_columns: Optional[list[int]]) -> GaussianMixtureModel:
    if not binary_columns:
        raise DataError("Gaussian mixture needs at least one binary column to stratify on.")
    n, p = X.shape
    bin_idx = np.asarray(sorted(set(int(c) for c in binary_columns)), dtype=int)
    if bin_idx[0] < 0 or bin_idx[-1] >= p:
        raise DataError(f"Binary column indices {bin_idx.tolist()} out of range for {p} columns.")
    B = X[:, bin_idx]
    if not np.all((B == 0) | (B == 1)):
        raise DataError(f"Columns {bin_idx.tolist()} are not all 0/1-valued.")
    cont_idx = np.setdiff1d(np.arange(p), bin_idx)
    patterns, inverse, counts = np.unique(B, axis=0, return_inverse=True, return_counts=True)
    inverse = np.asarray(inverse).reshape(-1)
    keep = counts >= 2
    for pattern, count in zip(patterns[~keep], counts[~keep]):
        logger.warning(f"Binary pattern {pattern.astype(int).tolist()} has {count} row(s); dropping it from the mixture.")
    if not np.any(keep):
        raise EmptyStratum("Every binary pattern has fewer than 2 rows; the mixture is undefined.")
    kept = np.flatnonzero(keep)
    rows = np.isin(inverse, kept)
    C = X[rows][:, cont_idx]
    labels = inverse[rows]
    means = np.vstack([C[labels == k].mean(axis=0) for k in kept]) if cont_idx.size else np.zeros((kept.size, 0))
    pooled = None
    if cont_idx.size:
        # within-stratum centered, divisor = rows kept
        centered = C - means[np.searchsorted(kept, labels)]
        pooled = _jittered_if_singular(as_sym_matrix(centered.T @ centered / C.shape[0]), "Gaussian mixture pooled covariance")
    weights = counts[kept] / counts[kept].sum()
    strata = MixtureStratification(binary_column_indices=bin_idx.tolist(), stratum_labels=patterns[kept].astype(float),
                                   stratum_means=means, pooled_cov=pooled, weights=weights)
    return GaussianMixtureModel(strata, dim=p)


def _fit_gaussian_copula(X: np.ndarray) -> GaussianCopulaModel:
    n, p = X.shape
    if n < 2:
        raise DegenerateData("Gaussian copula needs at least 2 rows.")
    scores = normal_scores(X)
    centered = scores - scores.mean(axis=0)
    sd = np.sqrt(np.mean(centered ** 2, axis=0))
    constant = sd < 1e-12
    sd[constant] = 1.0
    corr = (centered.T @ centered / n) / np.outer(sd, sd)
    # constant columns carry no dependence
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    corr, projected = nearest_correlation(corr)
    if projected:
        logger.warning("Copula latent correlation was not positive definite; projected with eigenvalue floor 1e-6.")
    return GaussianCopulaModel(np.sort(X, axis=0), corr)


def fit_covariate_model(kind: str, X, binary_columns: Optional[list[int]]=None) -> CovariateModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"Covariate matrix must be 2-dimensional, got shape {X.shape}.")
    if kind == ModelKind.MVN_AR1:
        est = fit_mvn_ar1(X)
        return MvnAr1Model(est.mean, est.sigma2, est.rho)
    elif kind == ModelKind.MVN_FULL:
        return _fit_mvn_full(X)
    elif kind == ModelKind.GAUSSIAN_MIXTURE:
        return _fit_gaussian_mixture(X, binary_columns)
    elif kind == ModelKind.GAUSSIAN_COPULA:
        return _fit_gaussian_copula(X)
    raise DataError(f"Unknown covariate model '{kind}'; expected one of {ModelKind.LIST}.")


def sample_covariates(model: CovariateModel, m: int, rng: RngStream) -> np.ndarray:
    if m < 1:
        raise DataError(f"Sample count must be >= 1, got {m}.")
    return model.sample(m, rng)
