"""
Dense linear algebra, seeded sampling and distribution helpers shared by every estimator.

Covariance matrices are plain symmetric numpy arrays; `as_sym_matrix` is the single
place they are validated.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.special

from .errors import DegenerateData, DomainError, NotPositiveDefinite, SingularCovariance
from .logger import logger

PIVOT_FLOOR = 1e-12
SYMMETRY_RTOL = 1e-12
RHO_BOUND = 0.999
RHO_XATOL = 1e-5
SINGULAR_RATIO = 1e-10


@dataclass(frozen=True)
class RngStream:
    """
    Reproducible, splittable random stream keyed by (master_seed, stream_index, path).

    Streams with different keys are statistically independent; equal keys always
    reproduce the same sequence. `child` derives nested substreams, so work can be
    split across threads without depending on execution order.
    """
    master_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = ()

    def child(self, *keys: int) -> 'RngStream':
        return RngStream(self.master_seed, self.stream_index, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_index,) + self.path)
        return np.random.Generator(np.random.Philox(seq))


def as_sym_matrix(values) -> np.ndarray:
    S = np.array(values, dtype=float, copy=True)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 1:
        raise DomainError(f"Expected a non-empty square matrix, got shape {S.shape}.")
    scale = max(np.max(np.abs(S)), 1.0)
    if np.max(np.abs(S - S.T)) > SYMMETRY_RTOL * scale:
        raise DomainError("Matrix is not symmetric.")
    # exact symmetry from here on
    return (S + S.T) / 2.0


def ar1_covariance(p: int, r: float, sigma2: float=1.0) -> np.ndarray:
    """Sigma_ij = sigma2 * r^|i-j|."""
    return sigma2 * scipy.linalg.toeplitz(r ** np.arange(p, dtype=float))


def ridge_jitter(S: np.ndarray) -> np.ndarray:
    p = S.shape[0]
    trace = float(np.trace(S))
    eps = 1e-8 * trace / p if trace > 0 else 1e-8
    return S + eps * np.eye(p)


def cholesky(S) -> np.ndarray:
    S = as_sym_matrix(S)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {e}")
    pivots = np.diag(L) ** 2
    if np.min(pivots) <= PIVOT_FLOOR:
        raise NotPositiveDefinite(f"Cholesky pivot {np.min(pivots):.3e} <= {PIVOT_FLOOR}; covariance is degenerate.")
    return L


def sample_mvn(mean, cov, m: int, rng: RngStream) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    L = cholesky(cov)
    if mean.shape != (L.shape[0],):
        raise DomainError(f"Mean has shape {mean.shape}, covariance is {L.shape[0]}x{L.shape[0]}.")
    if m < 1:
        raise DomainError(f"Sample count must be >= 1, got {m}.")
    z = rng.generator().standard_normal((m, L.shape[0]))
    return mean + z @ L.T


def std_normal_cdf(x):
    return scipy.special.ndtr(x)


def std_normal_quantile(q):
    q_arr = np.asarray(q, dtype=float)
    if np.any((q_arr <= 0.0) | (q_arr >= 1.0)) or np.any(~np.isfinite(q_arr)):
        raise DomainError("Normal quantile is only defined for 0 < q < 1.")
    return scipy.special.ndtri(q)


class Ar1Estimate(NamedTuple):
    mean: np.ndarray
    sigma2: float
    rho: float
    at_boundary: bool = False


class _Ar1Moments(NamedTuple):
    n: int
    p: int
    total: float  # sum of all z_ij^2
    ends: float   # sum over rows of z_i1^2 + z_ip^2
    lag: float    # sum over rows of z_ij * z_i(j+1)


def _ar1_moments(Z: np.ndarray) -> _Ar1Moments:
    n, p = Z.shape
    return _Ar1Moments(n=n, p=p,
                       total=float(np.sum(Z * Z)),
                       ends=float(np.sum(Z[:, 0] ** 2) + np.sum(Z[:, -1] ** 2)),
                       lag=float(np.sum(Z[:, :-1] * Z[:, 1:])))


def _ar1_sigma2(mom: _Ar1Moments, rho: float) -> float:
    # AR(1) correlation inverse is tridiagonal, so the quadratic form needs only three moments
    quad = (mom.total - 2.0 * rho * mom.lag + rho * rho * (mom.total - mom.ends)) / (1.0 - rho * rho)
    return quad / (mom.n * mom.p)


def _ar1_profile_loglik(mom: _Ar1Moments, rho: float) -> float:
    sigma2 = _ar1_sigma2(mom, rho)
    if sigma2 <= 0:
        return -np.inf
    return -0.5 * mom.n * (mom.p * np.log(sigma2) + (mom.p - 1) * np.log(1.0 - rho * rho))


def ar1_profile_loglik(X, rho: float) -> float:
    """Gaussian log-likelihood (up to a constant) with mu and sigma2 profiled out."""
    X = np.asarray(X, dtype=float)
    return _ar1_profile_loglik(_ar1_moments(X - X.mean(axis=0)), rho)


def fit_mvn_ar1(X) -> Ar1Estimate:
    """
    Maximum likelihood for N(mu, sigma2 * rho^|i-j|).

    mu is the column mean, sigma2 is profiled out in closed form for each rho, and
    rho is found by a bounded scalar search over (-0.999, 0.999).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 3 or X.shape[1] < 2:
        raise DegenerateData(f"AR(1) fit needs n >= 3 rows and p >= 2 columns, got shape {X.shape}.")
    mean = X.mean(axis=0)
    mom = _ar1_moments(X - mean)
    if mom.total / (mom.n * mom.p) < 1e-12:
        raise DegenerateData("Pooled variance is below 1e-12; columns are constant.")
    res = scipy.optimize.minimize_scalar(lambda rho: -_ar1_profile_loglik(mom, rho),
                                         bounds=(-RHO_BOUND, RHO_BOUND), method="bounded",
                                         options={"xatol": RHO_XATOL})
    rho = float(res.x)
    at_boundary = RHO_BOUND - abs(rho) < 1e-3
    if at_boundary:
        logger.warning(f"AR(1) correlation estimate {rho:.5f} sits at the search boundary.")
    return Ar1Estimate(mean=mean, sigma2=_ar1_sigma2(mom, rho), rho=rho, at_boundary=at_boundary)


def fit_mvn_full(X) -> tuple[np.ndarray, np.ndarray]:
    """Column means and plug-in covariance (divisor n)."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n <= p:
        raise SingularCovariance(f"Unrestricted covariance needs n > p, got n={n}, p={p}.")
    mean = X.mean(axis=0)
    Z = X - mean
    cov = as_sym_matrix(Z.T @ Z / n)
    check_nonsingular(cov)
    return mean, cov


def check_nonsingular(cov: np.ndarray):
    eig = np.linalg.eigvalsh(cov)
    if eig[-1] <= 0 or eig[0] < SINGULAR_RATIO * eig[-1]:
        raise SingularCovariance(f"Covariance is singular (eigenvalue range [{eig[0]:.3e}, {eig[-1]:.3e}]).")


def nearest_correlation(C: np.ndarray, floor: float=1e-6) -> tuple[np.ndarray, bool]:
    """Clip eigenvalues at `floor` and rescale to unit diagonal. Returns (matrix, projected)."""
    C = as_sym_matrix(C)
    eig, vec = np.linalg.eigh(C)
    projected = bool(eig[0] < floor)
    if projected:
        C = (vec * np.maximum(eig, floor)) @ vec.T
        d = np.sqrt(np.diag(C))
        C = C / np.outer(d, d)
        C = (C + C.T) / 2.0
    np.fill_diagonal(C, 1.0)
    return C, projected
