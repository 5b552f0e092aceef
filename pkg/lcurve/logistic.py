"""
Logistic regression by IRLS with ridge escalation on separation, the threshold rule
x'beta > kappa, and the two direct error estimators (LOOCV and subsampling).
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.special

from .errors import DataError, DimensionMismatch, DomainError, OneClassOnly
from .logger import logger
from .utils_numerics import RngStream

MAX_ITERATIONS = 50
SCORE_TOL = 1e-8
SEPARATION_NORM = 1e4
SEPARATION_DEVIANCE = 1e-6
RIDGE_LADDER = (1e-6, 1e-4, 1e-2)
MAX_STEP_HALVINGS = 20


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    column_names: Optional[list[str]] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim == 1:
            self.features = self.features.reshape(-1, 1)
        labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2 or labels.ndim != 1 or labels.shape[0] != self.features.shape[0]:
            raise DataError(f"Features {self.features.shape} and labels {labels.shape} do not line up.")
        if labels.shape[0] < 1:
            raise DataError("Dataset is empty.")
        if not np.all(np.isfinite(self.features)) or not np.all(np.isfinite(labels)):
            raise DataError("Dataset contains non-finite values.")
        if not np.all((labels == 0) | (labels == 1)):
            bad = sorted(set(labels[(labels != 0) & (labels != 1)].tolist()))[:5]
            raise DataError(f"Labels must be exactly 0 or 1; found {bad}.")
        self.labels = labels.astype(np.int8)
        if self.column_names is not None and len(self.column_names) != self.features.shape[1]:
            raise DataError(f"{len(self.column_names)} column names for {self.features.shape[1]} columns.")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> 'Dataset':
        return Dataset(self.features[rows], self.labels[rows], self.column_names)


@dataclass
class LogisticFit:
    beta: np.ndarray
    kappa: float = 0.0
    converged: bool = True
    ridge_lambda_used: float = 0.0
    iterations: int = 0
    include_intercept: bool = False
    # set when the rule is the constant-class fallback for single-label training data
    constant_class: Optional[int] = None
    deviance: float = field(default=float("nan"), repr=False)

    @property
    def p(self) -> int:
        return self.beta.shape[0] - (1 if self.include_intercept else 0)

    def linear_predictor(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.p:
            raise DimensionMismatch(f"Input has {x.shape[-1]} features, fit expects {self.p}.")
        if self.include_intercept:
            return self.beta[0] + x @ self.beta[1:]
        return x @ self.beta


def design_matrix(features: np.ndarray, include_intercept: bool) -> np.ndarray:
    if include_intercept:
        return np.hstack([np.ones((features.shape[0], 1)), features])
    return features


def _penalized_loglik(X, y, beta, penalty):
    eta = X @ beta
    # log(1 + e^eta) computed without overflow
    loglik = np.sum(y * eta - np.logaddexp(0.0, eta))
    return loglik - 0.5 * np.sum(penalty * beta * beta)


def _irls(X: np.ndarray, y: np.ndarray, lam: float, include_intercept: bool):
    n, k = X.shape
    penalty = np.full(k, lam)
    if include_intercept:
        penalty[0] = 0.0
    beta = np.zeros(k)
    loglik = _penalized_loglik(X, y, beta, penalty)
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        pi = scipy.special.expit(X @ beta)
        score = X.T @ (y - pi) - penalty * beta
        if np.max(np.abs(score)) < SCORE_TOL:
            converged = True
            iterations -= 1
            break
        w = pi * (1.0 - pi)
        hessian = (X * w[:, None]).T @ X + np.diag(penalty)
        try:
            step = np.linalg.solve(hessian, score)
        except np.linalg.LinAlgError:
            break
        # step-halving keeps every iterate an ascent step
        t = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            candidate = beta + t * step
            cand_loglik = _penalized_loglik(X, y, candidate, penalty)
            if np.isfinite(cand_loglik) and cand_loglik >= loglik - 1e-12 * (1.0 + abs(loglik)):
                break
            t *= 0.5
        else:
            break
        beta, loglik = candidate, cand_loglik
        if not np.all(np.isfinite(beta)):
            break
    else:
        pi = scipy.special.expit(X @ beta)
        score = X.T @ (y - pi) - penalty * beta
        converged = bool(np.max(np.abs(score)) < SCORE_TOL)
    eta = X @ beta
    deviance = float(2.0 * np.sum(np.logaddexp(0.0, eta) - y * eta))
    return beta, converged, iterations, deviance


def _looks_separated(beta, converged, deviance) -> bool:
    return (not converged
            or not np.all(np.isfinite(beta))
            or np.linalg.norm(beta) > SEPARATION_NORM
            or deviance < SEPARATION_DEVIANCE)


def constant_fit(label: int, p: int, include_intercept: bool, kappa: float=0.0) -> LogisticFit:
    beta = np.zeros(p + (1 if include_intercept else 0))
    return LogisticFit(beta=beta, kappa=kappa, converged=True, include_intercept=include_intercept,
                       constant_class=int(label), deviance=0.0)


def fit_logistic(D: Dataset, include_intercept: bool=True, kappa: float=0.0) -> LogisticFit:
    """
    Maximum likelihood logistic regression by Newton/IRLS.

    Iterates until the score's max-norm drops below 1e-8 or 50 iterations pass. When the
    fit looks separated, refits with a ridge penalty escalating through 1e-6, 1e-4, 1e-2.
    Single-label data yields the constant-class rule when an intercept is enabled and
    raises OneClassOnly otherwise.
    """
    if D.n < 2:
        raise DataError(f"Logistic fit needs at least 2 rows, got {D.n}.")
    y = D.labels.astype(float)
    if np.all(y == y[0]):
        label = int(y[0])
        if not include_intercept:
            raise OneClassOnly(f"All {D.n} labels equal {label}.", label=label)
        return constant_fit(label, D.p, include_intercept=True, kappa=kappa)
    X = design_matrix(D.features, include_intercept)
    beta, converged, iterations, deviance = _irls(X, y, 0.0, include_intercept)
    lam = 0.0
    if _looks_separated(beta, converged, deviance):
        for lam in RIDGE_LADDER:
            logger.debug(f"Separation suspected (|beta|={np.linalg.norm(beta):.3g}, deviance={deviance:.3g}); refitting with ridge {lam:g}.")
            beta, converged, iterations, deviance = _irls(X, y, lam, include_intercept)
            if converged and np.all(np.isfinite(beta)):
                break
    if not np.all(np.isfinite(beta)):
        raise DomainError("Logistic fit produced non-finite coefficients at every ridge level.")
    return LogisticFit(beta=beta, kappa=kappa, converged=converged, ridge_lambda_used=lam,
                       iterations=iterations, include_intercept=include_intercept, deviance=deviance)


def fit_logistic_or_constant(D: Dataset, include_intercept: bool=True, kappa: float=0.0) -> LogisticFit:
    try:
        return fit_logistic(D, include_intercept=include_intercept, kappa=kappa)
    except OneClassOnly as e:
        return constant_fit(e.label, D.p, include_intercept=include_intercept, kappa=kappa)


def predict_prob(fit: LogisticFit, x):
    return scipy.special.expit(fit.linear_predictor(x))


def classify(fit: LogisticFit, x):
    """1 iff x'beta > kappa; ties go to class 0."""
    eta = fit.linear_predictor(x)
    if fit.constant_class is not None:
        return np.full(np.shape(eta), fit.constant_class, dtype=np.int8)
    return (eta > fit.kappa).astype(np.int8)


def misclassification_rate(fit: LogisticFit, D: Dataset) -> float:
    return float(np.mean(classify(fit, D.features) != D.labels))


def loocv_error(D: Dataset, include_intercept: bool=True, kappa: float=0.0) -> float:
    """Leave-one-out misclassification rate, an unbiased estimate of tau(n-1)."""
    if D.n < 3:
        raise DataError(f"LOOCV needs at least 3 rows, got {D.n}.")
    mask = np.ones(D.n, dtype=bool)
    errors = 0
    for i in range(D.n):
        mask[i] = False
        fit = fit_logistic_or_constant(D.subset(mask), include_intercept=include_intercept, kappa=kappa)
        mask[i] = True
        errors += int(classify(fit, D.features[i]) != D.labels[i])
    return errors / D.n


def subsample_error(D: Dataset, m_prime: int, B: int, rng: RngStream,
                    include_intercept: bool=True, kappa: float=0.0) -> float:
    """
    Mean misclassification over B random splits: fit on m_prime rows drawn without
    replacement, evaluate on the complementary n - m_prime rows.
    """
    if not 2 <= m_prime <= D.n - 2:
        raise DomainError(f"Subsample size must satisfy 2 <= m' <= n-2 = {D.n - 2}, got {m_prime}.")
    if B < 1:
        raise DomainError(f"Number of subsamples must be >= 1, got {B}.")
    total = 0.0
    for b in range(B):
        perm = rng.child(b).generator().permutation(D.n)
        fit = fit_logistic_or_constant(D.subset(perm[:m_prime]), include_intercept=include_intercept, kappa=kappa)
        total += misclassification_rate(fit, D.subset(perm[m_prime:]))
    return total / B
