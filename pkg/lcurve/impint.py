"""
Imputation estimators: IMPINT synthesizes training and test sets of any size from a fitted
covariate model and a fitted label model; BRIE shifts the smoothed IMPINT curve so that
it meets the leave-one-out estimate at n-1.
"""
from typing import Optional, Sequence

import numpy as np
import scipy.special

from .covariates import CovariateModel, sample_covariates
from .curves import Anchor, LearningCurve, Provenance, monotone_smooth
from .errors import DomainError
from .logger import logger
from .logistic import Dataset, classify, fit_logistic_or_constant, loocv_error
from .utils_numerics import RngStream
from .utils_parallel import map_ordered

DEFAULT_B = 1000
DEFAULT_N = 5000


def _linear_predictor(beta: np.ndarray, X: np.ndarray, include_intercept: bool) -> np.ndarray:
    if include_intercept:
        return beta[0] + X @ beta[1:]
    return X @ beta


def synthetic_dataset(model: CovariateModel, beta: np.ndarray, m: int, rng: RngStream,
                      include_intercept: bool=False, constant_class: Optional[int]=None) -> Dataset:
    """m feature rows from `model`, labels drawn as Bernoulli(expit(x'beta))."""
    X = sample_covariates(model, m, rng.child(0))
    if constant_class is not None:
        y = np.full(m, constant_class, dtype=np.int8)
    else:
        pi = scipy.special.expit(_linear_predictor(beta, X, include_intercept))
        y = (rng.child(1).generator().random(m) < pi).astype(np.int8)
    return Dataset(X, y)


def impint_tau(model: CovariateModel, beta_hat, kappa: float, m: int, B: int, N: int, rng: RngStream,
               include_intercept: bool=False, constant_class: Optional[int]=None) -> float:
    """
    IMPINT estimate of tau(m).

    One synthetic test set of size N is shared by all B synthetic training sets of size m.
    Every training set is fitted with the constant-class fallback, and the misclassification
    indicators are averaged over all B*N (training set, test point) pairs in draw order.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    p = model.dim
    if beta_hat.shape != (p + (1 if include_intercept else 0),):
        raise DomainError(f"Coefficient vector has shape {beta_hat.shape} for a {p}-dimensional model.")
    if m < p + 2:
        raise DomainError(f"IMPINT needs m >= p + 2 = {p + 2}, got m={m}.")
    if B < 1 or N < 1:
        raise DomainError(f"B and N must be >= 1, got B={B}, N={N}.")
    test = synthetic_dataset(model, beta_hat, N, rng.child(0), include_intercept, constant_class)
    errors = 0
    for b in range(B):
        train = synthetic_dataset(model, beta_hat, m, rng.child(b + 1), include_intercept, constant_class)
        fit = fit_logistic_or_constant(train, include_intercept=include_intercept, kappa=kappa)
        errors += int(np.count_nonzero(classify(fit, test.features) != test.labels))
    return errors / (B * N)


def impint_curve(D: Dataset, model: CovariateModel, sizes: Sequence[int], B: int, N: int, rng: RngStream,
                 kappa: float=0.0, include_intercept: bool=True, threads: int=1) -> LearningCurve:
    """Raw IMPINT curve from the logistic fit to D; each size gets the substream keyed by its value."""
    sizes = sorted(set(int(m) for m in sizes))
    fit = fit_logistic_or_constant(D, include_intercept=include_intercept, kappa=kappa)
    if fit.constant_class is not None:
        logger.warning(f"All labels equal {fit.constant_class}; synthetic labels are constant.")

    def tau(m: int) -> float:
        return impint_tau(model, fit.beta, kappa, m, B, N, rng.child(m), include_intercept=include_intercept,
                          constant_class=fit.constant_class)

    values = map_ordered(tau, sizes, threads=threads, desc="IMPINT sizes" if threads > 1 else None)
    return LearningCurve(sizes=np.array(sizes), values=np.array(values), provenance=Provenance.IMPINT_RAW)


def brie_curve(D: Dataset, model: CovariateModel, target_sizes: Sequence[int], B: int, N: int, rng: RngStream,
               kappa: float=0.0, include_intercept: bool=True, threads: int=1) -> LearningCurve:
    """
    BRIE curve at target_sizes plus the anchor size n-1.

    The raw IMPINT curve is smoothed to be non-increasing, then shifted by
    tau_CV(n-1) - smoothed(n-1). The returned curve keeps the smoothed curve in `base`
    (whose own `base` is the raw curve) and the anchor in `anchor`.
    """
    anchor_size = D.n - 1
    sizes = sorted(set(int(m) for m in target_sizes) | {anchor_size})
    if sizes[0] < model.dim + 2:
        raise DomainError(f"BRIE sizes must be >= p + 2 = {model.dim + 2}, got {sizes[0]}.")
    smoothed = monotone_smooth(impint_curve(D, model, sizes, B, N, rng, kappa=kappa,
                                            include_intercept=include_intercept, threads=threads))
    cv = loocv_error(D, include_intercept=include_intercept, kappa=kappa)
    offset = cv - smoothed.value_at(anchor_size).value
    brie = smoothed.shifted(offset, Provenance.BRIE, anchor=Anchor(anchor_size, cv))
    # the shift must reproduce the anchor exactly
    brie.values[sizes.index(anchor_size)] = cv
    _, clamped = brie.reported()
    if np.any(clamped):
        logger.warning(f"BRIE values at sizes {brie.sizes[clamped].tolist()} fall outside [0, 1] and are clamped when reported.")
    logger.debug(f"BRIE anchor tau_CV({anchor_size})={cv:.4f}, offset={offset:+.4f}")
    return brie
