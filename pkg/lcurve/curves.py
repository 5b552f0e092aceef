from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.optimize

from .errors import DomainError, OutOfRange
from .logger import logger


class Provenance:
    IMPINT_RAW = "impint-raw"
    IMPINT_SMOOTHED = "impint-smoothed"
    BRIE = "brie"
    SUBEX = "subex"
    ORACLE = "oracle"

    LIST = [IMPINT_RAW, IMPINT_SMOOTHED, BRIE, SUBEX, ORACLE]
    MONOTONE = [IMPINT_SMOOTHED, BRIE, SUBEX]
    # values that may leave [0, 1] before reporting
    UNBOUNDED = [BRIE, SUBEX]


class Anchor(NamedTuple):
    size: int
    cv_error: float


class DeltaEstimate(NamedTuple):
    value: float
    interpolated: bool = False


@dataclass
class LearningCurve:
    """
    Error estimates at increasing training-set sizes, tagged with the estimator that made them.

    Brie curves keep the pre-shift smoothed curve in `base` and the LOOCV anchor in `anchor`;
    smoothed curves keep their raw input in `base`.
    """
    sizes: np.ndarray
    values: np.ndarray
    provenance: str
    std_errors: Optional[np.ndarray] = None
    anchor: Optional[Anchor] = None
    base: Optional['LearningCurve'] = field(default=None, repr=False)
    offset: float = 0.0

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.provenance not in Provenance.LIST:
            raise DomainError(f"Unknown provenance '{self.provenance}'.")
        if self.sizes.ndim != 1 or self.sizes.shape != self.values.shape or self.sizes.size == 0:
            raise DomainError("A learning curve needs matching, non-empty size and value vectors.")
        if np.any(np.diff(self.sizes) <= 0):
            raise DomainError(f"Curve sizes must be strictly increasing, got {self.sizes.tolist()}.")
        if self.provenance in Provenance.MONOTONE and np.any(np.diff(self.values) > 1e-12):
            raise DomainError(f"A {self.provenance} curve must be non-increasing.")
        if self.provenance not in Provenance.UNBOUNDED and np.any((self.values < 0) | (self.values > 1)):
            raise DomainError(f"A {self.provenance} curve must lie in [0, 1].")
        if self.std_errors is not None:
            self.std_errors = np.asarray(self.std_errors, dtype=float)

    def __len__(self):
        return self.sizes.size

    def value_at(self, m: int) -> DeltaEstimate:
        """Curve value at m; linear between estimated sizes, never extrapolated."""
        if m < self.sizes[0] or m > self.sizes[-1]:
            raise OutOfRange(f"Size {m} is outside the estimated range [{self.sizes[0]}, {self.sizes[-1]}].")
        hit = np.flatnonzero(self.sizes == m)
        if hit.size:
            return DeltaEstimate(float(self.values[hit[0]]), False)
        return DeltaEstimate(float(np.interp(m, self.sizes, self.values)), True)

    def reported(self) -> tuple[np.ndarray, np.ndarray]:
        """Values clamped to [0, 1], plus a mask of the entries that were clamped."""
        clamped = np.clip(self.values, 0.0, 1.0)
        return clamped, clamped != self.values

    def shifted(self, offset: float, provenance: str, anchor: Optional[Anchor]=None) -> 'LearningCurve':
        return LearningCurve(sizes=self.sizes.copy(), values=self.values + offset, provenance=provenance,
                             anchor=anchor, base=self, offset=offset)


def monotone_smooth(curve: LearningCurve, weights=None) -> LearningCurve:
    """
    Weighted antitonic least squares (pool-adjacent-violators): the non-increasing f
    minimizing sum w_i (v_i - f_i)^2. Preserves the weighted mean of the values.
    """
    if weights is None:
        weights = np.ones(len(curve))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != curve.values.shape or np.any(weights <= 0):
        raise DomainError("Smoothing weights must be positive, one per curve point.")
    fitted = scipy.optimize.isotonic_regression(curve.values, weights=weights, increasing=False).x
    return LearningCurve(sizes=curve.sizes.copy(), values=fitted, provenance=Provenance.IMPINT_SMOOTHED, base=curve)


def delta_estimate(curve: LearningCurve, n: int, m: int) -> DeltaEstimate:
    """
    delta(n, m) = tau(n) - tau(m), the expected error improvement from growing n to m.

    On a Brie curve the anchor shift cancels, so the increment is read from the
    underlying smoothed IMPINT curve and matches it bit for bit.
    """
    if curve.provenance == Provenance.BRIE and curve.base is not None:
        curve = curve.base
    at_n = curve.value_at(n)
    at_m = curve.value_at(m)
    interpolated = at_n.interpolated or at_m.interpolated
    if interpolated:
        logger.warning(f"delta({n}, {m}) uses linear interpolation between estimated sizes.")
    return DeltaEstimate(at_n.value - at_m.value, interpolated)
