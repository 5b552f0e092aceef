"""
Subsampling-and-extrapolation: direct subsample error estimates at sizes m' < n, fit to
tau(m) = a + b * m^-alpha with b, alpha >= 0, then evaluated at the target sizes.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.optimize

from .curves import LearningCurve, Provenance
from .errors import DomainError, InsufficientPoints
from .logger import logger
from .logistic import Dataset, loocv_error, subsample_error
from .utils_numerics import RngStream

ALPHA_GRID = np.round(np.arange(0, 201) * 0.01, 2)
DEFAULT_SUBEX_B = 100
DEFAULT_FRACTIONS = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass
class PowerLawFit:
    a: float
    b: float
    alpha: float
    sse: float

    def evaluate(self, m) -> np.ndarray:
        return self.a + self.b * np.power(np.asarray(m, dtype=float), -self.alpha)


def _solve_ab(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    """Weighted least squares of y on x with the slope clipped at zero."""
    sw = w.sum()
    ym = float(np.dot(w, y) / sw)
    xm = float(np.dot(w, x) / sw)
    sxx = float(np.dot(w, (x - xm) ** 2))
    b = float(np.dot(w, (x - xm) * (y - ym)) / sxx) if sxx > 1e-300 else 0.0
    if b <= 0.0:
        b, a = 0.0, ym
    else:
        a = ym - b * xm
    sse = float(np.dot(w, (y - a - b * x) ** 2))
    return a, b, sse


def fit_power_law(points: Sequence[tuple[int, float, float]]) -> PowerLawFit:
    """
    Weighted NLS fit of a + b*m^-alpha over a in R, b >= 0, 0 <= alpha <= 2.

    (a, b) are solved exactly for each alpha on a 0.01 grid; alpha is then refined
    by a bounded scalar search around the best grid point.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise DomainError("Points must be (m, tau) or (m, tau, weight) triples.")
    m, y = pts[:, 0], pts[:, 1]
    w = pts[:, 2] if pts.shape[1] == 3 else np.ones_like(m)
    if np.any(w <= 0) or np.any(m <= 0):
        raise DomainError("Sizes and weights must be positive.")
    if np.unique(m).size < 3:
        raise InsufficientPoints(f"Power-law fit needs >= 3 distinct sizes, got {np.unique(m).size}.")

    def solve(alpha: float) -> tuple[float, float, float]:
        if alpha == 0.0:
            # m^0 is collinear with the intercept
            ym = float(np.dot(w, y) / w.sum())
            return ym, 0.0, float(np.dot(w, (y - ym) ** 2))
        return _solve_ab(np.power(m, -alpha), y, w)

    best_alpha, (best_a, best_b, best_sse) = 0.0, solve(0.0)
    for alpha in ALPHA_GRID[1:]:
        a, b, sse = solve(float(alpha))
        if sse < best_sse:
            best_alpha, best_a, best_b, best_sse = float(alpha), a, b, sse
    if best_b > 0.0:
        lo, hi = max(best_alpha - 0.01, 0.0), min(best_alpha + 0.01, float(ALPHA_GRID[-1]))
        res = scipy.optimize.minimize_scalar(lambda al: solve(al)[2], bounds=(lo, hi), method="bounded",
                                             options={"xatol": 1e-8})
        a, b, sse = solve(float(res.x))
        if sse < best_sse:
            best_alpha, best_a, best_b, best_sse = float(res.x), a, b, sse
    return PowerLawFit(a=best_a, b=best_b, alpha=best_alpha, sse=best_sse)


@dataclass
class SubexCurve(LearningCurve):
    fit: Optional[PowerLawFit] = None
    # (m', subsample error) pairs the power law was fitted to
    direct: Optional[np.ndarray] = None


def default_schedule(n: int) -> list[int]:
    # round first so 0.7*50 stays 35
    sizes = {min(max(math.ceil(round(f * n, 9)), 2), n - 2) for f in DEFAULT_FRACTIONS}
    return sorted(sizes)


def subex_curve(D: Dataset, target_sizes: Sequence[int], rng: RngStream, schedule: Optional[Sequence[int]]=None,
                B: int=DEFAULT_SUBEX_B, include_intercept: bool=True, kappa: float=0.0,
                include_cv_anchor: bool=False) -> LearningCurve:
    """
    SUBEX learning curve at `target_sizes`.

    Each scheduled size m' gets its own substream keyed by m', so the schedule order
    does not affect the estimates. With `include_cv_anchor` the LOOCV error is added
    as the point (n-1, tau_CV) before fitting. Stored values are the raw power-law evaluation.
    """
    schedule = sorted(set(int(s) for s in schedule)) if schedule else default_schedule(D.n)
    bad = [s for s in schedule if not 2 <= s <= D.n - 2]
    if bad:
        raise DomainError(f"SUBEX schedule sizes {bad} violate 2 <= m' <= n-2 = {D.n - 2}.")
    points = [(s, subsample_error(D, s, B, rng.child(s), include_intercept=include_intercept, kappa=kappa), 1.0)
              for s in schedule]
    if include_cv_anchor:
        points.append((D.n - 1, loocv_error(D, include_intercept=include_intercept, kappa=kappa), 1.0))
    fit = fit_power_law(points)
    logger.debug(f"SUBEX fit a={fit.a:.4f} b={fit.b:.4f} alpha={fit.alpha:.4f} sse={fit.sse:.3e}")
    sizes = np.array(sorted(set(int(m) for m in target_sizes)))
    return SubexCurve(sizes=sizes, values=fit.evaluate(sizes), provenance=Provenance.SUBEX, fit=fit,
                      direct=np.asarray(points)[:, :2])
