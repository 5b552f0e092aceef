import itertools

import numpy as np
import pytest

from lcurve.curves import Anchor, LearningCurve, Provenance, delta_estimate, monotone_smooth
from lcurve.errors import DomainError, OutOfRange

GRID = np.round(np.arange(11) * 0.1, 1)
CHUNK = 10000


def raw(values, sizes=None):
    sizes = sizes if sizes is not None else 10 * (np.arange(len(values)) + 1)
    return LearningCurve(sizes=sizes, values=values, provenance=Provenance.IMPINT_RAW)


def grid_inputs(length: int) -> np.ndarray:
    """Every length-`length` vector over GRID, one per row."""
    return GRID[np.indices((GRID.size,) * length).reshape(length, -1).T]


def brute_force_antitonic(values, weights) -> np.ndarray:
    """
    Best non-increasing fit for each row of `values`, by enumerating every split into
    contiguous blocks. The block partitions are built once and applied to all rows.
    """
    V = np.atleast_2d(np.asarray(values, dtype=float))
    w = np.asarray(weights, dtype=float)
    n = V.shape[1]
    averagers = []
    for cuts in itertools.product([False, True], repeat=n - 1):
        bounds = [0] + [i + 1 for i, cut in enumerate(cuts) if cut] + [n]
        A = np.zeros((n, n))
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            A[lo:hi, lo:hi] = w[lo:hi] / w[lo:hi].sum()
        averagers.append(A)
    A = np.stack(averagers)                              # (partitions, n, n)
    best = np.empty_like(V)
    for start in range(0, V.shape[0], CHUNK):
        block = V[start:start + CHUNK]
        fitted = np.einsum("pij,kj->kpi", A, block)      # (rows, partitions, n)
        sse = np.sum(w * (block[:, None, :] - fitted) ** 2, axis=2)
        sse[np.any(np.diff(fitted, axis=2) > 1e-12, axis=2)] = np.inf
        best[start:start + CHUNK] = fitted[np.arange(block.shape[0]), np.argmin(sse, axis=1)]
    return best


def smooth_rows(V: np.ndarray) -> np.ndarray:
    """monotone_smooth applied to each row, CHUNK rows per call.

    Rows are stacked into one curve with decreasing offsets; the offsets keep
    neighbouring rows strictly ordered, so the smoother never pools across them.
    """
    n = V.shape[1]
    out = np.empty_like(V)
    for start in range(0, V.shape[0], CHUNK):
        block = V[start:start + CHUNK]
        k = block.shape[0]
        offsets = 2.0 * (k - 1 - np.arange(k))[:, None]
        scale = 2.0 * k
        stacked = ((block + offsets) / scale).reshape(-1)
        fitted = monotone_smooth(raw(stacked, sizes=np.arange(1, k * n + 1))).values.reshape(k, n)
        out[start:start + CHUNK] = fitted * scale - offsets
    return out


@pytest.mark.parametrize("length", [1, 2, 3, 4, 5, 6])
def test_pava_matches_brute_force(length):
    V = grid_inputs(length)
    np.testing.assert_allclose(smooth_rows(V), brute_force_antitonic(V, np.ones(length)), atol=1e-9)


def test_pava_single_curves_match_stacked_rows():
    V = grid_inputs(3)[::37]
    singles = np.vstack([monotone_smooth(raw(v)).values for v in V])
    np.testing.assert_allclose(smooth_rows(V), singles, atol=1e-9)


def test_pava_weighted_matches_brute_force():
    gen = np.random.default_rng(5)
    for _ in range(200):
        values = gen.choice(GRID, size=5)
        weights = gen.uniform(0.5, 3.0, size=5)
        smoothed = monotone_smooth(raw(values), weights=weights).values
        np.testing.assert_allclose(smoothed, brute_force_antitonic(values, weights)[0], atol=1e-9)


def test_pava_pools_violators():
    smoothed = monotone_smooth(raw([0.30, 0.35, 0.20]))
    np.testing.assert_allclose(smoothed.values, [0.325, 0.325, 0.20])
    assert smoothed.provenance == Provenance.IMPINT_SMOOTHED
    assert smoothed.base.provenance == Provenance.IMPINT_RAW


@pytest.mark.parametrize("values", [[0.4, 0.3, 0.3, 0.1], [0.2, 0.2, 0.2]])
def test_pava_identity_on_monotone_input(values):
    np.testing.assert_allclose(monotone_smooth(raw(values)).values, values)


def test_pava_preserves_weighted_mean():
    values = np.array([0.2, 0.5, 0.1, 0.4, 0.3])
    weights = np.array([1.0, 2.0, 0.5, 3.0, 1.0])
    smoothed = monotone_smooth(raw(values), weights=weights).values
    assert np.average(smoothed, weights=weights) == pytest.approx(np.average(values, weights=weights))


def test_smoothing_rejects_bad_weights():
    with pytest.raises(DomainError):
        monotone_smooth(raw([0.3, 0.2]), weights=[1.0, 0.0])


def test_curve_validation():
    with pytest.raises(DomainError):
        LearningCurve(sizes=[10, 10], values=[0.3, 0.2], provenance=Provenance.IMPINT_RAW)
    with pytest.raises(DomainError):
        LearningCurve(sizes=[10, 20], values=[0.2, 0.3], provenance=Provenance.IMPINT_SMOOTHED)
    with pytest.raises(DomainError):
        LearningCurve(sizes=[10], values=[1.2], provenance=Provenance.ORACLE)
    with pytest.raises(DomainError):
        LearningCurve(sizes=[10], values=[0.2], provenance="empirical")
    # brie curves may leave [0, 1] before reporting
    LearningCurve(sizes=[10, 20], values=[0.05, -0.01], provenance=Provenance.BRIE)


def test_value_at_interpolates_and_never_extrapolates():
    curve = raw([0.4, 0.2], sizes=[50, 100])
    assert curve.value_at(50) == (0.4, False)
    at = curve.value_at(75)
    assert at.value == pytest.approx(0.3)
    assert at.interpolated
    with pytest.raises(OutOfRange):
        curve.value_at(101)
    with pytest.raises(OutOfRange):
        curve.value_at(49)


def test_reported_clamps_and_flags():
    curve = LearningCurve(sizes=[10, 20, 30], values=[1.02, 0.5, -0.03], provenance=Provenance.SUBEX)
    values, clamped = curve.reported()
    np.testing.assert_allclose(values, [1.0, 0.5, 0.0])
    np.testing.assert_array_equal(clamped, [True, False, True])
    # stored values stay unclamped
    assert curve.values[0] == pytest.approx(1.02)


def test_shifted_curve_is_constant_offset():
    smoothed = monotone_smooth(raw([0.35, 0.3, 0.32, 0.2]))
    brie = smoothed.shifted(-0.04, Provenance.BRIE, anchor=Anchor(30, 0.28))
    np.testing.assert_allclose(brie.values - smoothed.values, -0.04)
    assert brie.base is smoothed
    assert brie.anchor.size == 30


def test_delta_on_brie_equals_smoothed_delta_bitwise():
    smoothed = monotone_smooth(raw([0.41, 0.33, 0.29, 0.27, 0.2]))
    brie = smoothed.shifted(0.0137, Provenance.BRIE)
    for m in smoothed.sizes:
        assert delta_estimate(brie, 10, m) == delta_estimate(smoothed, 10, m)
    assert delta_estimate(brie, 20, 20).value == 0.0


def test_delta_interpolated_flag():
    curve = raw([0.4, 0.2], sizes=[50, 100])
    delta = delta_estimate(curve, 50, 75)
    assert delta.value == pytest.approx(0.1)
    assert delta.interpolated
    with pytest.raises(OutOfRange):
        delta_estimate(curve, 50, 150)
