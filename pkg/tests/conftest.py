import numpy as np
import pytest

from lcurve.logistic import Dataset
from lcurve.utils_numerics import RngStream


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long Monte-Carlo reproductions")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo reproduction, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return RngStream(12345)


def make_logistic_data(n: int, p: int, beta, seed: int, intercept: float=0.0) -> Dataset:
    gen = np.random.default_rng(seed)
    X = gen.standard_normal((n, p))
    pi = 1.0 / (1.0 + np.exp(-(intercept + X @ np.asarray(beta, dtype=float))))
    y = (gen.random(n) < pi).astype(int)
    return Dataset(X, y)


@pytest.fixture
def logistic_data():
    return make_logistic_data(120, 3, [1.0, -0.5, 0.25], seed=7)


@pytest.fixture
def null_data():
    # labels independent of the features
    gen = np.random.default_rng(11)
    return Dataset(gen.standard_normal((200, 2)), gen.integers(0, 2, 200))


@pytest.fixture
def mixed_data():
    """2 binary + 4 continuous columns, labels from a known logistic model."""
    gen = np.random.default_rng(209)
    n = 209
    b = gen.integers(0, 2, (n, 2)).astype(float)
    c = gen.standard_normal((n, 4)) + 0.5 * b[:, [0]]
    X = np.hstack([b, c])
    beta = np.array([0.8, -0.6, 1.0, 0.5, -0.5, 0.25])
    y = (gen.random(n) < 1.0 / (1.0 + np.exp(-(X @ beta - 0.4)))).astype(int)
    return Dataset(X, y)
