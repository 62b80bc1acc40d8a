import numpy as np
import pytest

from qadsim.dataio import DataMatrix, QueryPoint


def make_instance(seed, m_hi=8, d_hi=4, scale=2.0, min_sigma2=0.05):
    """Raw non-degenerate random instance (X matrix, x0 vector)."""
    rng = np.random.default_rng(seed)
    while True:
        m = int(rng.integers(2, m_hi + 1))
        d = int(rng.integers(1, d_hi + 1))
        x = rng.uniform(-scale, scale, size=(m, d))
        if np.min(np.var(x, axis=0)) < min_sigma2:
            continue
        x0 = rng.uniform(-scale, scale, size=d)
        return x, x0


@pytest.fixture
def small_data():
    return DataMatrix(np.array([[1.0, 2.0], [3.0, 4.0]]))


@pytest.fixture
def small_query():
    return QueryPoint(np.array([2.5, 3.5]))
