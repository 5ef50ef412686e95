import numpy as np
import pytest

from metric_entropy_lab import MetricSpec, PointSet


@pytest.fixture
def three_constants():
    """Constant curves 0, 1, 2 under the sup metric."""
    return PointSet.constants([0.0, 1.0, 2.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_pointset(rng, n, metric=None, grid_size=9):
    grid = np.linspace(0.0, 1.0, grid_size)
    values = rng.normal(size=(n, grid_size)).cumsum(axis=1) / np.sqrt(grid_size)
    return PointSet(grid, values, metric or MetricSpec.sup())
