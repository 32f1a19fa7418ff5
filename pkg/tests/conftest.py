import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from expanderflow import fields as fd


@pytest.fixture(scope="session")
def small_grid2():
    return fd.GridSpec(dim=2, half_width=8.0, points_per_axis=65)


@pytest.fixture(scope="session")
def small_grid3():
    return fd.GridSpec(dim=3, half_width=6.0, points_per_axis=33)


@pytest.fixture(scope="session")
def data2():
    return fd.corotational_data(2, 0.05)


@pytest.fixture(scope="session")
def data3():
    return fd.corotational_data(3, 0.05)


def smooth_bump_field(grid, ambient, seed=0, spread=1.0, width=(0.3, 0.5)):
    """Random interior-supported smooth field for operator tests."""
    rng = np.random.default_rng(seed)
    nodes = grid.nodes()
    vals = np.zeros(grid.shape(ambient))
    for _ in range(5):
        c = rng.uniform(-spread, spread, grid.dim)
        w = rng.uniform(*width)
        a = rng.normal(size=ambient)
        vals += np.exp(-np.sum((nodes - c) ** 2, -1) / (2 * w * w))[..., None] * a
    return vals
