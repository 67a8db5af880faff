import numpy as np
import pytest

import legendrelab as ll


@pytest.fixture
def grid_fine_1d():
    return ll.grid_1d(-2.0, 2.0, 201)


@pytest.fixture
def dual_fine_1d():
    return ll.grid_1d(-3.0, 3.0, 241)


@pytest.fixture
def grid_2d_small():
    return ll.grid_2d(-2.0, 2.0, 41)


@pytest.fixture
def halfsq_1d(grid_fine_1d):
    return ll.build_grid_function(grid_fine_1d, lambda p: 0.5 * p[:, 0] ** 2,
                                  name="halfsq", vectorized=True)


@pytest.fixture
def absval_1d(grid_fine_1d):
    return ll.build_grid_function(grid_fine_1d, lambda p: np.abs(p[:, 0]),
                                  name="abs", vectorized=True)


def brute_conjugate_values(f, dual_grid):
    """Independent conjugation oracle: plain loop over dual points."""
    out = np.empty(dual_grid.size)
    for j in range(dual_grid.size):
        out[j] = np.max(f.grid.points @ dual_grid.point(j) - f.flat)
    return out
