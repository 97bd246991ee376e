import numpy as np
import pytest

from sgdlab.objective import catalog


@pytest.fixture
def quad():
    return catalog("quadratic_1d")


@pytest.fixture
def dw():
    return catalog("double_well_tilted")


@pytest.fixture
def dw_roots():
    # critical points of x^4/4 - x^2/2 + 0.3x: left minimum, saddle, right minimum
    return np.sort(np.roots([1.0, 0.0, -1.0, 0.3]).real)
