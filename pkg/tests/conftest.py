import numpy as np
import pytest

from capsense.geometry import build_train, shape_for_speed
from capsense.grid import BodySet, build_grid
from capsense.params import cell_spacing

R = 3e-6
ETA = 1e-3
V_CELL = 90e-18
S_CELL = 135e-12


@pytest.fixture(scope="session")
def spacing():
    return cell_spacing(V_CELL, R, 0.25)


@pytest.fixture(scope="session")
def cell_grid(spacing):
    """One period with a single cell at v = 1 mm/s, default resolution."""
    shape = shape_for_speed(R, 1e-3, V_CELL, S_CELL)
    return build_grid(R, spacing, 1e-7, 1e-7, BodySet(build_train(shape, spacing, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
