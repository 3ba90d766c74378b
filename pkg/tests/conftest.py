import numpy as np
import pytest

from oamreg.optics import BeamGeometry, ModeBasis
from oamreg.states import haar_random


@pytest.fixture
def small_geom():
    # 32x32 keeps unit tests fast; physics is resolution-independent
    return BeamGeometry(grid_n=32)


@pytest.fixture
def qubit_basis():
    return ModeBasis((-1, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_states(basis, n, seed=0):
    gen = np.random.default_rng(seed)
    return [haar_random(basis, gen) for _ in range(n)]
