import numpy as np
import pytest

from dolbeault_ns import SpectralGrid


@pytest.fixture
def grid8():
    return SpectralGrid(2, 8)


@pytest.fixture
def grid4():
    return SpectralGrid(2, 4)


@pytest.fixture
def grid3d():
    return SpectralGrid(3, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
