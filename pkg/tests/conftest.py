import numpy as np
import pytest

from tbdphd.amplitude import AmplitudeParams
from tbdphd.grid import GridSpec


@pytest.fixture
def grid():
    return GridSpec(0.0, 200.0, 2.5, 0.0, 180.0, 3.0)


@pytest.fixture
def params12():
    return AmplitudeParams(1.5, 6.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
