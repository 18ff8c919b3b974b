import numpy as np
import pytest

from qstokes import load_example


@pytest.fixture(scope="session")
def estar():
    return load_example("estar")


@pytest.fixture(scope="session")
def three_slope():
    return load_example("three_slope")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
