import numpy as np
import pytest

from stomp import gridworld


@pytest.fixture(scope="session")
def two_room():
    return gridworld.build_two_room()


@pytest.fixture(scope="session")
def four_room():
    return gridworld.build_four_room()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
