import numpy as np
import pytest

from helpers import random_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture
def small_ds(rng):
    return random_dataset(rng, n=25, p=4)
