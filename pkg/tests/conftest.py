import numpy as np
import pytest

from preserver_lab.matrix_core import Tolerances
from preserver_lab.rank_sets import random_invertible


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ginibre(n, rng):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


@pytest.fixture
def well_conditioned():
    def make(n, seed):
        return random_invertible(n, np.random.default_rng(seed))
    return make
