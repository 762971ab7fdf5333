import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def x_grid(n):
    return 2.0 * np.pi * np.arange(n) / n
