import numpy as np
import pytest

from scalinglab.quadrature import quad_build
from scalinglab.testfn import gaussian


@pytest.fixture(scope="session")
def q3():
    return quad_build(3, 1e-8)


@pytest.fixture(scope="session")
def q2():
    return quad_build(2, 1e-8)


@pytest.fixture(scope="session")
def q3_coarse():
    return quad_build(3, 1e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture(scope="session")
def mixed3():
    """Gaussian with both slots populated and a position-space shift."""
    return gaussian(3, 0.5) + gaussian(3, 0.4, amp=0.5, part="I", shift=[0.3, 0.0, 0.0])


def sample_momenta(rng, s, n=64, scale=2.0):
    return rng.normal(scale=scale, size=(n, s))
