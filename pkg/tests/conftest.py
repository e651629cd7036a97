import numpy as np
import pytest

from beamobs.beam import Interval, Quadrature, clamped_basis


@pytest.fixture(scope="session")
def interval():
    return Interval(1.0, 2.0)


@pytest.fixture(scope="session")
def quad(interval):
    return Quadrature.gauss_legendre(interval)


@pytest.fixture(scope="session")
def modes16(interval, quad):
    return clamped_basis(16, interval, quad)


@pytest.fixture(scope="session")
def modes(modes16):
    return modes16[:8]


@pytest.fixture(scope="session")
def lam_vec(modes):
    return np.array([m.lam for m in modes])
