# tests/conftest.py

import numpy as np
import pytest

from crn_osc.services.dynamics import CallableField
from crn_osc.services.storage import StorageService
from crn_osc.services.workbench import XIVSET_CYCLE_K, xivset_orbit


def make_hopf_oscillator(mu: float, omega: float = 1.0) -> CallableField:
    """Planar normal form with a stable circle of radius sqrt(mu) and period 2 pi / omega."""

    def fun(x):
        r2 = x @ x
        return np.array([mu * x[0] - omega * x[1] - x[0] * r2,
                         omega * x[0] + mu * x[1] - x[1] * r2])

    def jac(x):
        r2 = x @ x
        return np.array([[mu - r2 - 2 * x[0] ** 2, -omega - 2 * x[0] * x[1]],
                         [omega - 2 * x[0] * x[1], mu - r2 - 2 * x[1] ** 2]])

    return CallableField(fun, 2, jac)


@pytest.fixture
def hopf_oscillator():
    return make_hopf_oscillator


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def storage(tmp_path):
    return StorageService(tmp_path / "storage")


@pytest.fixture(scope="session")
def xivset_sppo():
    """Certified limit cycle of the physical power-law test family."""
    orbit = xivset_orbit(XIVSET_CYCLE_K[0])
    assert orbit is not None
    return orbit
