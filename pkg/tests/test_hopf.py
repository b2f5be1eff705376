# tests/test_hopf.py

import numpy as np
import pytest
from numpy.testing import assert_allclose

from crn_osc.errors import KineticsDomainError, NotHopfPointError
from crn_osc.models.kinetics import KineticsClass
from crn_osc.services.crn_model import parse_crn
from crn_osc.services.floquet import eig
from crn_osc.services.hopf import (
    hopf_frequency,
    hopf_screen,
    lyapunov_coefficient,
    screen_jacobian,
    transversality,
)
from crn_osc.services.workbench import (
    two_species_network,
    xivset_eigenvalues,
    xivset_field,
    xivset_jacobian,
    xivset_spec,
)
from crn_osc.utils.helpers import rng_stream

OMEGA = np.sqrt(3) / 2


@pytest.mark.parametrize("k", [-0.2, 0.0, 0.1, 0.3])
def test_unit_point_is_equilibrium(k):
    vf = xivset_field(k)
    assert_allclose(vf.field(np.ones(2)), 0.0, atol=1e-14)
    assert_allclose(vf.jacobian(np.ones(2)), xivset_jacobian(k), atol=1e-12)


def test_family_domain():
    with pytest.raises(KineticsDomainError):
        xivset_spec(0.5)


def test_eigenvalues_at_hopf_point():
    assert_allclose(xivset_eigenvalues(0.0), [-1j * OMEGA, 1j * OMEGA], atol=1e-8)
    numeric = eig(xivset_field(0.0).jacobian(np.ones(2)))
    assert_allclose(numeric, [-1j * OMEGA, 1j * OMEGA], atol=1e-6)


def test_eigenvalue_formula_matches_eig():
    for k in (-0.3, 0.05, 0.2):
        assert_allclose(np.sort_complex(xivset_eigenvalues(k)), np.sort_complex(eig(xivset_jacobian(k))),
                        atol=1e-10)


def test_frequency_and_transversality():
    assert hopf_frequency(xivset_jacobian(0.0)) == pytest.approx(OMEGA, abs=1e-12)
    assert transversality(xivset_jacobian, 0.0) == pytest.approx(0.5, abs=1e-6)


def test_lyapunov_coefficient_of_family():
    value = lyapunov_coefficient(xivset_field(0.0), np.ones(2), xivset_jacobian(0.0))
    assert value == pytest.approx(-0.125, abs=1e-3)


def test_lyapunov_coefficient_of_cubic_normal_form(hopf_oscillator):
    value = lyapunov_coefficient(hopf_oscillator(0.0), np.zeros(2))
    assert value == pytest.approx(-1.0, abs=1e-6)


def test_lyapunov_rejects_non_hopf_points():
    with pytest.raises(NotHopfPointError):
        lyapunov_coefficient(xivset_field(0.2), np.ones(2), xivset_jacobian(0.2))
    with pytest.raises(NotHopfPointError):
        lyapunov_coefficient(lambda x: -x, np.ones(3))
    with pytest.raises(NotHopfPointError):
        hopf_frequency([[1.0, 0.0], [0.0, -1.0]])


def test_screen_jacobian():
    assert screen_jacobian(xivset_jacobian(0.0))
    assert screen_jacobian(xivset_jacobian(0.1))
    assert not screen_jacobian(np.diag([-1.0, -2.0]))
    assert not screen_jacobian([[-1.0, -3.0], [1.0, -1.0]])
    assert not screen_jacobian([[0.0]])


def test_hopf_screen_negative_on_triangular_networks():
    for name in ("i", "iii", "xii"):
        assert not hopf_screen(two_species_network(name), KineticsClass.MASS_ACTION, 50, rng_stream(5, 0))


def test_hopf_screen_needs_two_species():
    crn = parse_crn("0 -> 2X\nX -> 0")
    assert not hopf_screen(crn, KineticsClass.MASS_ACTION, 10, rng_stream(5, 1))
