# tests/test_dynamics.py

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from crn_osc.errors import KineticsDomainError, NotPeriodicError
from crn_osc.models.orbit import IntegratorConfig, TrajectoryClass, TrajectoryStatus
from crn_osc.services.crn_model import parse_crn
from crn_osc.services.dynamics import (
    CallableField,
    classify,
    finite_difference_jacobian,
    flow,
    flow_with_stm,
    hausdorff_distance,
    integrate,
    locate_orbit,
    sample_orbit,
)
from crn_osc.services.kinetics import VectorField, mass_action_spec

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


def decay(dim: int = 1) -> CallableField:
    return CallableField(lambda x: -x, dim, lambda x: -np.eye(dim))


def test_exponential_decay_accuracy():
    traj = integrate(decay(), [1.0], IntegratorConfig.certification(max_time=5.0))
    assert traj.status == TrajectoryStatus.COMPLETED
    assert traj.times[-1] == pytest.approx(5.0)
    assert_allclose(traj.final_state, [np.exp(-5.0)], rtol=1e-7)


def test_stiff_start_uses_implicit_method():
    traj = integrate(decay(), [1.0], IntegratorConfig.certification(max_time=5.0, stiff=True))
    assert traj.method == "Radau"
    assert_allclose(traj.final_state, [np.exp(-5.0)], rtol=1e-6)


def test_switch_to_implicit_after_step_budget():
    harmonic = CallableField(lambda x: ROTATION @ x, 2, lambda x: ROTATION)
    traj = integrate(harmonic, [1.0, 0.0], IntegratorConfig.screening(max_time=50.0, stiff_switch_steps=3))
    assert traj.switched_to_stiff
    assert traj.method == "Radau"
    assert traj.status == TrajectoryStatus.COMPLETED


def test_unbounded_run_stops_at_cap():
    blowup = CallableField(lambda x: x ** 2, 1)
    traj = integrate(blowup, [1.0], IntegratorConfig.screening(max_time=10.0))
    assert traj.status == TrajectoryStatus.UNBOUNDED
    assert traj.times[-1] < 1.0
    assert classify(traj) == TrajectoryClass.UNBOUNDED


def test_step_limit(hopf_oscillator):
    traj = integrate(hopf_oscillator(1.0), [0.5, 0.0], IntegratorConfig.screening(max_steps=5))
    assert traj.status == TrajectoryStatus.STEP_LIMIT
    assert traj.n_steps == 5
    assert classify(traj) == TrajectoryClass.UNDETERMINED


def test_rest_stop_classifies_converged():
    traj = integrate(decay(), [1.0], IntegratorConfig.screening())
    assert traj.stopped_at_equilibrium
    assert traj.times[-1] < 100.0
    assert classify(traj) == TrajectoryClass.CONVERGED


def test_limit_cycle_classified_oscillatory(hopf_oscillator):
    traj = integrate(hopf_oscillator(1.0), [0.5, 0.0], IntegratorConfig.screening(max_time=100.0))
    assert classify(traj) == TrajectoryClass.OSCILLATORY_CANDIDATE


def test_initial_state_checked():
    with pytest.raises(KineticsDomainError):
        integrate(decay(2), [1.0])
    crn = parse_crn("X <-> Y")
    with pytest.raises(KineticsDomainError):
        integrate(VectorField(crn, mass_action_spec(crn, [1.0, 2.0])), [-1.0, 1.0])


def test_conservation_law_holds_along_trajectory():
    crn = parse_crn("X <-> Y")
    vf = VectorField(crn, mass_action_spec(crn, [1.0, 2.0]))
    traj = integrate(vf, [1.0, 3.0], IntegratorConfig.certification(max_time=20.0))
    assert_allclose(traj.states.sum(axis=1), 4.0, rtol=1e-8)
    assert_allclose(traj.final_state, [8.0 / 3.0, 4.0 / 3.0], rtol=1e-6)


def test_dense_output_interpolates():
    traj = integrate(decay(), [1.0], IntegratorConfig.certification(max_time=2.0), dense=True)
    assert_allclose(traj.dense(1.3), [np.exp(-1.3)], rtol=1e-7)


def test_state_transition_matrix_of_linear_system():
    harmonic = CallableField(lambda x: ROTATION @ x, 2, lambda x: ROTATION)
    T = np.pi / 2
    xT, Z, trace = flow_with_stm(harmonic, [1.0, 0.0], T, with_trace=True)
    assert_allclose(Z, scipy.linalg.expm(ROTATION * T), atol=1e-8)
    assert_allclose(xT, scipy.linalg.expm(ROTATION * T) @ [1.0, 0.0], atol=1e-8)
    assert trace == pytest.approx(0.0, abs=1e-10)


def test_finite_difference_jacobian(hopf_oscillator):
    osc = hopf_oscillator(0.5, 2.0)
    x = np.array([0.3, -0.7])
    assert_allclose(finite_difference_jacobian(osc.field, x), osc.jacobian(x), atol=1e-8)


def test_hausdorff_distance():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert hausdorff_distance(a, a) == 0.0
    assert hausdorff_distance(a, a + [0.0, 1.0]) == pytest.approx(1.0)


def test_locate_normal_form_orbit(hopf_oscillator):
    mu = 2.0
    osc = hopf_oscillator(mu)
    orbit = locate_orbit(osc, [1.0, 0.3])
    assert orbit.period == pytest.approx(2 * np.pi, abs=1e-6)
    assert np.linalg.norm(orbit.point_array) == pytest.approx(np.sqrt(mu), abs=1e-6)
    assert orbit.residuals["return_map"] < 1e-6
    assert_allclose(flow(osc, orbit.point_array, orbit.period), orbit.point_array, atol=1e-6)
    _, samples = sample_orbit(osc, orbit.point_array, orbit.period, 50)
    assert_allclose(np.linalg.norm(samples, axis=1), np.sqrt(mu), atol=1e-6)


def test_locate_from_equilibrium_fails(hopf_oscillator):
    with pytest.raises(NotPeriodicError):
        locate_orbit(hopf_oscillator(1.0), [0.0, 0.0])


def test_locate_without_return_fails():
    with pytest.raises(NotPeriodicError):
        locate_orbit(decay(), [1.0], IntegratorConfig.certification(max_time=50.0))
