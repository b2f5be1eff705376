# crn_osc/services/hopf.py

import logging
from typing import Callable, Optional

import numpy as np

from crn_osc.config import config
from crn_osc.errors import NotHopfPointError
from crn_osc.models.kinetics import KineticsClass, SamplingRanges
from crn_osc.models.network import Crn
from crn_osc.services.dynamics import finite_difference_jacobian
from crn_osc.services.floquet import eig
from crn_osc.services.kinetics import VectorField, sample_initial, sample_params

logger = logging.getLogger(__name__)


def screen_jacobian(jacobian, screen_tol: Optional[float] = None) -> bool:
    """True if J has a non-real eigenvalue pair within screen_tol of the imaginary axis (relative)."""
    screen_tol = config.SCREEN_TOL if screen_tol is None else screen_tol
    J = np.asarray(jacobian, dtype=float)
    if J.shape[0] < 2:
        return False
    for lam in eig(J):
        if lam.imag > 1e-12 * max(1.0, abs(lam)) and lam.real >= -screen_tol * abs(lam):
            return True
    return False


def hopf_screen(crn: Crn, kinetics_class: KineticsClass, samples: int, rng: np.random.Generator,
                ranges: Optional[SamplingRanges] = None, screen_tol: Optional[float] = None) -> bool:
    """
    Cheap filter for networks that may admit a Hopf bifurcation.

    Draws (K[, M], x) and reports whether any Jacobian Gamma Dv(x) has a complex
    pair on or to the right of the imaginary axis (within screen_tol). A negative
    screen is used only to skip simulation, never as proof.

    Args:
        crn: network to screen
        kinetics_class: kinetics class of the draws
        samples: number of parameter/state draws
        rng: seeded generator
        ranges: sampling bounds
        screen_tol: relative distance to the imaginary axis

    Returns:
        bool: True if some draw screens positive
    """
    if crn.n_species < 2:
        return False
    for i in range(samples):
        spec = sample_params(crn, kinetics_class, rng, ranges)
        vf = VectorField(crn, spec)
        x = sample_initial(crn.n_species, rng, ranges)
        if screen_jacobian(vf.jacobian(x), screen_tol):
            logger.debug("Screen positive at draw %d", i)
            return True
    return False


def _as_function(field) -> Callable[[np.ndarray], np.ndarray]:
    if hasattr(field, "field"):
        return field.field
    return field


def hopf_frequency(jacobian) -> float:
    """omega = sqrt(det J) for a planar Jacobian with zero trace."""
    J = np.asarray(jacobian, dtype=float)
    det = float(np.linalg.det(J))
    if det <= 0:
        raise NotHopfPointError("determinant is not positive")
    return float(np.sqrt(det))


def _second(f, h):
    """Second partials of f: (w) -> R at w = 0."""
    f0 = f(0.0, 0.0)
    uu = (f(h, 0.0) - 2 * f0 + f(-h, 0.0)) / h**2
    vv = (f(0.0, h) - 2 * f0 + f(0.0, -h)) / h**2
    uv = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h**2)
    return uu, uv, vv


def _third(f, h):
    uuu = (f(2 * h, 0.0) - 2 * f(h, 0.0) + 2 * f(-h, 0.0) - f(-2 * h, 0.0)) / (2 * h**3)
    vvv = (f(0.0, 2 * h) - 2 * f(0.0, h) + 2 * f(0.0, -h) - f(0.0, -2 * h)) / (2 * h**3)
    uvv = (f(h, h) - 2 * f(h, 0.0) + f(h, -h) - f(-h, h) + 2 * f(-h, 0.0) - f(-h, -h)) / (2 * h**3)
    uuv = (f(h, h) - 2 * f(0.0, h) + f(-h, h) - f(h, -h) + 2 * f(0.0, -h) - f(-h, -h)) / (2 * h**3)
    return uuu, uuv, uvv, vvv


def lyapunov_coefficient(field, equilibrium, jacobian=None, h2: float = 1e-3, h3: float = 1e-2,
                         tol: float = 1e-6) -> float:
    """
    First Lyapunov quantity of a planar field at a Hopf point.

    The linear part is brought to [[0, -w], [w, 0]] by x = x* + P w with
    P = [c1, J c1 / w] and c1 = (1, -J00/J01); the planar normal form
    combination of second and third partials of G = P^-1 F(x* + P w) then
    gives the coefficient. Partials are central finite differences.

    Raises:
        NotHopfPointError: not planar, or the eigenvalues are not +-i w
    """
    F = _as_function(field)
    xs = np.asarray(equilibrium, dtype=float)
    if xs.shape != (2,):
        raise NotHopfPointError("the planar formula needs a 2-dimensional system")
    J = np.asarray(jacobian, dtype=float) if jacobian is not None else finite_difference_jacobian(F, xs)
    scale = 1.0 + np.abs(J).max()
    if abs(np.trace(J)) > tol * scale:
        raise NotHopfPointError(f"trace {np.trace(J):.3e} is not zero")
    omega = hopf_frequency(J)

    c1 = np.array([1.0, -J[0, 0] / J[0, 1]])
    P = np.column_stack([c1, J @ c1 / omega])
    P_inv = np.linalg.inv(P)
    f_eq = P_inv @ F(xs)

    def G(u, v, i):
        return (P_inv @ F(xs + P @ np.array([u, v])))[i] - f_eq[i]

    f1, f2 = (lambda u, v: G(u, v, 0)), (lambda u, v: G(u, v, 1))
    f1_uu, f1_uv, f1_vv = _second(f1, h2)
    f2_uu, f2_uv, f2_vv = _second(f2, h2)
    f1_uuu, _, f1_uvv, _ = _third(f1, h3)
    _, f2_uuv, _, f2_vvv = _third(f2, h3)

    cubic = (f1_uuu + f1_uvv + f2_uuv + f2_vvv) / 16.0
    quadratic = (f1_uv * (f1_uu + f1_vv) - f2_uv * (f2_uu + f2_vv)
                 - f1_uu * f2_uu + f1_vv * f2_vv) / (16.0 * omega)
    a = float(cubic + quadratic)
    logger.debug("Lyapunov coefficient %.8g (omega=%.8g)", a, omega)
    return a


def transversality(jacobian_family: Callable[[float], np.ndarray], k0: float, h: float = 1e-5) -> float:
    """d Re(lambda)/dk at k0 for the eigenvalue with positive imaginary part."""

    def real_part(k):
        values = eig(jacobian_family(k))
        upper = [lam for lam in values if lam.imag > 0]
        if not upper:
            raise NotHopfPointError(f"no complex eigenvalue pair at k={k}")
        return max(upper, key=lambda lam: lam.imag).real

    return float((real_part(k0 + h) - real_part(k0 - h)) / (2 * h))
