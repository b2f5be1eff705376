# crn_osc/services/floquet.py

import logging
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict

from crn_osc.config import config
from crn_osc.errors import EigenvalueError, NotPeriodicError
from crn_osc.models.network import BasisFactorization
from crn_osc.models.orbit import IntegratorConfig, OrbitRecord, Verdict, complex_pairs
from crn_osc.services.dynamics import flow, flow_with_stm

logger = logging.getLogger(__name__)

MAX_EIG_DIM = 16


class Monodromy(BaseModel):
    """Z(T) together with the trace integral and endpoint of the same run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray
    trace_integral: float
    endpoint: np.ndarray

    @property
    def liouville_residual(self) -> float:
        """|det Z(T) - exp(int tr Df)| / |det Z(T)|."""
        det = np.linalg.det(self.matrix)
        return float(abs(det - np.exp(self.trace_integral)) / max(abs(det), 1e-300))


def eig(matrix) -> np.ndarray:
    """
    Eigenvalues of a small dense real matrix, sorted by (real, imag).

    Every returned value is checked for backward error: the smallest singular
    value of A - lambda I must vanish to 1e-10 relative to |A|.

    Raises:
        ValueError: non-square, too large or non-finite input
        EigenvalueError: LAPACK failure or a backward-error check failed
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_EIG_DIM:
        raise ValueError(f"matrix dimension {A.shape[0]} exceeds {MAX_EIG_DIM}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if A.size == 0:
        return np.zeros(0, dtype=complex)

    try:
        values = scipy.linalg.eigvals(A)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise EigenvalueError(f"eigenvalue iteration did not converge: {e}") from e

    bound = 1e-10 * max(1.0, np.linalg.norm(A, 2))
    I = np.eye(A.shape[0])
    for lam in values:
        smin = scipy.linalg.svdvals(A - lam * I)[-1]
        if smin > bound:
            raise EigenvalueError(f"eigenvalue {lam} has backward error {smin:.3e}")

    return np.array(sorted(values, key=lambda z: (round(z.real, 12), round(z.imag, 12))))


def verdict_from_multipliers(multipliers: Sequence[complex], margin: Optional[float] = None,
                             trivial_tol: Optional[float] = None) -> Verdict:
    """
    SPPO/NPPO/Degenerate from reduced multipliers.

    Exactly one multiplier must sit within trivial_tol of 1; the remaining ones
    decide the verdict by the margin rule on their moduli.
    """
    margin = config.MULTIPLIER_MARGIN if margin is None else margin
    trivial_tol = config.TRIVIAL_MULTIPLIER_TOL if trivial_tol is None else trivial_tol
    mults = np.asarray(multipliers, dtype=complex)
    distance = np.abs(mults - 1.0)
    near_one = np.flatnonzero(distance < trivial_tol)
    if len(near_one) == 0:
        return Verdict.NOT_PERIODIC
    if len(near_one) > 1:
        return Verdict.DEGENERATE

    moduli = np.abs(np.delete(mults, near_one[0]))
    if np.all(moduli < 1.0 - margin):
        return Verdict.SPPO
    if np.all(np.abs(moduli - 1.0) > margin):
        return Verdict.NPPO
    return Verdict.DEGENERATE


def monodromy(vf, orbit: OrbitRecord, cfg: Optional[IntegratorConfig] = None) -> Monodromy:
    """Full variational equation z' = Df(theta(t)) z over one period, Z(0) = I."""
    cfg = cfg or IntegratorConfig.certification()
    xT, Z, trace = flow_with_stm(vf, orbit.point_array, orbit.period, cfg, with_trace=True)
    return Monodromy(matrix=Z, trace_integral=trace, endpoint=xT)


def reduced_multipliers(vf, orbit: OrbitRecord, bf: Optional[BasisFactorization] = None,
                        x0_anchor=None, cfg: Optional[IntegratorConfig] = None,
                        phase: float = 0.0) -> np.ndarray:
    """
    Multipliers of z' = Q Dv(theta(t)) Gamma0 z over one period.

    Args:
        vf: VectorField of a CRN (fields without a basis fall back to the full equation)
        orbit: located orbit
        bf: factorization Gamma = Gamma0 Q; the field's own one if omitted
        x0_anchor: point the class coordinates are taken from; must lie in the
            orbit's stoichiometry class
        phase: start the period at Phi_phase(point) instead of at the orbit point

    Returns:
        np.ndarray: r multipliers, sorted
    """
    cfg = cfg or IntegratorConfig.certification()
    start = orbit.point_array
    if phase:
        start = flow(vf, start, phase, cfg)

    if not hasattr(vf, "rate_jacobian"):
        _, Z, _ = flow_with_stm(vf, start, orbit.period, cfg)
        return eig(Z)

    bf = bf or vf.basis
    B, Q = bf.gamma0_float, bf.q_float
    if x0_anchor is not None:
        offset = np.asarray(x0_anchor, dtype=float) - orbit.point_array
        coords = np.linalg.lstsq(B, offset, rcond=None)[0]
        if np.linalg.norm(B @ coords - offset) > 1e-8 * (1.0 + np.linalg.norm(offset)):
            raise ValueError("anchor does not lie in the orbit's stoichiometry class")

    _, Z, _ = flow_with_stm(vf, start, orbit.period, cfg, reduction=(B, Q, vf.rate_jacobian))
    return eig(Z)


def certify(vf, orbit: OrbitRecord, margin: Optional[float] = None,
            trivial_tol: Optional[float] = None, cfg: Optional[IntegratorConfig] = None) -> OrbitRecord:
    """
    Attach full and reduced multipliers, residuals and a verdict to an orbit.

    Returns:
        OrbitRecord: a copy of the orbit with Floquet data filled in
    """
    cfg = cfg or IntegratorConfig.certification()
    margin = config.MULTIPLIER_MARGIN if margin is None else margin
    trivial_tol = config.TRIVIAL_MULTIPLIER_TOL if trivial_tol is None else trivial_tol
    try:
        mono = monodromy(vf, orbit, cfg)
    except NotPeriodicError:
        return orbit.model_copy(update={"verdict": Verdict.NOT_PERIODIC})
    full = eig(mono.matrix)
    reduced = reduced_multipliers(vf, orbit, cfg=cfg)
    verdict = verdict_from_multipliers(reduced, margin, trivial_tol)

    residuals = dict(orbit.residuals)
    residuals["liouville"] = mono.liouville_residual
    residuals["endpoint"] = float(np.linalg.norm(mono.endpoint - orbit.point_array))
    residuals["trivial_multiplier"] = float(np.min(np.abs(reduced - 1.0))) if len(reduced) else float("inf")

    logger.info("Certified orbit T=%.6g: %s (reduced moduli %s)", orbit.period, verdict.value,
                np.round(np.abs(reduced), 6).tolist())
    tolerances = dict(orbit.tolerances)
    tolerances.update({"margin": margin, "trivial_tol": trivial_tol})
    return orbit.model_copy(update={
        "full_multipliers": complex_pairs(full),
        "reduced_multipliers": complex_pairs(reduced),
        "verdict": verdict,
        "residuals": residuals,
        "tolerances": tolerances,
    })
