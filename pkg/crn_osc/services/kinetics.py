# crn_osc/services/kinetics.py

import logging
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np

from crn_osc.errors import KineticsDomainError
from crn_osc.models.kinetics import KineticsClass, KineticsSpec, SamplingRanges
from crn_osc.models.network import BasisFactorization, Crn, StoichMatrices
from crn_osc.services.crn_model import basis_factorization, stoich_matrices

logger = logging.getLogger(__name__)


def validate_spec(crn: Crn, spec: KineticsSpec, sm: Optional[StoichMatrices] = None) -> None:
    """
    Check K and M against the network and the kinetics class.

    Raises:
        KineticsDomainError: shape mismatch or class constraint violated
    """
    sm = sm or stoich_matrices(crn)
    m, n = crn.n_reactions, crn.n_species
    if spec.n_reactions != m:
        raise KineticsDomainError(f"{spec.n_reactions} rate constants for {m} reactions")
    if m and spec.m_array.shape != (m, n):
        raise KineticsDomainError(f"exponent matrix has shape {spec.m_array.shape}, expected {(m, n)}")
    M = spec.m_array if m else np.zeros((0, n))
    gl_t = sm.gamma_l.T
    if spec.kinetics_class == KineticsClass.MASS_ACTION and not np.array_equal(M, gl_t):
        raise KineticsDomainError("mass action requires M equal to the transpose of Gamma_l")
    if spec.kinetics_class == KineticsClass.PHYSICAL_POWER_LAW and \
            not np.array_equal(np.sign(M), np.sign(gl_t)):
        raise KineticsDomainError("physical power law requires sign(M) = sign(Gamma_l^T)")


class VectorField:
    """
    x' = Gamma v(x) for a network with power-law kinetics.

    Immutable after construction; safe to share between workers.
    """

    positive = True

    def __init__(self, crn: Crn, spec: KineticsSpec):
        self.crn = crn
        self.spec = spec
        self.stoich = stoich_matrices(crn)
        validate_spec(crn, spec, self.stoich)
        self.n, self.m = crn.n_species, crn.n_reactions
        self.gamma = self.stoich.gamma.astype(float)
        self.K = spec.k_array
        self.M = spec.m_array.reshape(self.m, self.n) if self.m else np.zeros((0, self.n))
        self.integer_exponents = bool(np.all(self.M >= 0) and np.all(self.M == np.round(self.M)))

    @property
    def dim(self) -> int:
        return self.n

    @cached_property
    def basis(self) -> BasisFactorization:
        return basis_factorization(self.stoich)

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise KineticsDomainError(f"state has shape {x.shape}, expected ({self.n},)")
        if self.integer_exponents:
            if np.any(x < 0):
                raise KineticsDomainError("negative concentration")
        elif np.any(x <= 0):
            raise KineticsDomainError("power-law rates need strictly positive concentrations")
        return x

    def rate(self, x) -> np.ndarray:
        x = self._check_point(x)
        if self.integer_exponents:
            return self.K * np.prod(np.power(x[None, :], self.M), axis=1)
        return self.K * np.exp(self.M @ np.log(x))

    def rate_jacobian(self, x) -> np.ndarray:
        """Dv, m x n, with (Dv)_ji = v_j M_ji / x_i away from the boundary."""
        x = self._check_point(x)
        if np.all(x > 0):
            return self.rate(x)[:, None] * self.M / x[None, :]
        # boundary of the closed orthant: differentiate monomials directly
        powers = np.power(x[None, :], self.M)
        D = np.zeros((self.m, self.n))
        for i in range(self.n):
            others = np.prod(np.delete(powers, i, axis=1), axis=1)
            mi = self.M[:, i]
            deriv = np.where(mi > 0, mi * np.power(x[i], np.maximum(mi - 1, 0)), 0.0)
            D[:, i] = self.K * deriv * others
        return D

    def field(self, x) -> np.ndarray:
        return self.gamma @ self.rate(x)

    def jacobian(self, x) -> np.ndarray:
        return self.gamma @ self.rate_jacobian(x)

    def __call__(self, t: float, x) -> np.ndarray:
        return self.field(x)


def mass_action_spec(crn: Crn, rate_constants: Sequence[float]) -> KineticsSpec:
    sm = stoich_matrices(crn)
    return KineticsSpec(
        kinetics_class=KineticsClass.MASS_ACTION,
        rate_constants=tuple(float(k) for k in rate_constants),
        exponents=tuple(tuple(int(a) for a in row) for row in sm.gamma_l.T),
    )


def sample_params(crn: Crn, kinetics_class: KineticsClass, rng: np.random.Generator,
                  ranges: Optional[SamplingRanges] = None,
                  fixed_exponents: Optional[Sequence[Sequence[float]]] = None,
                  seed: Optional[int] = None, stream: Optional[int] = None) -> KineticsSpec:
    """
    Draw K (and M for physical power law) uniformly from the configured ranges.

    Args:
        crn: network the parameters belong to
        kinetics_class: class to sample
        rng: seeded generator owned by the caller
        ranges: sampling bounds, config defaults if omitted
        fixed_exponents: M for the fixed power-law class, required there
        seed, stream: provenance recorded on the spec

    Returns:
        KineticsSpec: deterministic given the generator state

    Raises:
        KineticsDomainError: fixed power law without exponents of the right shape
    """
    ranges = ranges or SamplingRanges()
    sm = stoich_matrices(crn)
    m = crn.n_reactions
    K = rng.uniform(*ranges.rates, size=m)
    gl_t = sm.gamma_l.T.astype(float)
    if kinetics_class == KineticsClass.PHYSICAL_POWER_LAW:
        draws = rng.uniform(*ranges.exponents, size=gl_t.shape)
        M = np.where(gl_t > 0, draws, 0.0)
    elif kinetics_class == KineticsClass.FIXED_POWER_LAW:
        if fixed_exponents is None:
            raise KineticsDomainError("fixed power law needs fixed_exponents")
        M = np.asarray(fixed_exponents, dtype=float)
        if M.shape != gl_t.shape:
            raise KineticsDomainError(f"fixed_exponents has shape {M.shape}, expected {gl_t.shape}")
    else:
        M = gl_t
    return KineticsSpec(
        kinetics_class=kinetics_class,
        rate_constants=tuple(float(k) for k in K),
        exponents=tuple(tuple(float(a) for a in row) for row in M),
        seed=seed,
        stream=stream,
    )


def sample_initial(n: int, rng: np.random.Generator, ranges: Optional[SamplingRanges] = None) -> np.ndarray:
    ranges = ranges or SamplingRanges()
    return rng.uniform(*ranges.initial, size=n)


def derived_kinetics(spec: KineticsSpec, species: Sequence[int], reactions: Sequence[int]) -> KineticsSpec:
    """Exponent submatrix M(beta|alpha) and K restricted to beta."""
    M = spec.m_array
    n = M.shape[1] if M.size else 0
    if any(j < 0 or j >= spec.n_reactions for j in reactions) or any(i < 0 or i >= n for i in species):
        raise IndexError("species or reaction index out of range")
    sub = M[np.ix_(list(reactions), list(species))]
    return KineticsSpec(
        kinetics_class=spec.kinetics_class,
        rate_constants=tuple(spec.rate_constants[j] for j in reactions),
        exponents=tuple(tuple(float(a) for a in row) for row in sub),
        seed=spec.seed,
        stream=spec.stream,
    )


def restrict(spec: KineticsSpec, reactions: Sequence[int]) -> KineticsSpec:
    n = spec.m_array.shape[1] if spec.n_reactions else 0
    return derived_kinetics(spec, range(n), reactions)


def species_extension(spec: KineticsSpec, new_columns: Sequence[Sequence[float]],
                      kinetics_class: Optional[KineticsClass] = None) -> KineticsSpec:
    """
    w(x, y) = v(x) o y^N: append exponent columns N (m x p) for new species.
    At y = 1 the extended rates equal the original ones.
    """
    N = np.asarray(new_columns, dtype=float).reshape(spec.n_reactions, -1)
    M = np.hstack([spec.m_array.reshape(spec.n_reactions, -1), N])
    return KineticsSpec(
        kinetics_class=kinetics_class or spec.kinetics_class,
        rate_constants=spec.rate_constants,
        exponents=tuple(tuple(float(a) for a in row) for row in M),
        seed=spec.seed,
        stream=spec.stream,
    )


def append_reactions(spec: KineticsSpec, rate_constants: Sequence[float],
                     exponents: Sequence[Sequence[float]]) -> KineticsSpec:
    return KineticsSpec(
        kinetics_class=spec.kinetics_class,
        rate_constants=spec.rate_constants + tuple(float(k) for k in rate_constants),
        exponents=spec.exponents + tuple(tuple(float(a) for a in row) for row in exponents),
        seed=spec.seed,
        stream=spec.stream,
    )


def rational_field(crn: Crn, rate_constants: Sequence[Fraction], x: Sequence[Fraction]) -> List[Fraction]:
    """Exact mass-action field at a rational point."""
    sm = stoich_matrices(crn)
    rates = []
    for j, rxn in enumerate(crn.reactions):
        v = Fraction(rate_constants[j])
        for xi, a in zip(x, rxn.source.stoich):
            v *= Fraction(xi) ** a
        rates.append(v)
    return [sum((int(sm.gamma[i, j]) * rates[j] for j in range(crn.n_reactions)), Fraction(0))
            for i in range(crn.n_species)]
