# crn_osc/models/network.py

from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator


class Complex(BaseModel):
    """
    A formal nonnegative-integer combination of species.

    Attributes:
        stoich: stoichiometry of each species, length = species count
    """
    model_config = ConfigDict(frozen=True)

    stoich: Tuple[int, ...]

    @field_validator("stoich")
    @classmethod
    def _nonnegative(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(a < 0 for a in v):
            raise ValueError(f"negative stoichiometry in complex {v}")
        return v

    @classmethod
    def zero(cls, n: int) -> "Complex":
        return cls(stoich=(0,) * n)

    @classmethod
    def unit(cls, n: int, i: int, a: int = 1) -> "Complex":
        s = [0] * n
        s[i] = a
        return cls(stoich=tuple(s))

    @property
    def order(self) -> int:
        return sum(self.stoich)

    @property
    def is_zero(self) -> bool:
        return self.order == 0

    @property
    def is_at_most_bimolecular(self) -> bool:
        return self.order <= 2

    def extended(self, extra: Sequence[int]) -> "Complex":
        return Complex(stoich=self.stoich + tuple(extra))

    def restricted(self, species: Sequence[int]) -> Tuple[int, ...]:
        return tuple(self.stoich[i] for i in species)


class Reaction(BaseModel):
    """An ordered pair of distinct complexes (source -> target)."""
    model_config = ConfigDict(frozen=True)

    source: Complex
    target: Complex

    @model_validator(mode="after")
    def _check(self) -> "Reaction":
        if len(self.source.stoich) != len(self.target.stoich):
            raise ValueError("source and target complexes have different lengths")
        if self.source == self.target:
            raise ValueError(f"source and target complexes coincide: {self.source.stoich}")
        return self

    @classmethod
    def of(cls, source: Sequence[int], target: Sequence[int]) -> "Reaction":
        return cls(source=Complex(stoich=tuple(source)), target=Complex(stoich=tuple(target)))

    @property
    def n_species(self) -> int:
        return len(self.source.stoich)

    @property
    def vector(self) -> Tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.source.stoich, self.target.stoich))

    @property
    def is_flow(self) -> bool:
        """0 -> A or A -> 0 with A a single species of stoichiometry one."""
        s, t = self.source, self.target
        if s.is_zero:
            return t.order == 1
        if t.is_zero:
            return s.order == 1
        return False

    @property
    def is_at_most_bimolecular(self) -> bool:
        return self.source.is_at_most_bimolecular and self.target.is_at_most_bimolecular

    def reverse(self) -> "Reaction":
        return Reaction(source=self.target, target=self.source)


class Crn(BaseModel):
    """
    A chemical reaction network: species count plus an ordered sequence of
    pairwise distinct irreversible reactions. Species taking part in no
    reaction are allowed.
    """
    model_config = ConfigDict(frozen=True)

    n_species: PositiveInt
    reactions: Tuple[Reaction, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "Crn":
        for rxn in self.reactions:
            if rxn.n_species != self.n_species:
                raise ValueError(
                    f"reaction has {rxn.n_species} species, network has {self.n_species}"
                )
        if len(set(self.reactions)) != len(self.reactions):
            raise ValueError("reactions are not pairwise distinct")
        return self

    @classmethod
    def from_pairs(cls, n_species: int, pairs: Sequence[Tuple[Sequence[int], Sequence[int]]]) -> "Crn":
        return cls(n_species=n_species, reactions=tuple(Reaction.of(s, t) for s, t in pairs))

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    def with_reactions(self, extra: Sequence[Reaction]) -> "Crn":
        return Crn(n_species=self.n_species, reactions=self.reactions + tuple(extra))


class StoichMatrices(BaseModel):
    """
    Gamma_l, Gamma_r and Gamma = Gamma_r - Gamma_l (n x m) with exact rank.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma_l: np.ndarray
    gamma_r: np.ndarray
    gamma: np.ndarray
    rank_r: int

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    @property
    def m(self) -> int:
        return self.gamma.shape[1]


class BasisFactorization(BaseModel):
    """
    Gamma = Gamma0 * Q exactly, with the columns of Gamma0 a basis of im Gamma.

    Attributes:
        gamma0: n x r exact rational matrix
        q: r x m exact rational matrix
        pivots: column indices of Gamma chosen as the basis (empty if rebased)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma0: sympy.Matrix
    q: sympy.Matrix
    pivots: Tuple[int, ...] = ()

    @property
    def rank(self) -> int:
        return self.gamma0.shape[1]

    @property
    def gamma0_float(self) -> np.ndarray:
        return np.array(self.gamma0.tolist(), dtype=float)

    @property
    def q_float(self) -> np.ndarray:
        return np.array(self.q.tolist(), dtype=float)

    def rebased(self, r_matrix: Sequence[Sequence]) -> "BasisFactorization":
        """Change of basis Gamma0' = Gamma0 R, Q' = R^-1 Q, R invertible."""
        R = sympy.Matrix([[sympy.Rational(Fraction(a).numerator, Fraction(a).denominator) for a in row]
                          for row in r_matrix])
        if R.shape != (self.rank, self.rank) or R.det() == 0:
            raise ValueError("rebasing matrix must be square, invertible, of size rank")
        return BasisFactorization(gamma0=self.gamma0 * R, q=R.inv() * self.q)


class PnGraph(BaseModel):
    """
    Edge-weighted bipartite digraph of a CRN. Species vertices are
    0..n_species-1, reaction vertices n_species..n_species+n_reactions-1.
    An arc (X, R, w) means X has stoichiometry w in the source of R; an arc
    (R, X, w) means stoichiometry w in the target.
    """
    model_config = ConfigDict(frozen=True)

    n_species: int
    n_reactions: int
    arcs: Tuple[Tuple[int, int, int], ...]

    @model_validator(mode="after")
    def _check(self) -> "PnGraph":
        n = self.n_species
        for u, v, w in self.arcs:
            if w <= 0:
                raise ValueError("arc weights must be positive")
            if (u < n) == (v < n):
                raise ValueError(f"arc {u}->{v} does not cross the bipartition")
        return self

    @property
    def n_vertices(self) -> int:
        return self.n_species + self.n_reactions

    def weight_matrices(self) -> Tuple[List[List[int]], List[List[int]]]:
        """Source (L) and target (R) weights as n x m nested lists."""
        n, m = self.n_species, self.n_reactions
        L = [[0] * m for _ in range(n)]
        R = [[0] * m for _ in range(n)]
        for u, v, w in self.arcs:
            if u < n:
                L[u][v - n] = w
            else:
                R[v][u - n] = w
        return L, R


class EnumSpec(BaseModel):
    """
    A (k,l) cell: fully open, at most bimolecular, k species, l non-flow reactions.

    Attributes:
        k: species count
        l: non-flow reaction count
    """
    model_config = ConfigDict(frozen=True)

    k: PositiveInt
    l: int = Field(ge=0)

    @property
    def cell(self) -> Tuple[int, int]:
        return self.k, self.l


class CanonicalKey(BaseModel):
    """Byte string identifying a CRN's isomorphism class."""
    model_config = ConfigDict(frozen=True)

    data: bytes

    @property
    def hex(self) -> str:
        return self.data.hex()

    @classmethod
    def from_hex(cls, text: str) -> "CanonicalKey":
        return cls(data=bytes.fromhex(text.strip()))

    @property
    def shape(self) -> Tuple[int, int]:
        """(species, reactions) of the keyed network."""
        return self.data[0], self.data[1]

    def __lt__(self, other: "CanonicalKey") -> bool:
        return self.data < other.data

    def __str__(self) -> str:
        return self.hex
