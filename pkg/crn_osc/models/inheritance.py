# crn_osc/models/inheritance.py

from typing import Annotated, Dict, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from crn_osc.models.kinetics import KineticsClass
from crn_osc.models.orbit import OrbitRecord


class AddDependentReaction(BaseModel):
    """A new reaction whose vector lies in the stoichiometric subspace, at rate eps * f(x)."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["dependent_reaction"] = "dependent_reaction"
    source: Tuple[int, ...]
    target: Tuple[int, ...]
    epsilon: float
    exponents: Optional[Tuple[float, ...]] = None

    def lift(self, point) -> np.ndarray:
        return np.asarray(point, dtype=float)


class AddAllFlows(BaseModel):
    """0 <-> X_i for every species with mass-action constants eps * x0_i and eps."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["all_flows"] = "all_flows"
    epsilon: float
    anchor: Tuple[float, ...]

    def lift(self, point) -> np.ndarray:
        return np.asarray(point, dtype=float)


class AddTrivialSpecies(BaseModel):
    """A new species with the same stoichiometry on both sides of each reaction."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["trivial_species"] = "trivial_species"
    stoichiometry: Tuple[int, ...]

    def lift(self, point) -> np.ndarray:
        return np.append(np.asarray(point, dtype=float), 1.0)


class AddSpeciesWithFlow(BaseModel):
    """
    A new species Y entering reactions with arbitrary left/right stoichiometry,
    plus 0 <-> Y relaxing y to 1 at rate 1/eps.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["species_with_flow"] = "species_with_flow"
    left: Tuple[int, ...]
    right: Tuple[int, ...]
    epsilon: float

    @model_validator(mode="after")
    def _check(self) -> "AddSpeciesWithFlow":
        if len(self.left) != len(self.right):
            raise ValueError("left and right stoichiometries have different lengths")
        return self

    def lift(self, point) -> np.ndarray:
        return np.append(np.asarray(point, dtype=float), 1.0)


Transformation = Annotated[
    Union[AddDependentReaction, AddAllFlows, AddTrivialSpecies, AddSpeciesWithFlow],
    Field(discriminator="kind"),
]


class TransformationStep(BaseModel):
    """Wrapper so a single transformation can be parsed from JSON."""
    transformation: Transformation


class EpsilonSearchResult(BaseModel):
    """
    Smallest grid epsilon at which the orbit persisted.

    Attributes:
        epsilon: accepted epsilon
        orbit: certified orbit of the extended system at that epsilon
        distances: Hausdorff distance to the lifted original orbit, per tried epsilon
        failures: reason per epsilon that did not certify
    """
    epsilon: float
    orbit: OrbitRecord
    distances: Dict[float, float] = Field(default_factory=dict)
    failures: Dict[float, str] = Field(default_factory=dict)


class ClosureReport(BaseModel):
    """
    Inheritors of one closure step.

    Attributes:
        target: (k, l) cell the inheritors belong to
        inheritor_keys: sorted hex keys of the non-flow cores
        provenance: inheritor key -> first seed key it was generated from
    """
    target: Tuple[int, int]
    inheritor_keys: Tuple[str, ...] = ()
    provenance: Dict[str, str] = Field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.inheritor_keys)


class AtomSet(BaseModel):
    kinetics_class: KineticsClass
    keys: Tuple[str, ...] = ()
