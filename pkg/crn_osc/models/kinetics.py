# crn_osc/models/kinetics.py

from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from crn_osc.config import config


class KineticsClass(str, Enum):
    MASS_ACTION = "mass_action"
    PHYSICAL_POWER_LAW = "physical_power_law"
    FIXED_POWER_LAW = "fixed_power_law"


class SamplingRanges(BaseModel):
    """Uniform sampling bounds; defaults come from the global config."""
    model_config = ConfigDict(frozen=True)

    rates: Tuple[float, float] = config.RATE_RANGE
    initial: Tuple[float, float] = config.INITIAL_RANGE
    exponents: Tuple[float, float] = config.EXPONENT_RANGE

    @field_validator("rates", "initial", "exponents")
    @classmethod
    def _ordered_positive(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = v
        if not 0 < lo <= hi:
            raise ValueError(f"range must satisfy 0 < lo <= hi, got {v}")
        return v


class KineticsSpec(BaseModel):
    """
    Power-law rates v(x) = K o x^M.

    Attributes:
        kinetics_class: mass action, physical power law or fixed power law
        rate_constants: K, one positive entry per reaction
        exponents: M, m x n (reactions by species)
        seed: rng seed the spec was drawn with, if sampled
        stream: rng stream index, if sampled
    """
    model_config = ConfigDict(frozen=True)

    kinetics_class: KineticsClass
    rate_constants: Tuple[float, ...]
    exponents: Tuple[Tuple[float, ...], ...]
    seed: Optional[int] = None
    stream: Optional[int] = None

    @model_validator(mode="after")
    def _check(self) -> "KineticsSpec":
        if any(not k > 0 for k in self.rate_constants):
            raise ValueError("rate constants must be positive")
        if len(self.exponents) != len(self.rate_constants):
            raise ValueError("exponent matrix needs one row per rate constant")
        if len({len(row) for row in self.exponents}) > 1:
            raise ValueError("exponent rows have different lengths")
        return self

    @property
    def n_reactions(self) -> int:
        return len(self.rate_constants)

    @property
    def k_array(self) -> np.ndarray:
        return np.asarray(self.rate_constants, dtype=float)

    @property
    def m_array(self) -> np.ndarray:
        if not self.exponents:
            return np.zeros((0, 0))
        return np.asarray(self.exponents, dtype=float)
