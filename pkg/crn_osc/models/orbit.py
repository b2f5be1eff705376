# crn_osc/models/orbit.py

from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt

from crn_osc.config import config
from crn_osc.models.kinetics import KineticsSpec


class IntegratorConfig(BaseModel):
    """
    Tolerances and limits for one integration.

    Attributes:
        rtol, atol: embedded error control
        max_time: integration horizon
        max_steps: accepted-step budget
        stiff: start with the implicit method
        cap: state norm above which the run is declared unbounded
        stiff_switch_steps: explicit steps after which the implicit method takes over (0 disables)
        stop_at_equilibrium: end the run once the field vanishes to rest_tol
    """
    model_config = ConfigDict(frozen=True)

    rtol: PositiveFloat = config.RTOL_SCREEN
    atol: PositiveFloat = config.ATOL_SCREEN
    max_time: PositiveFloat = config.MAX_TIME
    max_steps: PositiveInt = config.MAX_STEPS
    stiff: bool = False
    cap: PositiveFloat = config.UNBOUNDED_CAP
    stiff_switch_steps: int = config.STIFF_SWITCH_STEPS
    stop_at_equilibrium: bool = True
    rest_tol: PositiveFloat = 1e-10

    @classmethod
    def screening(cls, **overrides) -> "IntegratorConfig":
        return cls(**overrides)

    @classmethod
    def certification(cls, **overrides) -> "IntegratorConfig":
        base = dict(rtol=config.RTOL_CERTIFY, atol=config.ATOL_CERTIFY, stop_at_equilibrium=False)
        base.update(overrides)
        return cls(**base)


class TrajectoryStatus(str, Enum):
    COMPLETED = "completed"
    UNBOUNDED = "unbounded"
    STEP_LIMIT = "step_limit"


class TrajectoryClass(str, Enum):
    CONVERGED = "converged"
    UNBOUNDED = "unbounded"
    OSCILLATORY_CANDIDATE = "oscillatory_candidate"
    UNDETERMINED = "undetermined"


class Trajectory(BaseModel):
    """Accepted solver steps; `dense` is an OdeSolution when requested."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    states: np.ndarray
    status: TrajectoryStatus
    n_steps: int
    method: str
    switched_to_stiff: bool = False
    stopped_at_equilibrium: bool = False
    dense: Optional[Any] = Field(default=None, exclude=True)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


class Verdict(str, Enum):
    NPPO = "NPPO"
    SPPO = "SPPO"
    DEGENERATE = "Degenerate"
    NOT_PERIODIC = "NotPeriodic"
    CANDIDATE = "Candidate"


def complex_pairs(values: Sequence[complex]) -> Tuple[Tuple[float, float], ...]:
    return tuple((float(np.real(z)), float(np.imag(z))) for z in values)


class OrbitRecord(BaseModel):
    """
    A located periodic orbit and, once certified, its Floquet data.

    Attributes:
        point: a point on the orbit
        period: least period T
        full_multipliers: eigenvalues of the monodromy matrix as (re, im)
        reduced_multipliers: multipliers in stoichiometry-class coordinates as (re, im)
        verdict: Candidate until certified
        residuals: named numerical residuals (return map, Liouville, ...)
        network_key: hex canonical key of the network, if known
        kinetics: parameter record the orbit belongs to
    """
    point: Tuple[float, ...]
    period: PositiveFloat
    full_multipliers: Tuple[Tuple[float, float], ...] = ()
    reduced_multipliers: Tuple[Tuple[float, float], ...] = ()
    verdict: Verdict = Verdict.CANDIDATE
    residuals: Dict[str, float] = Field(default_factory=dict)
    network_key: Optional[str] = None
    kinetics: Optional[KineticsSpec] = None
    seed: Optional[int] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @property
    def point_array(self) -> np.ndarray:
        return np.asarray(self.point, dtype=float)

    @property
    def full(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.full_multipliers])

    @property
    def reduced(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.reduced_multipliers])

    @property
    def is_certified(self) -> bool:
        return self.verdict in (Verdict.SPPO, Verdict.NPPO)
