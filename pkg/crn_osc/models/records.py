# crn_osc/models/records.py

from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, NonNegativeInt, model_validator

from crn_osc import __version__
from crn_osc.models.orbit import OrbitRecord, TrajectoryClass


class RunRecord(BaseModel):
    """
    Everything needed to replay one command.

    Attributes:
        command: command name
        config: tolerances, ranges and seeds in effect
        inputs: input keys or file names
        outputs: command results
        wall_time: seconds
        version: package version that produced the record
    """
    command: str
    config: Dict[str, Any] = Field(default_factory=dict)
    inputs: Dict[str, Any] = Field(default_factory=dict)
    outputs: Dict[str, Any] = Field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__
    created_at: datetime = Field(default_factory=datetime.now)
    schema_version: int = 1


class TableCell(BaseModel):
    """One (k,l) block of the census table."""
    k: int
    l: int
    total: NonNegativeInt
    ma_sppo_lower: NonNegativeInt = 0
    ma_by_inheritance: NonNegativeInt = 0
    pl_sppo_lower: NonNegativeInt = 0
    pl_by_inheritance: NonNegativeInt = 0
    partial: bool = False
    provenance: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _ordered(self) -> "TableCell":
        for label, inherited, lower in (("mass action", self.ma_by_inheritance, self.ma_sppo_lower),
                                        ("power law", self.pl_by_inheritance, self.pl_sppo_lower)):
            if not inherited <= lower <= self.total:
                raise ValueError(f"{label} counts violate by_inheritance <= sppo_lower <= total "
                                 f"({inherited}, {lower}, {self.total})")
        return self

    def as_row(self) -> Dict[str, Any]:
        row = self.model_dump(exclude={"provenance"})
        row["provenance"] = ";".join(f"{k}={v}" for k, v in sorted(self.provenance.items()))
        return row


class SearchResult(BaseModel):
    """
    Outcome of a random-parameter oscillation search on one network.

    Attributes:
        draws: parameter draws simulated
        first_candidate: index of the first draw classified as oscillatory
        classes: count per trajectory class
        orbit: certified (or at least located) orbit, if any
    """
    network_key: str
    draws: NonNegativeInt = 0
    first_candidate: Optional[int] = None
    classes: Dict[TrajectoryClass, int] = Field(default_factory=dict)
    orbit: Optional[OrbitRecord] = None

    @property
    def found_candidate(self) -> bool:
        return self.first_candidate is not None


class SensitivityRow(BaseModel):
    samples: int
    detected: int
    total: int

    @property
    def fraction(self) -> float:
        return self.detected / self.total if self.total else 0.0


class AppendixBCheck(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class AppendixBReport(BaseModel):
    checks: List[AppendixBCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def failures(self) -> List[AppendixBCheck]:
        return [c for c in self.checks if not c.passed]

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(AppendixBCheck(name=name, passed=bool(passed), detail=detail))
