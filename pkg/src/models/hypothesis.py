"""Initial datum and theorem hypothesis report models."""

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.field import GridFunction

Theorem = Literal["1.1", "1.2"]
ProfileKind = Literal["scaled-sine", "bump-derivative", "custom"]
Status = Literal["satisfied", "violated", "inconclusive"]


class DatumProfile(BaseModel):
    """Initial datum φ on the grid, with its steepness."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: ProfileKind
    amplitude: float = Field(..., gt=0.0, description="Amplitude A")
    width: float = Field(..., gt=0.0, description="Width lambda (period for sines)")
    grid: GridFunction
    inf_slope: float = Field(..., lt=0.0, description="inf φ', computed on the grid")
    shape_constant: float = Field(..., gt=0.0, description="-inf φ' / A")


class InequalityRecord(BaseModel):
    """One hypothesis inequality lhs < rhs."""

    name: str
    lhs: float
    rhs: float
    status: Status
    margin: float = Field(..., description="rhs - lhs; positive when satisfied")
    note: str = ""

    @property
    def satisfied(self) -> bool:
        return self.status == "satisfied"


class ConstantWindow(BaseModel):
    """Open interval of admissible values for one constant; None is unbounded."""

    name: str
    lower: float
    upper: float | None = None

    @property
    def feasible(self) -> bool:
        return self.upper is None or self.lower < self.upper

    @property
    def width(self) -> float | None:
        return None if self.upper is None else self.upper - self.lower

    def contains(self, value: float) -> bool:
        return value > self.lower and (self.upper is None or value < self.upper)


class FeasibleWindows(BaseModel):
    C0: ConstantWindow
    C1: ConstantWindow
    C2: ConstantWindow

    @property
    def feasible(self) -> bool:
        return self.C0.feasible and self.C1.feasible and self.C2.feasible


class GevreyReport(BaseModel):
    n_max: int
    first_violation: int | None = None
    inconclusive: list[int] = Field(default_factory=list)


class SigmaValue(BaseModel):
    sigma: float
    bound: float
    sigma_alpha_lt_1: bool


class HypothesisReport(BaseModel):
    """Every hypothesis of one theorem for a given datum, exponent and constants."""

    theorem: Theorem
    alpha: float
    eps: float
    alpha_bound: float
    alpha_ok: bool
    alpha_margin: float
    records: list[InequalityRecord] = Field(default_factory=list)
    constants: dict[str, float] = Field(default_factory=dict)
    windows: FeasibleWindows
    gevrey: GevreyReport | None = None
    sigma: SigmaValue
    overall: bool = False

    @model_validator(mode="after")
    def _conjunction(self) -> "HypothesisReport":
        # Inconclusive records do not falsify.
        self.overall = (
            self.alpha_ok
            and self.sigma.sigma_alpha_lt_1
            and all(r.status != "violated" for r in self.records)
        )
        return self

    def record(self, name: str) -> InequalityRecord:
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)


class StirlingCheck(BaseModel):
    """Combinatorial sum against its closed-form bound, in log space."""

    n: int
    alpha: float
    log_lhs: float
    log_rhs: float
    holds: bool

    @property
    def ratio(self) -> float:
        return math.exp(self.log_lhs - self.log_rhs)


class K1InitialCheck(BaseModel):
    """|K_1(0)| <= ∥φ∥_{H^{α+3/2+}} < ε² m(0)² at t = 0."""

    k1_sup: float
    sobolev_norm: float
    sobolev_exponent: float
    target: float
    holds: bool
    sobolev_holds: bool


class AmplitudeThreshold(BaseModel):
    """Smallest amplitude A* for which the steepness hypotheses hold."""

    theorem: Theorem
    targets: list[str]
    threshold: float | None = None
    lower: float
    upper: float
    iterations: int
