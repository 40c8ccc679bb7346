"""Solver configuration, state and trajectory models."""

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.field import MIN_POINTS, Alpha, GridFunction

StopReason = Literal["t_end", "breaking-detected", "under-resolved"]
DatumKind = Literal["scaled-sine", "bump-derivative"]


class SolverConfig(BaseModel):
    """Parameters of one integration run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(..., gt=0.0, le=3.0, description="Dispersion exponent")
    domain_length: float = Field(default=6.283185307179586, gt=0.0, description="Period L")
    n_points: int = Field(default=256, description="Initial grid size, power of two")
    dt_initial: float = Field(default=1e-3, gt=0.0, description="Largest time step")
    t_end: float = Field(default=1.0, gt=0.0, description="Final time")
    cfl_safety: float = Field(default=0.5, gt=0.0, le=1.0, description="CFL safety factor")
    dealias: bool = Field(default=True, description="Apply the 2/3 rule to the nonlinearity")
    slope_stop: float = Field(default=-1000.0, lt=0.0, description="Stop when min u_x drops below")
    checkpoint_every: int = Field(default=0, ge=0, description="Steps between checkpoints, 0 = off")
    dispersion: bool = Field(default=True, description="Include the HΛ^α term")
    nonlinear: bool = Field(default=True, description="Include the u u_x term")
    snapshot_every: int = Field(default=1, ge=1, description="Steps between stored snapshots")
    max_points: int = Field(default=1 << 20, description="Grid refinement cap")
    refine_threshold: float = Field(
        default=1e-8, gt=0.0, description="High-band energy fraction that triggers refinement"
    )
    sup_growth_limit: float = Field(
        default=2.0, gt=1.0, description="Bound on sup|u| / sup|u0| for a breaking verdict"
    )
    l2_drift_tolerance: float = Field(default=1e-6, gt=0.0, description="Warn above this drift")

    @model_validator(mode="after")
    def _check_grid(self) -> "SolverConfig":
        for name in ("n_points", "max_points"):
            value = getattr(self, name)
            if value < MIN_POINTS or value & (value - 1):
                raise ValueError(f"{name} must be a power of two >= {MIN_POINTS}, got {value}")
        if self.max_points < self.n_points:
            raise ValueError("max_points must not be below n_points")
        if self.dt_initial >= self.domain_length / self.n_points:
            raise ValueError(
                f"dt_initial {self.dt_initial} must be below the grid spacing "
                f"{self.domain_length / self.n_points}"
            )
        return self

    @property
    def exponent(self) -> Alpha:
        return Alpha(value=self.alpha)

    @property
    def switches(self) -> dict[str, bool]:
        return {"dealias": self.dealias, "dispersion": self.dispersion, "nonlinear": self.nonlinear}


class RunConfig(SolverConfig):
    """A named run: solver parameters plus the initial datum."""

    name: str = Field(default="run", description="Run name used in output paths")
    datum_kind: DatumKind = Field(default="scaled-sine", description="Initial profile family")
    datum_amplitude: float = Field(default=1.0, gt=0.0, description="Amplitude A")
    datum_width: float = Field(default=1.0, gt=0.0, description="Bump width lambda")
    eps: float = Field(default=0.1, gt=0.0, lt=1.0, description="Epsilon of the theorems")

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        """Load a flat YAML or JSON run file."""
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        return cls(**data)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.model_dump(include=set(SolverConfig.model_fields)))


class SolverState(BaseModel):
    """The solution at one time."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    u: GridFunction
    t: float = Field(default=0.0, ge=0.0)
    step_count: int = Field(default=0, ge=0)
    l2_initial: float = Field(default=0.0, ge=0.0)
    mean_initial: float = 0.0
    dudt: GridFunction | None = Field(default=None, description="Right-hand side at this state")
    finite: bool = True

    @classmethod
    def initial(cls, u0: GridFunction) -> "SolverState":
        return cls(u=u0, l2_initial=u0.l2_norm(), mean_initial=u0.mean())


class StepRecord(BaseModel):
    """Per-step summary written to the trajectory CSV."""

    t: float
    dt: float
    n_points: int
    min_slope: float
    sup_abs_u: float
    l2: float


class RefinementEvent(BaseModel):
    t: float
    step_count: int
    from_points: int
    to_points: int
    high_band: float


class Trajectory(BaseModel):
    """Time-ordered snapshots of a run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: SolverConfig
    snapshots: list[SolverState] = Field(default_factory=list)
    dense_times: list[float] = Field(default_factory=list, description="Every step time")
    records: list[StepRecord] = Field(default_factory=list)
    refinements: list[RefinementEvent] = Field(default_factory=list)
    stop_reason: StopReason = "t_end"
    nonfinite_at: float | None = Field(
        default=None, description="Time of a step that produced NaN or inf coefficients"
    )

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.snapshots]

    @property
    def final(self) -> SolverState:
        return self.snapshots[-1]

    def append(self, state: SolverState) -> None:
        if self.snapshots and state.t <= self.snapshots[-1].t:
            raise ValueError(f"snapshot time {state.t} not after {self.snapshots[-1].t}")
        self.snapshots.append(state)

    def fork(self) -> "Trajectory":
        """Copy with independent lists; the stored states are immutable and shared."""
        return self.model_copy(
            update={
                "snapshots": list(self.snapshots),
                "dense_times": list(self.dense_times),
                "records": list(self.records),
                "refinements": list(self.refinements),
            }
        )


class Checkpoint(BaseModel):
    """A saved state with the run history needed to continue the same trajectory."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: SolverConfig
    state: SolverState
    history: Trajectory | None = None


class ConservedDiagnostics(BaseModel):
    l2_drift: float = Field(..., description="|∥u∥ - ∥u0∥| / ∥u0∥")
    mean_drift: float = Field(..., description="|mean - mean0| / max(|mean0|, ∥u0∥/√L)")


class EnergyIdentity(BaseModel):
    """d/dt ∥u_xx∥² against -5 ∫ u_x (u_xx)²."""

    lhs: float
    rhs: float
    residual: float


class UxxBoundCheck(BaseModel):
    """∥u_xx(t)∥ against ∥φ''∥ ((1-ε) q(t))^{-5/(2(1-ε)²)} along a run."""

    times: list[float]
    norms: list[float]
    bounds: list[float]
    holds: bool
    max_ratio: float
