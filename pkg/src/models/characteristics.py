"""Characteristic path, slope series and breaking verdict models."""

from typing import Literal

from pydantic import BaseModel, Field

Verdict = Literal["breaking", "no-breaking-by-t_end", "under-resolved"]


class CharPath(BaseModel):
    """One characteristic X(t; x0) with v_n = ∂_x^n u sampled along it."""

    x0: float = Field(..., description="Seed, X(0) = x0")
    times: list[float] = Field(default_factory=list)
    positions: list[float] = Field(default_factory=list, description="Unwrapped X(t)")
    vn_samples: dict[int, list[float]] = Field(default_factory=dict)
    truncated: bool = Field(default=False, description="Path left the resolved time range")

    def series(self, n: int) -> list[float]:
        return self.vn_samples[n]


class SlopeSeries(BaseModel):
    """m(t) = inf_x u_x and q(t) = m(0)/m(t) over the snapshots."""

    times: list[float]
    m: list[float]
    argmin_x: list[float]
    q: list[float]
    r: dict[float, list[float]] | None = Field(
        default=None, description="Per-seed r(t) = m(0)/v_1(t; x0)"
    )
    degenerate: bool = Field(default=False, description="m(t) >= 0 at some snapshot")


class FitResult(BaseModel):
    intercept: float
    slope: float
    t_root: float
    samples: int


class BreakingReport(BaseModel):
    """Blow-up verdict with the estimated time and the theorem bracket."""

    verdict: Verdict
    stop_reason: str
    T_est: float | None = None
    T_lower: float
    T_upper: float
    in_bracket: bool | None = None
    sup_u_max: float
    sup_u_initial: float
    m_initial: float
    m_final: float
    fit_quality: float | None = Field(default=None, description="Relative disagreement of fits")
    fit_slope: float | None = None
    monotone: bool = True
    refinement_stable: bool | None = None
    nonfinite_at: float | None = Field(default=None, description="Time NaN or inf appeared")
    eps: float
    notes: list[str] = Field(default_factory=list)


class SigmaSetDiagnostic(BaseModel):
    """Nesting of Σ(t) = {x : v_1(t;x) <= (1-ε) m(t)} in Lagrangian labels."""

    t1: float
    t2: float
    nested: bool
    violation_measure: float
    size_t1: int
    size_t2: int
    k1_ratio: float = Field(..., description="max |K_1| / (ε² m²) over the interval ends")
    k1_small: bool


class QIntegralBound(BaseModel):
    """∫_0^t q^{-s} against its closed-form upper bound."""

    s: float
    t: float
    lhs: float
    rhs: float
    holds: bool
    worst_ratio: float = Field(..., description="max over sampled times of lhs/rhs")


class RatioBracketDiagnostic(BaseModel):
    """q <= r <= q/(1-ε) and (1+ε)m(0) <= dr/dt <= (1-ε)m(0) on paths in Σ."""

    paths: int
    sandwich_holds: bool
    derivative_holds: bool
    worst_sandwich: float
    worst_derivative: float


class KnDomination(BaseModel):
    """Measured sup|K_n| against kn_bound at the policy radius."""

    n: int
    times: list[float]
    measured: list[float]
    bounds: list[float]
    violations: int
