"""Models for the real-space singular integral."""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SplitEval(BaseModel):
    """One evaluation of the kernel integral split at radius delta."""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(..., gt=0.0, description="Split radius")
    boundary_term: float = Field(..., description="Integration-by-parts boundary term")
    inner_term: float = Field(..., description="Integral over |y| < delta")
    outer_term: float = Field(..., description="Integral over delta < |y| < L/2")
    total: float = Field(..., description="boundary + inner + outer")
    tail_term: float = Field(default=0.0, description="Contribution of |y| > L/2 on the line")
    tail_bound: float = Field(default=0.0, ge=0.0, description="Bound on the discarded tail")
    abs_error: float = Field(default=0.0, ge=0.0, description="Summed quadrature error estimate")

    @model_validator(mode="after")
    def _total_is_sum(self) -> "SplitEval":
        parts = self.boundary_term + self.inner_term + self.outer_term
        scale = max(abs(self.boundary_term), abs(self.inner_term), abs(self.outer_term), 1.0)
        if abs(self.total - parts) > 1e-12 * scale:
            raise ValueError(f"total {self.total} differs from the sum of pieces {parts}")
        return self

    @property
    def periodic_total(self) -> float:
        """Whole-line integral of the periodic field (total plus tail)."""
        return self.total + self.tail_term


class DeltaPolicy(BaseModel):
    """Split radii used along a run: q, q^sigma and n^{-1/alpha} q^sigma."""

    alpha: float = Field(..., gt=0.0, lt=1.0)
    sigma: float = Field(..., gt=0.0)
    scale: float = Field(default=1.0, gt=0.0, description="Multiplies every radius")

    def radius(self, n: int, q: float) -> float:
        if n < 0:
            raise ValueError(f"derivative order must be non-negative, got {n}")
        if n == 0:
            return self.scale * q
        if n == 1:
            return self.scale * q**self.sigma
        return self.scale * n ** (-1.0 / self.alpha) * q**self.sigma
