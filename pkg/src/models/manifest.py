"""Run manifest, sweep and verification result models."""

from datetime import datetime
from typing import Literal

from pydantic import BaseModel, Field

SweepAxis = Literal["alpha", "eps"]


class RunManifest(BaseModel):
    """Everything needed to reproduce and locate the artifacts of one command."""

    command: list[str] = Field(default_factory=list, description="argv of the invocation")
    config: dict = Field(default_factory=dict, description="Snapshot of the run configuration")
    settings: dict = Field(default_factory=dict, description="Snapshot of application settings")
    version: str
    started_at: datetime = Field(default_factory=datetime.now)
    wall_clock_sec: float = 0.0
    outputs: dict[str, str] = Field(default_factory=dict, description="Artifact name -> path")
    verdicts: dict[str, str] = Field(default_factory=dict)


class SweepRow(BaseModel):
    """One run of a sweep; failed runs keep their error message."""

    axis: SweepAxis
    value: float
    alpha: float
    eps: float
    verdict: str | None = None
    T_est: float | None = None
    in_bracket: bool | None = None
    n_points_final: int | None = None
    wall_clock_sec: float = 0.0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class CheckResult(BaseModel):
    """One named check of a verification suite."""

    suite: str
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: str = ""


class SuiteReport(BaseModel):
    suite: str
    results: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]
