"""Data models for fields, runs, diagnostics and reports."""

from src.models.characteristics import BreakingReport, CharPath, SlopeSeries
from src.models.field import Alpha, GridFunction
from src.models.hypothesis import DatumProfile, HypothesisReport, InequalityRecord
from src.models.manifest import CheckResult, RunManifest, SuiteReport, SweepRow
from src.models.quadrature import DeltaPolicy, SplitEval
from src.models.solution import RunConfig, SolverConfig, SolverState, Trajectory

__all__ = [
    "Alpha",
    "BreakingReport",
    "CharPath",
    "CheckResult",
    "DatumProfile",
    "DeltaPolicy",
    "GridFunction",
    "HypothesisReport",
    "InequalityRecord",
    "RunConfig",
    "RunManifest",
    "SlopeSeries",
    "SolverConfig",
    "SolverState",
    "SplitEval",
    "SuiteReport",
    "SweepRow",
    "Trajectory",
]
