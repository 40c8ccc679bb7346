"""Solver, characteristics, hypothesis checks, exports and run orchestration."""

from src.services.characteristics import advect, breaking_detect, slope_series
from src.services.hypothesis import check_theorem_11, check_theorem_12, datum_factory
from src.services.pipeline import simulate, sweep
from src.services.solver import WhithamSolver, step_etd

__all__ = [
    "WhithamSolver",
    "advect",
    "breaking_detect",
    "check_theorem_11",
    "check_theorem_12",
    "datum_factory",
    "simulate",
    "slope_series",
    "step_etd",
    "sweep",
]
