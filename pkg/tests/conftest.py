"""Shared fixtures."""

import math

import numpy as np
import pytest

from src.config import OutputSettings, Settings, use_settings
from src.models.field import GridFunction
from src.models.solution import SolverConfig
from src.services.solver import WhithamSolver

TWO_PI = 2.0 * math.pi


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path):
    """Default settings with output under the test's temporary directory."""
    config = Settings(output=OutputSettings(base_dir=str(tmp_path / "output"), field_dumps=False))
    use_settings(config)
    yield config
    use_settings(Settings())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def minus_sine():
    """φ(x) = -sin x on 64 points of [0, 2π)."""
    return GridFunction.from_function(lambda x: -np.sin(x), TWO_PI, 64)


@pytest.fixture(scope="session")
def burgers_run():
    """Dispersionless run from -sin x to t = 0.8; breaking happens at t = 1."""
    config = SolverConfig(
        alpha=1.0,
        dispersion=False,
        n_points=256,
        max_points=2048,
        dt_initial=1e-3,
        t_end=0.8,
    )
    u0 = GridFunction.from_function(lambda x: -np.sin(x), TWO_PI, 256)
    return WhithamSolver(config).run(u0)
