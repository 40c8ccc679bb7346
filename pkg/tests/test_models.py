"""Tests for data models."""

import math

import numpy as np
import pytest

from src.models.characteristics import CharPath
from src.models.field import GridFunction
from src.models.hypothesis import (
    ConstantWindow,
    FeasibleWindows,
    HypothesisReport,
    InequalityRecord,
    SigmaValue,
    StirlingCheck,
)
from src.models.manifest import CheckResult, RunManifest, SuiteReport, SweepRow
from src.models.solution import SolverConfig, SolverState, Trajectory

TWO_PI = 2.0 * math.pi


def record(name: str, status: str) -> InequalityRecord:
    return InequalityRecord(name=name, lhs=1.0, rhs=2.0, status=status, margin=1.0)


def report(records, alpha_ok=True, sigma_ok=True) -> HypothesisReport:
    window = ConstantWindow(name="C", lower=0.0)
    return HypothesisReport(
        theorem="1.2",
        alpha=0.2,
        eps=0.1,
        alpha_bound=0.24,
        alpha_ok=alpha_ok,
        alpha_margin=0.04,
        records=records,
        windows=FeasibleWindows(C0=window, C1=window, C2=window),
        sigma=SigmaValue(sigma=4.0, bound=4.0, sigma_alpha_lt_1=sigma_ok),
    )


class TestHypothesisModels:
    """Tests for hypothesis report models."""

    def test_overall_is_conjunction(self):
        """Test that overall needs α, σ and every record."""
        assert report([record("a", "satisfied")]).overall
        assert not report([record("a", "violated")]).overall
        assert not report([record("a", "satisfied")], alpha_ok=False).overall
        assert not report([record("a", "satisfied")], sigma_ok=False).overall

    def test_inconclusive_does_not_falsify(self):
        """Test that inconclusive records leave overall true."""
        assert report([record("a", "satisfied"), record("b", "inconclusive")]).overall

    def test_record_lookup(self):
        """Test lookup by name and KeyError for unknown names."""
        result = report([record("A3:m1", "satisfied")])
        assert result.record("A3:m1").satisfied
        with pytest.raises(KeyError):
            result.record("A3:m2")

    def test_constant_window(self):
        """Test the open window and its unbounded form."""
        window = ConstantWindow(name="C1", lower=1.0, upper=2.0)
        assert window.feasible
        assert window.width == 1.0
        assert window.contains(1.5)
        assert not window.contains(1.0)
        assert not window.contains(2.0)
        unbounded = ConstantWindow(name="C0", lower=1.0)
        assert unbounded.width is None
        assert unbounded.contains(1e300)

    def test_empty_window(self):
        """Test that lower >= upper is infeasible."""
        window = ConstantWindow(name="C2", lower=2.0, upper=1.0)
        feasible = ConstantWindow(name="C", lower=0.0)
        assert not window.feasible
        assert not FeasibleWindows(C0=feasible, C1=feasible, C2=window).feasible

    def test_stirling_ratio(self):
        """Test that the ratio undoes the logarithms."""
        check = StirlingCheck(
            n=3, alpha=0.5, log_lhs=math.log(3.0), log_rhs=math.log(6.0), holds=True
        )
        assert check.ratio == pytest.approx(0.5)


class TestRunModels:
    """Tests for trajectory and path models."""

    def test_trajectory_append_requires_later_time(self, minus_sine):
        """Test that snapshots must be strictly ordered in time."""
        trajectory = Trajectory(config=SolverConfig(alpha=0.5, n_points=64))
        trajectory.append(SolverState(u=minus_sine, t=0.1))
        with pytest.raises(ValueError):
            trajectory.append(SolverState(u=minus_sine, t=0.1))
        assert trajectory.times == [0.1]
        assert trajectory.final.t == 0.1

    def test_trajectory_fork_is_independent(self, minus_sine):
        """Test that appending to a fork leaves the original unchanged."""
        trajectory = Trajectory(config=SolverConfig(alpha=0.5, n_points=64))
        trajectory.append(SolverState(u=minus_sine, t=0.1))
        trajectory.dense_times.append(0.1)
        fork = trajectory.fork()
        fork.append(SolverState(u=minus_sine, t=0.2))
        fork.dense_times.append(0.2)
        assert trajectory.times == [0.1]
        assert trajectory.dense_times == [0.1]
        assert fork.times == [0.1, 0.2]
        assert fork.snapshots[0] is trajectory.snapshots[0]
        assert trajectory.nonfinite_at is None

    def test_initial_state(self, minus_sine):
        """Test the stored initial norm and mean."""
        state = SolverState.initial(minus_sine)
        assert state.l2_initial == pytest.approx(math.sqrt(math.pi))
        assert state.mean_initial == pytest.approx(0.0, abs=1e-15)
        assert state.t == 0.0

    def test_state_rejects_negative_time(self, minus_sine):
        """Test that time is non-negative."""
        with pytest.raises(ValueError):
            SolverState(u=minus_sine, t=-1.0)

    def test_char_path_series(self):
        """Test access to the sampled v_n."""
        path = CharPath(
            x0=0.0, times=[0.0, 0.1], positions=[0.0, 0.0], vn_samples={1: [-1.0, -1.1]}
        )
        assert path.series(1) == [-1.0, -1.1]
        with pytest.raises(KeyError):
            path.series(2)

    def test_grid_function_repr(self):
        """Test the short repr."""
        u = GridFunction.from_function(np.sin, TWO_PI, 16)
        assert repr(u) == f"GridFunction(domain_length={TWO_PI}, n_points=16)"


class TestManifestModels:
    """Tests for manifest, sweep and suite models."""

    def test_sweep_row_failure(self):
        """Test that a row with an error message counts as failed."""
        ok = SweepRow(axis="alpha", value=0.2, alpha=0.2, eps=0.1, verdict="breaking")
        bad = SweepRow(axis="eps", value=0.3, alpha=0.2, eps=0.3, error="ResolutionError: tail")
        assert not ok.failed
        assert bad.failed

    def test_sweep_row_rejects_unknown_axis(self):
        """Test that only alpha and eps can be swept."""
        with pytest.raises(ValueError):
            SweepRow(axis="n_points", value=64, alpha=0.2, eps=0.1)

    def test_suite_report(self):
        """Test passed and failures of a suite."""
        results = [
            CheckResult(suite="lemmas", name="a", passed=True),
            CheckResult(suite="lemmas", name="b", passed=False, value=2.0, threshold=1.0),
        ]
        suite = SuiteReport(suite="lemmas", results=results)
        assert not suite.passed
        assert [r.name for r in suite.failures] == ["b"]
        assert SuiteReport(suite="empty").passed

    def test_manifest_json(self):
        """Test that a manifest survives JSON serialization."""
        manifest = RunManifest(
            command=["whitham", "simulate", "run.yaml"],
            config={"alpha": 0.3},
            version="0.1.0",
            outputs={"trajectory": "out/trajectory.csv"},
            verdicts={"run": "breaking"},
        )
        restored = RunManifest.model_validate_json(manifest.model_dump_json())
        assert restored == manifest
