"""Tests for characteristic tracking and breaking diagnostics."""

import math

import numpy as np
import pytest

from src.errors import DomainError
from src.models.field import GridFunction
from src.models.quadrature import DeltaPolicy
from src.models.solution import SolverConfig
from src.services.characteristics import (
    advect,
    breaking_detect,
    crossing_time,
    k1_smallness,
    kn_domination,
    q_integral_bounds,
    ratio_bracket_diagnostic,
    refinement_agreement,
    residual_vn,
    sigma_set_diagnostic,
    slope_monotone,
    slope_series,
)
from src.services.solver import WhithamSolver

TWO_PI = 2.0 * math.pi
SEEDS = np.array([0.5, 1.0, 2.0])


@pytest.fixture(scope="module")
def breaking_run():
    """Burgers run from -sin x stopped once min u_x < -15."""
    return _burgers_breaking(256, 1e-3)


@pytest.fixture(scope="module")
def refined_breaking_run():
    """The same run on a grid twice as fine with half the time step."""
    return _burgers_breaking(512, 5e-4)


def _burgers_breaking(n_points: int, dt: float):
    config = SolverConfig(
        alpha=1.0,
        dispersion=False,
        n_points=n_points,
        max_points=16 * n_points,
        dt_initial=dt,
        t_end=1.5,
        slope_stop=-15.0,
    )
    u0 = GridFunction.from_function(lambda x: -np.sin(x), TWO_PI, n_points)
    return WhithamSolver(config).run(u0)


@pytest.fixture(scope="module")
def fractional_run():
    config = SolverConfig(alpha=0.3, n_points=64, dt_initial=1e-2, t_end=0.2)
    u0 = GridFunction.from_function(lambda x: -np.sin(x), TWO_PI, 64)
    return WhithamSolver(config).run(u0)


class TestAdvect:
    """Tests for characteristic paths through a trajectory."""

    def test_burgers_paths_are_straight(self, burgers_run):
        """Test X(t) = x0 - t sin x0 when u is constant along paths."""
        paths = advect(burgers_run, SEEDS, max_order=1)
        t = burgers_run.final.t
        for path, x0 in zip(paths, SEEDS):
            assert path.positions[-1] == pytest.approx(x0 - t * math.sin(x0), abs=1e-6)
            assert path.series(0)[-1] == pytest.approx(-math.sin(x0), abs=1e-6)

    def test_slope_along_burgers_paths(self, burgers_run):
        """Test v_1 = -cos x0 / (1 - t cos x0)."""
        paths = advect(burgers_run, SEEDS, max_order=1)
        t = burgers_run.final.t
        for path, x0 in zip(paths, SEEDS):
            c = math.cos(x0)
            assert path.series(1)[-1] == pytest.approx(-c / (1.0 - t * c), rel=1e-5)

    def test_samples_every_snapshot(self, burgers_run):
        """Test one sample per snapshot and orders 0..max_order."""
        (path,) = advect(burgers_run, [1.0], max_order=2)
        assert path.times == burgers_run.times
        assert sorted(path.vn_samples) == [0, 1, 2]
        assert not path.truncated

    def test_truncated_past_last_snapshot(self, burgers_run):
        """Test that t_max beyond the run marks paths truncated."""
        (path,) = advect(burgers_run, [1.0], max_order=0, t_max=2.0)
        assert path.truncated
        assert path.times[-1] == burgers_run.final.t

    def test_stops_at_t_max(self, burgers_run):
        """Test that integration ends at the first snapshot past t_max."""
        (path,) = advect(burgers_run, [1.0], max_order=0, t_max=0.4)
        assert path.times[-1] == pytest.approx(0.4, abs=2e-3)

    def test_rejects_high_order(self, burgers_run):
        """Test that v_n is tracked only up to n = 4."""
        with pytest.raises(DomainError):
            advect(burgers_run, [1.0], max_order=5)

    @pytest.mark.parametrize("n", [0, 1])
    def test_residual_vanishes_for_burgers(self, burgers_run, n):
        """Test dv_n/dt + Σ C(n,j) v_j v_{n+1-j} ≈ 0 with no forcing."""
        (path,) = advect(burgers_run, [1.0], max_order=n + 1)
        residual = np.asarray(residual_vn(burgers_run, path, n))
        assert np.max(np.abs(residual)) < 1e-4

    def test_residual_needs_next_order(self, burgers_run):
        """Test that n + 1 must be sampled."""
        (path,) = advect(burgers_run, [1.0], max_order=1)
        with pytest.raises(DomainError):
            residual_vn(burgers_run, path, 1)

    @pytest.mark.parametrize("n", [1, 2])
    def test_dispersive_residual_is_second_order(self, n):
        """Test that the α = 0.3 residual shrinks fourfold when dt is halved."""
        u0 = GridFunction.from_function(lambda x: -np.sin(x), TWO_PI, 64)
        errors = []
        for dt in (1e-2, 5e-3, 2.5e-3):
            config = SolverConfig(alpha=0.3, n_points=64, dt_initial=dt, t_end=0.2)
            trajectory = WhithamSolver(config).run(u0)
            (path,) = advect(trajectory, [0.5], max_order=n + 1)
            errors.append(np.max(np.abs(residual_vn(trajectory, path, n))))
        assert errors[-1] < 1e-3
        assert errors[0] / errors[1] > 3.0
        assert errors[1] / errors[2] > 3.0


class TestSlopeSeries:
    """Tests for m(t) and q(t)."""

    def test_q_is_one_minus_t(self, burgers_run):
        """Test q(t) = m(0)/m(t) = 1 - t for Burgers."""
        slope = slope_series(burgers_run)
        assert slope.q[0] == 1.0
        assert np.allclose(slope.q, 1.0 - np.asarray(slope.times), atol=1e-4)
        assert not slope.degenerate

    def test_argmin_at_origin(self, burgers_run):
        """Test that the steepest point of -sin x stays at x = 0."""
        slope = slope_series(burgers_run)
        positions = np.mod(np.asarray(slope.argmin_x) + math.pi, TWO_PI) - math.pi
        assert np.max(np.abs(positions)) < 1e-6

    def test_ratios_per_seed(self, burgers_run):
        """Test r(t) = m(0)/v_1 keyed by seed."""
        paths = advect(burgers_run, SEEDS, max_order=1)
        slope = slope_series(burgers_run, paths)
        assert set(slope.r) == set(SEEDS.tolist())
        assert slope.r[0.5][0] == pytest.approx(1.0 / math.cos(0.5), rel=1e-8)

    def test_monotone(self, burgers_run):
        """Test that m(t) is non-increasing."""
        assert slope_monotone(slope_series(burgers_run))

    def test_degenerate_when_slope_is_positive(self):
        """Test that a datum with positive infimum slope is flagged."""
        config = SolverConfig(alpha=0.5, n_points=64, dt_initial=1e-2, t_end=0.02)
        u0 = GridFunction.from_function(lambda x: 0.0 * x, TWO_PI, 64)
        slope = slope_series(WhithamSolver(config).run(u0))
        assert slope.degenerate
        assert math.isinf(slope.q[-1])


class TestLemmaDiagnostics:
    """Tests for the q integrals, Σ nesting and the ratio bracket."""

    @pytest.mark.parametrize("s", [1.0, 2.0, 0.5])
    def test_q_integral_bounds_hold(self, burgers_run, s):
        """Test ∫ q^{-s} against its closed form on the Burgers run."""
        bound = q_integral_bounds(slope_series(burgers_run), 0.1, s)
        assert bound.holds
        assert bound.lhs <= bound.rhs
        assert bound.worst_ratio <= 1.0

    def test_q_integral_to_intermediate_time(self, burgers_run):
        """Test that t restricts the sampled times."""
        bound = q_integral_bounds(slope_series(burgers_run), 0.1, 2.0, t=0.5)
        assert bound.t == pytest.approx(0.5, abs=2e-3)
        assert bound.lhs == pytest.approx(1.0 / (1.0 - bound.t) - 1.0, rel=1e-4)

    def test_q_integral_rejects_non_positive_s(self, burgers_run):
        """Test that s must be positive."""
        with pytest.raises(DomainError):
            q_integral_bounds(slope_series(burgers_run), 0.1, 0.0)

    def test_sigma_sets_nest(self, burgers_run):
        """Test Σ(0.8) ⊆ Σ(0.4) and vanishing K_1 without dispersion."""
        diagnostic = sigma_set_diagnostic(burgers_run, 0.1, 0.4, 0.8)
        assert diagnostic.nested
        assert diagnostic.violation_measure == 0.0
        assert 0 < diagnostic.size_t2 <= diagnostic.size_t1
        assert diagnostic.k1_ratio == 0.0
        assert diagnostic.k1_small

    def test_sigma_rejects_reversed_times(self, burgers_run):
        """Test that t1 must not exceed t2."""
        with pytest.raises(DomainError):
            sigma_set_diagnostic(burgers_run, 0.1, 0.8, 0.4)

    def test_ratio_bracket(self, burgers_run):
        """Test q <= r <= q/(1-ε) and dr/dt = m(0) near the steepest point."""
        paths = advect(burgers_run, np.linspace(-0.2, 0.2, 9), max_order=1)
        diagnostic = ratio_bracket_diagnostic(paths, slope_series(burgers_run), 0.1)
        assert diagnostic.paths == 9
        assert diagnostic.sandwich_holds
        assert diagnostic.derivative_holds

    def test_ratio_bracket_skips_paths_outside_sigma(self, burgers_run):
        """Test that paths far from the steepest point are not counted."""
        paths = advect(burgers_run, [2.0, 3.0], max_order=1)
        diagnostic = ratio_bracket_diagnostic(paths, slope_series(burgers_run), 0.1)
        assert diagnostic.paths == 0

    def test_k1_smallness_without_dispersion(self, burgers_run):
        """Test that K_1 vanishes when dispersion is off."""
        assert max(k1_smallness(burgers_run, 0.1)) == 0.0

    @pytest.mark.parametrize("n", [0, 1])
    def test_kn_domination(self, fractional_run, n):
        """Test sup|K_n| <= kn_bound at the policy radius along a run."""
        policy = DeltaPolicy(alpha=0.3, sigma=1.5)
        result = kn_domination(fractional_run, n, slope_series(fractional_run), policy)
        assert result.violations == 0
        assert len(result.measured) == len(fractional_run.snapshots)


class TestCrossingTime:
    """Tests for slope level crossings."""

    def test_burgers_crossing(self, burgers_run):
        """Test that m = -2 is crossed at t = 1/2."""
        assert crossing_time(burgers_run, -2.0) == pytest.approx(0.5, abs=1e-3)

    def test_level_not_reached(self, burgers_run):
        """Test None when the level is never crossed."""
        assert crossing_time(burgers_run, -100.0) is None

    def test_refinement_agreement(self, burgers_run):
        """Test that a run agrees with itself."""
        t_coarse, t_fine, agree = refinement_agreement(burgers_run, burgers_run, -2.0)
        assert t_coarse == t_fine
        assert agree

    def test_refinement_agreement_without_crossing(self, burgers_run):
        """Test disagreement when a level is never crossed."""
        assert refinement_agreement(burgers_run, burgers_run, -100.0)[2] is False


class TestBreakingDetect:
    """Tests for the breaking verdict."""

    def test_no_breaking_by_end_time(self, burgers_run):
        """Test the verdict and bracket for a run that stops at t_end."""
        report = breaking_detect(burgers_run, 0.1)
        assert report.verdict == "no-breaking-by-t_end"
        assert report.T_est is None
        assert report.T_lower == pytest.approx(1.0 / 1.1)
        assert report.T_upper == pytest.approx(1.0 / 0.81)

    def test_burgers_breaking_time(self, breaking_run, refined_breaking_run):
        """Test T_est ≈ 1 inside [1/(1+ε), 1/(1-ε)²]."""
        assert breaking_run.stop_reason == "breaking-detected"
        report = breaking_detect(breaking_run, 0.1, reference=refined_breaking_run)
        assert report.verdict == "breaking"
        assert report.T_est == pytest.approx(1.0, rel=0.02)
        assert report.in_bracket
        assert report.monotone
        assert report.fit_quality < 0.03

    def test_refined_reference_agreement(self, breaking_run, refined_breaking_run):
        """Test that the run on a twice finer grid marks the crossing stable."""
        assert refined_breaking_run.config.n_points == 2 * breaking_run.config.n_points
        assert refined_breaking_run.config.dt_initial == 0.5 * breaking_run.config.dt_initial
        report = breaking_detect(breaking_run, 0.1, reference=refined_breaking_run)
        assert report.refinement_stable is True
        assert report.notes == []

    def test_unconfirmed_crossing_is_not_breaking(self, breaking_run):
        """Test that a crossing without a refined reference is not called breaking."""
        report = breaking_detect(breaking_run, 0.1)
        assert report.verdict == "under-resolved"
        assert report.refinement_stable is None
        assert report.T_est == pytest.approx(1.0, rel=0.02)
        assert "crossing time not confirmed on a refined grid" in report.notes

    def test_non_finite_step_is_reported(self, breaking_run):
        """Test that NaN coefficients get their own time and note."""
        blown = breaking_run.model_copy(
            update={"stop_reason": "under-resolved", "nonfinite_at": 0.95}
        )
        report = breaking_detect(blown, 0.1)
        assert report.verdict == "under-resolved"
        assert report.nonfinite_at == 0.95
        assert any(note.startswith("non-finite coefficients at t=0.95") for note in report.notes)
        assert "resolution exhausted before slope_stop" not in report.notes

    def test_under_resolved(self):
        """Test the verdict when refinement is capped."""
        config = SolverConfig(
            alpha=1.0, dispersion=False, n_points=32, max_points=32, dt_initial=1e-2, t_end=0.99
        )
        u0 = GridFunction.from_function(lambda x: -np.sin(x), TWO_PI, 32)
        trajectory = WhithamSolver(config).run(u0)
        report = breaking_detect(trajectory, 0.1)
        assert report.verdict == "under-resolved"
        assert trajectory.nonfinite_at is None
        assert report.notes == ["resolution exhausted before slope_stop"]

    @pytest.mark.parametrize("eps", [0.0, 1.0])
    def test_rejects_eps(self, burgers_run, eps):
        """Test that ε must lie in (0, 1)."""
        with pytest.raises(DomainError):
            breaking_detect(burgers_run, eps)
