"""Tests for simulation runs with artifacts and parameter sweeps."""

import json
from pathlib import Path

import pytest

from src.config import CharacteristicsSettings, Settings, settings, use_settings
from src.errors import DomainError
from src.models.solution import RunConfig
from src.services.export import read_rows
from src.services.pipeline import refined_config, simulate, sweep

RUNS_DIR = Path(__file__).resolve().parent.parent / "config" / "runs"


@pytest.fixture
def small_run():
    """Short smooth run on 64 points."""
    return RunConfig(
        name="small",
        alpha=0.5,
        n_points=64,
        dt_initial=1e-2,
        t_end=0.05,
        datum_amplitude=0.1,
    )


@pytest.mark.integration
class TestSimulate:
    """Tests for one simulation with its outputs."""

    def test_writes_artifacts(self, small_run, tmp_path):
        """Test that every CSV, the report and the manifest are written."""
        result = simulate(small_run, output_dir=tmp_path)
        for name in ("trajectory.csv", "slope.csv", "paths.csv", "report.json", "manifest.json"):
            assert (tmp_path / name).exists()
        assert not (tmp_path / "fields").exists()
        assert result.report.verdict == "no-breaking-by-t_end"
        assert len(result.paths) == settings().characteristics.n_seeds

    def test_manifest_contents(self, small_run, tmp_path):
        """Test that the manifest lists outputs and verdicts."""
        simulate(small_run, output_dir=tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config"]["alpha"] == 0.5
        assert manifest["verdicts"] == {"small": "no-breaking-by-t_end"}
        assert set(manifest["outputs"]) == {"trajectory", "slope", "paths", "report"}

    def test_without_output_dir(self, small_run, tmp_path):
        """Test that nothing is written without a directory."""
        result = simulate(small_run)
        assert result.outputs == {}
        assert result.wall_clock_sec > 0.0

    def test_checkpoints_and_resume(self, small_run, tmp_path):
        """Test that a run resumed from its first checkpoint ends on the same field."""
        run = small_run.model_copy(update={"checkpoint_every": 2})
        full = simulate(run, output_dir=tmp_path / "full")
        checkpoints = sorted((tmp_path / "full" / "checkpoints").glob("step_*.json"))
        assert checkpoints[0].name == "step_00000002.json"
        resumed = simulate(run, resume=checkpoints[0])
        assert (resumed.trajectory.final.u.values == full.trajectory.final.u.values).all()
        assert resumed.report == full.report

    def test_resume_needs_same_config(self, small_run, tmp_path):
        """Test that a checkpoint from another configuration is refused."""
        run = small_run.model_copy(update={"checkpoint_every": 2})
        simulate(run, output_dir=tmp_path)
        checkpoint = next((tmp_path / "checkpoints").glob("step_*.json"))
        other = run.model_copy(update={"alpha": 0.4})
        with pytest.raises(DomainError):
            simulate(other, resume=checkpoint)

    def test_refined_config(self, small_run):
        """Test doubled grid, halved step and no checkpoints."""
        fine = refined_config(small_run.model_copy(update={"checkpoint_every": 5}))
        assert fine.n_points == 128
        assert fine.dt_initial == 0.005
        assert fine.checkpoint_every == 0


@pytest.mark.integration
class TestSweep:
    """Tests for parameter sweeps."""

    def test_rows_in_input_order(self, small_run, tmp_path):
        """Test one row per value, in order, and the sweep CSV."""
        rows = sweep(small_run, "alpha", [0.5, 0.3, 0.7], workers=1, output_dir=tmp_path)
        assert [row.alpha for row in rows] == [0.5, 0.3, 0.7]
        assert all(row.verdict == "no-breaking-by-t_end" for row in rows)
        assert len(read_rows(tmp_path / "sweep.csv")) == 3

    def test_failed_value_keeps_going(self, small_run):
        """Test that an invalid value becomes an error row."""
        rows = sweep(small_run, "eps", [0.1, 1.5], workers=1)
        assert not rows[0].failed
        assert rows[1].failed
        assert "eps" in rows[1].error

    def test_parallel_matches_serial(self, small_run):
        """Test that worker processes give the same rows."""
        serial = sweep(small_run, "alpha", [0.3, 0.5], workers=1)
        parallel = sweep(small_run, "alpha", [0.3, 0.5], workers=2)
        assert [r.T_est for r in parallel] == [r.T_est for r in serial]
        assert [r.verdict for r in parallel] == [r.verdict for r in serial]

    def test_empty_values(self, small_run):
        """Test that a sweep needs a value."""
        with pytest.raises(DomainError):
            sweep(small_run, "alpha", [])


@pytest.fixture
def breaking_burgers():
    """-sin x without dispersion, stopped once min u_x < -15 near t = 0.93."""
    return RunConfig(
        name="breaking",
        alpha=1.0,
        dispersion=False,
        n_points=256,
        max_points=4096,
        dt_initial=1e-3,
        t_end=1.5,
        slope_stop=-15.0,
        snapshot_every=10,
    )


@pytest.mark.slow
class TestBreakingRuns:
    """Tests for runs that reach slope_stop."""

    def test_resumed_report_matches_full_run(self, breaking_burgers, tmp_path):
        """Test that resuming from the last checkpoint reproduces every diagnostic."""
        run = breaking_burgers.model_copy(update={"checkpoint_every": 400})
        full = simulate(run, output_dir=tmp_path / "full")
        checkpoints = sorted((tmp_path / "full" / "checkpoints").glob("step_*.json"))
        assert [c.name for c in checkpoints[:2]] == ["step_00000400.json", "step_00000800.json"]
        resumed = simulate(run, resume=checkpoints[-1])
        assert full.report.verdict == "breaking"
        assert resumed.report == full.report
        assert resumed.slope == full.slope
        assert resumed.paths == full.paths
        assert resumed.trajectory.records == full.trajectory.records

    def test_refinement_check_from_settings(self, breaking_burgers):
        """Test that the refined reference run follows the refinement_check setting."""
        checked = simulate(breaking_burgers)
        assert checked.reference.config.n_points == 512
        assert checked.reference.config.dt_initial == 5e-4
        assert checked.report.refinement_stable is True
        assert checked.report.verdict == "breaking"

        use_settings(Settings(characteristics=CharacteristicsSettings(refinement_check=False)))
        unchecked = simulate(breaking_burgers)
        assert unchecked.reference is None
        assert unchecked.report.refinement_stable is None
        assert unchecked.report.verdict == "under-resolved"

    def test_fractional_breaking_run(self):
        """Test α = 0.2 bump data: u_x below -1000 on at most 2^16 points, bounded sup|u|."""
        use_settings(Settings(characteristics=CharacteristicsSettings(n_seeds=8)))
        run = RunConfig.from_file(RUNS_DIR / "fractional.yaml")
        result = simulate(run)
        report = result.report
        assert result.trajectory.stop_reason == "breaking-detected"
        assert report.verdict == "breaking"
        assert report.refinement_stable is True
        assert report.m_final < -1000.0
        assert report.sup_u_max <= 1.2 * report.sup_u_initial
        assert report.in_bracket
        assert result.trajectory.final.u.n_points <= 2**16
        assert result.reference.final.u.n_points <= 2**16
