"""Tests for CSV, JSON and checkpoint artifacts."""

import json

import numpy as np
import pytest

from src.models.manifest import SweepRow
from src.models.solution import SolverConfig, SolverState, Trajectory
from src.services.characteristics import advect, slope_series
from src.services.export import (
    _fmt,
    dump_fields,
    load_checkpoint,
    read_rows,
    run_directory,
    save_checkpoint,
    write_paths_csv,
    write_report,
    write_slope_csv,
    write_sweep_csv,
    write_trajectory_csv,
)
from src.services.solver import WhithamSolver


class TestFormatting:
    """Tests for cell formatting."""

    @pytest.mark.parametrize(
        "value, expected",
        [(None, ""), (True, "true"), (np.bool_(False), "false"), (7, "7"), (0.1, "0.1")],
    )
    def test_cells(self, value, expected):
        """Test each cell type."""
        assert _fmt(value) == expected

    def test_float_round_trip(self):
        """Test that written floats read back bit for bit."""
        value = 1.0 / 3.0
        assert float(_fmt(value)) == value


class TestCsvWriters:
    """Tests for the run CSV files."""

    def test_trajectory_csv(self, burgers_run, tmp_path):
        """Test one row per step with exact times."""
        path = write_trajectory_csv(burgers_run, tmp_path / "trajectory.csv")
        rows = read_rows(path)
        assert list(rows[0]) == ["t", "dt", "n_points", "min_slope", "sup_abs_u", "l2"]
        assert len(rows) == len(burgers_run.records)
        assert [float(r["t"]) for r in rows] == [r.t for r in burgers_run.records]
        assert rows[0]["dt"] == "0.0"

    def test_slope_csv(self, burgers_run, tmp_path):
        """Test one row per snapshot."""
        slope = slope_series(burgers_run)
        rows = read_rows(write_slope_csv(slope, tmp_path / "slope.csv"))
        assert len(rows) == len(burgers_run.snapshots)
        assert float(rows[-1]["q"]) == slope.q[-1]

    def test_paths_csv(self, burgers_run, tmp_path):
        """Test the long format with one column per order."""
        paths = advect(burgers_run, [0.5, 1.0], max_order=2)
        rows = read_rows(write_paths_csv(paths, tmp_path / "paths.csv"))
        assert list(rows[0]) == ["x0", "t", "X", "v0", "v1", "v2"]
        assert len(rows) == 2 * len(burgers_run.snapshots)
        assert float(rows[0]["x0"]) == 0.5

    def test_sweep_csv(self, tmp_path):
        """Test empty cells for missing values and the error message."""
        rows = [
            SweepRow(axis="alpha", value=0.2, alpha=0.2, eps=0.1, verdict="breaking", T_est=1.5),
            SweepRow(axis="alpha", value=0.0, alpha=0.0, eps=0.1, error="DomainError: alpha"),
        ]
        read = read_rows(write_sweep_csv(rows, tmp_path / "sweep.csv"))
        assert read[0]["T_est"] == "1.5"
        assert read[0]["error"] == ""
        assert read[1]["verdict"] == ""
        assert read[1]["error"] == "DomainError: alpha"

    def test_report_json(self, tmp_path):
        """Test that reports are written as indented JSON."""
        row = SweepRow(axis="eps", value=0.3, alpha=0.2, eps=0.3)
        path = write_report(row, tmp_path / "nested" / "row.json")
        assert json.loads(path.read_text())["eps"] == 0.3

    def test_dump_fields(self, burgers_run, tmp_path):
        """Test one field file per snapshot."""
        files = dump_fields(burgers_run, tmp_path / "fields")
        assert len(files) == len(burgers_run.snapshots)
        assert files[0].name == "field_00000.csv"
        assert list(read_rows(files[0])[0]) == ["x", "u"]

    def test_run_directory(self, tmp_path):
        """Test a timestamped directory named after the run."""
        directory = run_directory(tmp_path, "alpha 0.3")
        assert directory.is_dir()
        assert directory.name.startswith("alpha_0.3_")


class TestCheckpoint:
    """Tests for checkpoint files."""

    def test_round_trip(self, minus_sine, tmp_path):
        """Test that coefficients, time and config come back exactly."""
        config = SolverConfig(alpha=0.5, n_points=64, dt_initial=0.01, t_end=0.1)
        state = WhithamSolver(config).run(minus_sine).final
        path = save_checkpoint(state, config, tmp_path / "ckpt.json")
        checkpoint = load_checkpoint(path)
        assert checkpoint.config == config
        assert np.array_equal(checkpoint.state.u.coeffs, state.u.coeffs)
        assert checkpoint.state.t == state.t
        assert checkpoint.state.step_count == state.step_count
        assert checkpoint.state.l2_initial == state.l2_initial
        assert checkpoint.history is None
        assert not (tmp_path / "ckpt.json.part").exists()

    def test_history_round_trip(self, minus_sine, tmp_path):
        """Test that the saved history keeps records, snapshots and refinements."""
        config = SolverConfig(
            alpha=0.5, n_points=64, dt_initial=0.01, t_end=0.1, snapshot_every=3
        )
        trajectory = WhithamSolver(config).run(minus_sine)
        path = save_checkpoint(trajectory.final, config, tmp_path / "ckpt.json", trajectory)
        history = load_checkpoint(path).history
        assert history.records == trajectory.records
        assert history.dense_times == trajectory.dense_times
        assert history.refinements == trajectory.refinements
        for loaded, saved in zip(history.snapshots, trajectory.snapshots, strict=True):
            assert np.array_equal(loaded.u.coeffs, saved.u.coeffs)
            assert np.array_equal(loaded.dudt.coeffs, saved.dudt.coeffs)

    def test_resume_from_file_is_bit_exact(self, minus_sine, tmp_path):
        """Test that a run resumed from disk matches the uninterrupted run."""
        config = SolverConfig(
            alpha=0.5, n_points=64, dt_initial=0.01, t_end=0.3, snapshot_every=4,
            checkpoint_every=10,
        )
        paths = []

        def on_checkpoint(state: SolverState, history: Trajectory) -> None:
            paths.append(
                save_checkpoint(state, config, tmp_path / f"{state.step_count}.json", history)
            )

        full = WhithamSolver(config).run(minus_sine, on_checkpoint=on_checkpoint)
        checkpoint = load_checkpoint(paths[0])
        resumed = WhithamSolver(checkpoint.config).run(
            resume=checkpoint.state, history=checkpoint.history
        )
        assert np.array_equal(resumed.final.u.coeffs, full.final.u.coeffs)
        assert resumed.records == full.records
        assert slope_series(resumed) == slope_series(full)

    def test_rejects_unknown_version(self, tmp_path):
        """Test that other checkpoint versions are refused."""
        path = tmp_path / "old.json"
        path.write_text(json.dumps({"version": 0}))
        with pytest.raises(ValueError):
            load_checkpoint(path)
