"""Run orchestration: one simulation with its artifacts, and parameter sweeps."""

import logging
import sys
import time
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

import src
from src.config import Settings, settings, use_settings
from src.errors import DomainError, WhithamError
from src.models.characteristics import BreakingReport, CharPath, SlopeSeries
from src.models.field import GridFunction
from src.models.manifest import RunManifest, SweepAxis, SweepRow
from src.models.solution import RunConfig, SolverState, Trajectory
from src.services.characteristics import advect, breaking_detect, slope_series
from src.services.export import (
    dump_fields,
    load_checkpoint,
    save_checkpoint,
    write_paths_csv,
    write_report,
    write_slope_csv,
    write_sweep_csv,
    write_trajectory_csv,
)
from src.services.hypothesis import datum_factory
from src.services.solver import WhithamSolver

logger = logging.getLogger(__name__)


class SimulationResult(BaseModel):
    """A finished run with its diagnostics and written artifacts."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RunConfig
    trajectory: Trajectory
    slope: SlopeSeries
    report: BreakingReport
    paths: list[CharPath] = Field(default_factory=list)
    reference: Trajectory | None = None
    outputs: dict[str, str] = Field(default_factory=dict)
    wall_clock_sec: float = 0.0


def initial_datum(run: RunConfig) -> GridFunction:
    return datum_factory(
        run.datum_kind,
        run.datum_amplitude,
        run.datum_width,
        run.domain_length,
        run.n_points,
    ).grid


def refined_config(run: RunConfig) -> RunConfig:
    """The same run on a grid twice as fine with half the time step."""
    return run.model_copy(
        update={
            "n_points": 2 * run.n_points,
            "max_points": max(run.max_points, 2 * run.n_points),
            "dt_initial": 0.5 * run.dt_initial,
            "checkpoint_every": 0,
        }
    )


def _seeds(run: RunConfig, count: int) -> np.ndarray:
    return np.arange(count) * (run.domain_length / count)


def simulate(
    run: RunConfig,
    output_dir: Path | str | None = None,
    resume: Path | str | None = None,
    refinement_check: bool | None = None,
    on_step: Callable[[SolverState], None] | None = None,
) -> SimulationResult:
    """Integrate one run, classify it and, given a directory, write its artifacts.

    Args:
        run: Run configuration with the initial datum.
        output_dir: Artifact directory; nothing is written without one.
        resume: Checkpoint to continue from. It must have been written for the
            same configuration.
        refinement_check: Repeat a run that reached slope_stop on a twice finer
            grid. Defaults to characteristics.refinement_check; without the
            reference run the verdict cannot be breaking.
        on_step: Called with every accepted solver state.

    Returns:
        SimulationResult with the trajectory, slope series, paths and report.

    Raises:
        DomainError: The checkpoint belongs to another configuration.
    """
    started = time.perf_counter()
    solver_config = run.solver_config()
    output_dir = Path(output_dir) if output_dir is not None else None
    char_config = settings().characteristics
    if refinement_check is None:
        refinement_check = char_config.refinement_check

    checkpoint = None
    if resume is not None:
        checkpoint = load_checkpoint(resume)
        if checkpoint.config != solver_config:
            raise DomainError(f"checkpoint {resume} was written for a different configuration")
        logger.info(
            "Resuming from t=%.6g (step %d)", checkpoint.state.t, checkpoint.state.step_count
        )

    on_checkpoint = None
    if output_dir is not None and solver_config.checkpoint_every:

        def on_checkpoint(state: SolverState, history: Trajectory) -> None:
            path = output_dir / "checkpoints" / f"step_{state.step_count:08d}.json"
            save_checkpoint(state, solver_config, path, history=history)

    solver = WhithamSolver(solver_config)
    if checkpoint is not None:
        trajectory = solver.run(
            resume=checkpoint.state,
            history=checkpoint.history,
            on_checkpoint=on_checkpoint,
            on_step=on_step,
        )
    else:
        trajectory = solver.run(initial_datum(run), on_checkpoint=on_checkpoint, on_step=on_step)

    reference = None
    if refinement_check and trajectory.stop_reason == "breaking-detected":
        fine = refined_config(run)
        logger.info("Refinement check at N=%d", fine.n_points)
        reference = WhithamSolver(fine.solver_config()).run(initial_datum(fine))

    paths = advect(trajectory, _seeds(run, char_config.n_seeds), char_config.max_order)
    slope = slope_series(trajectory, paths)
    report = breaking_detect(trajectory, run.eps, slope=slope, reference=reference)

    result = SimulationResult(
        config=run,
        trajectory=trajectory,
        slope=slope,
        report=report,
        paths=paths,
        reference=reference,
    )
    if output_dir is not None:
        result.outputs = write_simulation(result, output_dir)
    result.wall_clock_sec = time.perf_counter() - started
    if output_dir is not None:
        write_report(
            RunManifest(
                command=list(sys.argv),
                config=run.model_dump(),
                settings=settings().model_dump(),
                version=src.__version__,
                wall_clock_sec=result.wall_clock_sec,
                outputs=result.outputs,
                verdicts={run.name: report.verdict},
            ),
            output_dir / "manifest.json",
        )
    return result


def write_simulation(result: SimulationResult, output_dir: Path) -> dict[str, str]:
    outputs = {
        "trajectory": write_trajectory_csv(result.trajectory, output_dir / "trajectory.csv"),
        "slope": write_slope_csv(result.slope, output_dir / "slope.csv"),
        "paths": write_paths_csv(result.paths, output_dir / "paths.csv"),
        "report": write_report(result.report, output_dir / "report.json"),
    }
    if settings().output.field_dumps:
        fields = dump_fields(result.trajectory, output_dir / "fields")
        if fields:
            outputs["fields"] = fields[0].parent
    return {name: str(path) for name, path in outputs.items()}


def _sweep_one(base: RunConfig, axis: SweepAxis, value: float, config: Settings) -> SweepRow:
    """Worker body; errors become the row's message."""
    use_settings(config)
    started = time.perf_counter()
    row = SweepRow(axis=axis, value=value, alpha=base.alpha, eps=base.eps)
    try:
        run = RunConfig(**{**base.model_dump(), axis: value, "checkpoint_every": 0})
        row.alpha, row.eps = run.alpha, run.eps
        result = simulate(run)
    except (WhithamError, ValueError, ArithmeticError) as e:
        logger.warning("Sweep %s=%s failed: %s", axis, value, e)
        row.error = f"{type(e).__name__}: {e}"
    else:
        row.verdict = result.report.verdict
        row.T_est = result.report.T_est
        row.in_bracket = result.report.in_bracket
        row.n_points_final = result.trajectory.final.u.n_points
    row.wall_clock_sec = time.perf_counter() - started
    return row


def sweep(
    base: RunConfig,
    axis: SweepAxis,
    values: list[float],
    workers: int | None = None,
    output_dir: Path | str | None = None,
) -> list[SweepRow]:
    """One run per value of alpha or eps.

    Args:
        base: Run configuration the swept value is substituted into.
        axis: "alpha" or "eps".
        values: Values to run, at least one.
        workers: Worker processes; defaults to the workers setting.
        output_dir: Directory for sweep.csv.

    Returns:
        One SweepRow per value in input order. Failed runs carry their error
        and do not stop the sweep.
    """
    if not values:
        raise DomainError("sweep needs at least one value")
    workers = workers or settings().workers
    config = settings()

    if workers == 1:
        rows = [_sweep_one(base, axis, v, config) for v in values]
    else:
        rows_by_index: dict[int, SweepRow] = {}
        with ProcessPoolExecutor(max_workers=min(workers, len(values))) as pool:
            futures = {
                pool.submit(_sweep_one, base, axis, v, config): i for i, v in enumerate(values)
            }
            for future in as_completed(futures):
                i = futures[future]
                try:
                    rows_by_index[i] = future.result()
                except Exception as e:
                    # The worker process itself died.
                    rows_by_index[i] = SweepRow(
                        axis=axis,
                        value=values[i],
                        alpha=base.alpha if axis != "alpha" else values[i],
                        eps=base.eps if axis != "eps" else values[i],
                        error=f"{type(e).__name__}: {e}",
                    )
        rows = [rows_by_index[i] for i in range(len(values))]

    failures = sum(row.failed for row in rows)
    logger.info("Sweep over %s: %d runs, %d failed", axis, len(rows), failures)
    if output_dir is not None:
        write_sweep_csv(rows, Path(output_dir) / "sweep.csv")
    return rows
