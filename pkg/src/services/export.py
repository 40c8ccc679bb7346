"""CSV, JSON and checkpoint artifacts of runs and checks."""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from src.models.characteristics import CharPath, SlopeSeries
from src.models.field import GridFunction
from src.models.manifest import SweepRow
from src.models.solution import (
    Checkpoint,
    RefinementEvent,
    SolverConfig,
    SolverState,
    StepRecord,
    Trajectory,
)
from src.services.solver import with_rhs
from src.utils.helpers import ensure_dir, get_timestamp, sanitize_filename

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 2


def _fmt(value: float | int | None) -> str:
    """repr of a float round-trips exactly; None is an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return path


def read_rows(path: Path | str) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def run_directory(base_dir: Path | str, name: str) -> Path:
    """Fresh output directory <base>/<name>_<timestamp>."""
    return ensure_dir(Path(base_dir) / f"{sanitize_filename(name)}_{get_timestamp()}")


def write_trajectory_csv(trajectory: Trajectory, path: Path | str) -> Path:
    """One row per accepted step: t, dt, n_points, min_slope, sup_abs_u, l2."""
    return _write_rows(
        Path(path),
        ["t", "dt", "n_points", "min_slope", "sup_abs_u", "l2"],
        ((r.t, r.dt, r.n_points, r.min_slope, r.sup_abs_u, r.l2) for r in trajectory.records),
    )


def write_slope_csv(slope: SlopeSeries, path: Path | str) -> Path:
    return _write_rows(
        Path(path),
        ["t", "m", "argmin_x", "q"],
        zip(slope.times, slope.m, slope.argmin_x, slope.q, strict=True),
    )


def write_paths_csv(paths: list[CharPath], path: Path | str) -> Path:
    """Long format: one row per (seed, time) with X and every sampled v_n."""
    orders = sorted({n for p in paths for n in p.vn_samples})
    header = ["x0", "t", "X"] + [f"v{n}" for n in orders]

    def rows():
        for p in paths:
            for i, t in enumerate(p.times):
                yield [p.x0, t, p.positions[i]] + [
                    p.vn_samples[n][i] if n in p.vn_samples else None for n in orders
                ]

    return _write_rows(Path(path), header, rows())


def write_field_csv(u: GridFunction, path: Path | str) -> Path:
    return _write_rows(Path(path), ["x", "u"], zip(u.grid, u.values, strict=True))


def write_sweep_csv(rows: list[SweepRow], path: Path | str) -> Path:
    fields = list(SweepRow.model_fields)
    return _write_rows(
        Path(path),
        fields,
        ([getattr(row, f) for f in fields] for row in rows),
    )


def write_report(report: BaseModel, path: Path | str) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8") as f:
        f.write(report.model_dump_json(indent=2))
    logger.debug("Wrote %s to %s", type(report).__name__, path)
    return path


def dump_fields(trajectory: Trajectory, directory: Path | str) -> list[Path]:
    """Each stored snapshot as field_<index>.csv."""
    directory = ensure_dir(directory)
    return [
        write_field_csv(state.u, directory / f"field_{i:05d}.csv")
        for i, state in enumerate(trajectory.snapshots)
    ]


def _field_payload(u: GridFunction) -> dict:
    # Both representations, so neither is recomputed with different rounding.
    return {
        "domain_length": u.domain_length,
        "n_points": u.n_points,
        "values": u.values.tolist(),
        "coeffs_real": u.coeffs.real.tolist(),
        "coeffs_imag": u.coeffs.imag.tolist(),
    }


def _field_from_payload(payload: dict) -> GridFunction:
    coeffs = np.asarray(payload["coeffs_real"]) + 1j * np.asarray(payload["coeffs_imag"])
    return GridFunction(
        payload["domain_length"],
        payload["n_points"],
        values=np.asarray(payload["values"]),
        coeffs=coeffs,
    )


def _state_payload(state: SolverState) -> dict:
    return {
        "t": state.t,
        "step_count": state.step_count,
        "l2_initial": state.l2_initial,
        "mean_initial": state.mean_initial,
        "u": _field_payload(state.u),
    }


def _state_from_payload(payload: dict) -> SolverState:
    return SolverState(
        u=_field_from_payload(payload["u"]),
        t=payload["t"],
        step_count=payload["step_count"],
        l2_initial=payload["l2_initial"],
        mean_initial=payload["mean_initial"],
    )


def save_checkpoint(
    state: SolverState,
    config: SolverConfig,
    path: Path | str,
    history: Trajectory | None = None,
) -> Path:
    """Write a JSON checkpoint that resumes bit for bit.

    Args:
        state: State to continue from.
        config: Solver configuration of the run.
        path: Target file; written to a sibling .part file and renamed.
        history: Trajectory up to state. With it, a resumed run reproduces
            the uninterrupted trajectory, slope series and breaking report.

    Returns:
        The checkpoint path.
    """
    path = Path(path)
    ensure_dir(path.parent)
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": config.model_dump(),
        "state": _state_payload(state),
        "history": None,
    }
    if history is not None:
        payload["history"] = {
            "snapshots": [_state_payload(s) for s in history.snapshots],
            "dense_times": list(history.dense_times),
            "records": [r.model_dump() for r in history.records],
            "refinements": [r.model_dump() for r in history.refinements],
        }
    # Atomic replace.
    partial = path.with_suffix(path.suffix + ".part")
    with open(partial, "w", encoding="utf-8") as f:
        json.dump(payload, f)
    partial.replace(path)
    logger.info("Checkpoint at t=%.6g (step %d) -> %s", state.t, state.step_count, path)
    return path


def load_checkpoint(path: Path | str) -> Checkpoint:
    """Read a checkpoint written by save_checkpoint."""
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    config = SolverConfig(**payload["config"])
    history = None
    if payload.get("history") is not None:
        saved = payload["history"]
        history = Trajectory(
            config=config,
            snapshots=[with_rhs(_state_from_payload(s), config) for s in saved["snapshots"]],
            dense_times=saved["dense_times"],
            records=[StepRecord(**r) for r in saved["records"]],
            refinements=[RefinementEvent(**r) for r in saved["refinements"]],
        )
    return Checkpoint(config=config, state=_state_from_payload(payload["state"]), history=history)
