"""Main CLI interface: simulate, sweep, check and verify."""

import logging
from pathlib import Path

import click
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from src.config import init_settings, settings
from src.errors import WhithamError
from src.models.manifest import SuiteReport, SweepRow
from src.models.solution import RunConfig
from src.services.export import run_directory, write_report
from src.services.hypothesis import (
    amplitude_threshold,
    check_theorem,
    choose_constants,
    datum_factory,
)
from src.services.pipeline import simulate as run_simulation
from src.services.pipeline import sweep as run_sweep
from src.services.verification import SUITES, run_suite
from src.utils.helpers import ensure_dir, format_duration, get_timestamp, parse_float_list

console = Console()


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
        force=True,
    )


def _load_run(path: str) -> RunConfig:
    """Run config or a usage error naming the offending fields."""
    try:
        return RunConfig.from_file(path)
    except ValidationError as e:
        fields = ", ".join(".".join(str(p) for p in err["loc"]) or "config" for err in e.errors())
        raise click.UsageError(f"invalid run config {path}: {fields}\n{e}") from None
    except yaml.YAMLError as e:
        raise click.UsageError(f"cannot parse run config {path}: {e}") from None


def _fail(ctx: click.Context, error: WhithamError) -> None:
    console.print(Panel(f"{type(error).__name__}: {error}", title="Numeric failure", style="red"))
    ctx.exit(1)


def _fmt(value: float | None, fmt: str = ".6g") -> str:
    return "-" if value is None else format(value, fmt)


@click.group()
@click.option("--config", "-c", type=click.Path(exists=True), help="Path to config file")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.pass_context
def cli(ctx, config, verbose):
    """Whitham breaking: fractional-dispersion Whitham simulations and breaking checks."""
    ctx.ensure_object(dict)
    if config:
        init_settings(config)
    ctx.obj["settings"] = settings()
    _setup_logging("DEBUG" if verbose else settings().log_level)


@cli.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", "-o", type=click.Path(file_okay=False), help="Artifact directory")
@click.option(
    "--resume", type=click.Path(exists=True, dir_okay=False), help="Checkpoint to resume from"
)
@click.option(
    "--refinement-check/--no-refinement-check",
    default=None,
    help="Repeat a breaking run on a twice finer grid (default from settings)",
)
@click.pass_context
def simulate(ctx, config_file, output_dir, resume, refinement_check):
    """Integrate one run and classify it."""
    run = _load_run(config_file)
    output_dir = (
        ensure_dir(output_dir)
        if output_dir
        else run_directory(Path(settings().output.base_dir) / "runs", run.name)
    )

    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
        ) as progress:
            task = progress.add_task(f"Integrating {run.name}...", total=None)

            def on_step(state):
                description = f"Integrating {run.name}: t={state.t:.4f} N={state.u.n_points}"
                progress.update(task, description=description)

            result = run_simulation(
                run, output_dir, resume=resume, refinement_check=refinement_check, on_step=on_step
            )
            progress.update(task, completed=True)
    except WhithamError as e:
        _fail(ctx, e)
        return

    report = result.report
    style = {"breaking": "green", "no-breaking-by-t_end": "blue"}.get(report.verdict, "yellow")
    lines = [
        f"Verdict: {report.verdict} (stop: {report.stop_reason})",
        f"T_est: {_fmt(report.T_est)}  bracket [{report.T_lower:.6g}, {report.T_upper:.6g}]"
        f"  in bracket: {report.in_bracket}",
        f"min u_x: {report.m_initial:.6g} -> {report.m_final:.6g}",
        f"sup|u|: {report.sup_u_initial:.6g} -> max {report.sup_u_max:.6g}",
        f"Final grid: N={result.trajectory.final.u.n_points}"
        f"  wall clock {format_duration(result.wall_clock_sec)}",
    ]
    lines += [f"Note: {note}" for note in report.notes]
    console.print(Panel("\n".join(lines), title=run.name, style=style))
    console.print(f"Artifacts in: {output_dir}")


@cli.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", "alpha_list", help="Comma-separated alpha values")
@click.option("--eps", "eps_list", help="Comma-separated eps values")
@click.option("--workers", "-w", type=click.IntRange(min=1), help="Parallel runs")
@click.option("--output-dir", "-o", type=click.Path(file_okay=False), help="Summary directory")
@click.pass_context
def sweep(ctx, config_file, alpha_list, eps_list, workers, output_dir):
    """Run the base config once per alpha (or eps) value."""
    if (alpha_list is None) == (eps_list is None):
        raise click.UsageError("give exactly one of --alpha or --eps")
    axis = "alpha" if alpha_list is not None else "eps"
    try:
        values = parse_float_list(alpha_list if alpha_list is not None else eps_list)
    except ValueError as e:
        raise click.UsageError(str(e)) from None
    if not values:
        raise click.UsageError(f"--{axis} list is empty")

    base = _load_run(config_file)
    output_dir = (
        ensure_dir(output_dir)
        if output_dir
        else run_directory(Path(settings().output.base_dir) / "sweeps", f"{base.name}_{axis}")
    )

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
    ) as progress:
        task = progress.add_task(f"Sweeping {len(values)} {axis} values...", total=None)
        rows = run_sweep(base, axis, values, workers=workers, output_dir=output_dir)
        progress.update(task, completed=True)

    console.print(_sweep_table(rows, axis))
    console.print(f"Summary: {output_dir / 'sweep.csv'}")
    failed = sum(row.failed for row in rows)
    if failed:
        console.print(f"[yellow]{failed} of {len(rows)} runs failed[/yellow]")


def _sweep_table(rows: list[SweepRow], axis: str) -> Table:
    table = Table(title=f"Sweep over {axis}")
    for column in ("alpha", "eps", "verdict", "T_est", "in bracket", "N", "time"):
        table.add_column(column)
    for row in rows:
        table.add_row(
            f"{row.alpha:g}",
            f"{row.eps:g}",
            row.verdict or f"[red]{row.error}[/red]",
            _fmt(row.T_est),
            "-" if row.in_bracket is None else str(row.in_bracket),
            "-" if row.n_points_final is None else str(row.n_points_final),
            format_duration(row.wall_clock_sec),
        )
    return table


@cli.command()
@click.option(
    "--profile",
    type=click.Choice(["scaled-sine", "bump-derivative"]),
    default="scaled-sine",
    help="Initial profile family",
)
@click.option("--amplitude", "-A", type=click.FloatRange(min=0.0, min_open=True), default=1.0)
@click.option("--width", type=click.FloatRange(min=0.0, min_open=True), default=1.0)
@click.option(
    "--domain-length", type=click.FloatRange(min=0.0, min_open=True), default=6.283185307179586
)
@click.option("--n-points", type=click.IntRange(min=16), default=256)
@click.option(
    "--alpha", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), required=True
)
@click.option(
    "--eps", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=None,
    help="Defaults to the configured eps",
)
@click.option("--theorem", type=click.Choice(["1.1", "1.2"]), default="1.1")
@click.option("--C0", "c0", type=float, help="Constant C0 (default: chosen in its window)")
@click.option("--C1", "c1", type=float, help="Constant C1")
@click.option("--C2", "c2", type=float, help="Constant C2")
@click.option("--bisect", is_flag=True, help="Search the amplitude threshold A*")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Report JSON path")
@click.pass_context
def check(
    ctx, profile, amplitude, width, domain_length, n_points, alpha, eps, theorem, c0, c1, c2,
    bisect, output,
):
    """Check the hypotheses of a breaking theorem for one datum."""
    eps = settings().hypothesis.eps if eps is None else eps
    given = [c is not None for c in (c0, c1, c2)]
    if any(given) and not all(given):
        raise click.UsageError("give all of --C0, --C1, --C2 or none")

    try:
        phi = datum_factory(profile, amplitude, width, domain_length, n_points)
        if all(given):
            constants = {"C0": c0, "C1": c1, "C2": c2}
        else:
            constants = choose_constants(phi, eps, alpha, theorem)
        report = check_theorem(phi, alpha, eps, theorem, constants)
        threshold = None
        if bisect:
            with console.status("Bisecting amplitude..."):
                threshold = amplitude_threshold(
                    profile, width, domain_length, n_points, alpha, eps, theorem
                )
    except WhithamError as e:
        _fail(ctx, e)
        return

    table = Table(title=f"Theorem {theorem}: alpha={alpha:g}, eps={eps:g}")
    for column in ("inequality", "lhs", "rhs", "margin", "status"):
        table.add_column(column)
    colors = {"satisfied": "green", "violated": "red", "inconclusive": "yellow"}
    for record in report.records:
        table.add_row(
            record.name,
            f"{record.lhs:.6g}",
            f"{record.rhs:.6g}",
            f"{record.margin:.6g}",
            f"[{colors[record.status]}]{record.status}[/{colors[record.status]}]",
        )
    console.print(table)
    console.print(
        f"alpha bound {report.alpha_bound:.6g} (margin {report.alpha_margin:.6g}), "
        f"sigma {report.sigma.sigma:.6g}, sigma*alpha<1: {report.sigma.sigma_alpha_lt_1}"
    )
    console.print(
        "Constants: " + ", ".join(f"{k}={v:.6g}" for k, v in report.constants.items())
    )
    style = "green" if report.overall else "yellow"
    console.print(Panel(f"All hypotheses hold: {report.overall}", style=style))
    if threshold is not None:
        if threshold.threshold is None:
            console.print(f"No amplitude up to {threshold.upper:.3g} satisfies {threshold.targets}")
        else:
            console.print(f"Amplitude threshold A* = {threshold.threshold:.6g}")

    path = (
        Path(output)
        if output
        else Path(settings().output.base_dir) / "checks" / f"check_{theorem}_{get_timestamp()}.json"
    )
    write_report(report, path)
    if threshold is not None:
        write_report(threshold, path.with_name(path.stem + "_threshold.json"))
    console.print(f"Report saved to: {path}")


@cli.command()
@click.option(
    "--suite", "-s", type=click.Choice([*SUITES, "all"]), default="all", help="Suite to run"
)
@click.option("--seed", type=int, default=0, help="Seed for random fields")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Results JSON path")
@click.pass_context
def verify(ctx, suite, seed, output):
    """Run the self-check suites; exits 1 when a check fails."""
    names = SUITES if suite == "all" else (suite,)
    reports: list[SuiteReport] = []
    for name in names:
        with console.status(f"Running {name} suite..."):
            reports.append(run_suite(name, seed))

    table = Table(title="Verification")
    for column in ("suite", "check", "value", "threshold", "result"):
        table.add_column(column)
    for report in reports:
        for result in report.results:
            table.add_row(
                report.suite,
                result.name,
                _fmt(result.value, ".3e"),
                _fmt(result.threshold, ".1e"),
                "[green]pass[/green]" if result.passed else f"[red]FAIL[/red] {result.detail}",
            )
    console.print(table)

    if output:
        path = Path(output)
        ensure_dir(path.parent)
        path.write_text(
            "[" + ",\n".join(r.model_dump_json(indent=2) for r in reports) + "]\n",
            encoding="utf-8",
        )

    if not all(r.passed for r in reports):
        ctx.exit(1)


if __name__ == "__main__":
    cli()
