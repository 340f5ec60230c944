"""Command-line interface for bellwave."""

import functools
import math
import sys
from pathlib import Path
from enum import Enum, IntEnum
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, model_validator
from pydantic import ValidationError as PydanticValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .config.loader import LoadedConfig, load_config, load_default_config
from .config.settings import get_settings
from .core.estimators import analytic_estimate
from .core.inequality import (
    STANDARD_ANGLES,
    ChshAngles,
    anneal_shared_dataset,
    chsh_analytic,
    chsh_from_independent,
    chsh_from_shared,
    generate_shared_dataset,
)
from .core.montecarlo import (
    EstimatorKind,
    RunConfig,
    SimulationError,
    empirical_correlation,
    run_experiment,
)
from .core.optics import AnalyzerSetting
from .core.source_model import validate_constraints
from .tools.file_ops import (
    atomic_write_text,
    csv_text,
    header_comment,
    json_text,
    read_dataset_csv,
    write_dataset_csv,
)
from .tools.plotting import render_correlation_svg, write_correlation_svg
from .tools.validation import ValidationError, validate_angle_quad
from .utils.helpers import config_hash, parse_angle, parse_angle_list
from .utils.logger import get_logger, setup_logger


console = Console()
err_console = Console(stderr=True)
logger = get_logger()


class ExitCode(IntEnum):
    OK = 0
    VALIDATION_FAILED = 1
    USAGE = 2
    IO_ERROR = 3


class ScanMode(str, Enum):
    ANALYTIC = "analytic"
    MC_WEIGHT = "mc-weight"
    MC_OUTCOME = "mc-outcome"

    @property
    def estimator(self) -> Optional[EstimatorKind]:
        return {
            ScanMode.MC_WEIGHT: EstimatorKind.SIGNED_WEIGHT,
            ScanMode.MC_OUTCOME: EstimatorKind.OUTCOME_SAMPLING,
        }.get(self)


class ScanSpec(BaseModel):
    """Angle scan over delta = theta1 - theta2 at fixed theta1."""

    model_config = ConfigDict(frozen=True)

    delta_min: FiniteFloat = 0.0
    delta_max: FiniteFloat = math.pi
    n_points: int = Field(default=181, ge=2)
    theta1_fixed: FiniteFloat = math.pi / 8
    mode: ScanMode = ScanMode.ANALYTIC
    n_events: int = Field(default=100_000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    n_partitions: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_range(self) -> "ScanSpec":
        if self.delta_max < self.delta_min:
            raise ValueError("delta_max must be >= delta_min")
        return self

    def deltas(self) -> np.ndarray:
        return np.linspace(self.delta_min, self.delta_max, self.n_points)


def init_cli(verbose: bool = False) -> None:
    """Initialize CLI dependencies."""
    settings = get_settings()
    setup_logger(
        level="DEBUG" if verbose else settings.logging.level,
        log_file=settings.logging.log_file,
        use_colors=settings.logging.use_colors,
    )


def _fail(code: ExitCode, message: str) -> None:
    err_console.print(f"[red]Error: {message}[/red]")
    logger.error(message)
    sys.exit(int(code))


def guarded(command: Callable[..., Any]) -> Callable[..., Any]:
    """Map library exceptions to exit codes."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except ValidationError as e:
            details = "; ".join(e.errors) if e.errors else e.message
            _fail(ExitCode.USAGE, details if details else str(e))
        except PydanticValidationError as e:
            details = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
            _fail(ExitCode.USAGE, details)
        except ValueError as e:
            _fail(ExitCode.USAGE, str(e))
        except SimulationError as e:
            _fail(ExitCode.VALIDATION_FAILED, f"simulation failed: {e}")
        except OSError as e:
            _fail(ExitCode.IO_ERROR, str(e))

    return wrapper


def _load(config_path: Optional[str]) -> LoadedConfig:
    return load_config(config_path) if config_path else load_default_config()


def _resolve_run(
    loaded: LoadedConfig, seed: Optional[int], events: Optional[int], partitions: Optional[int]
) -> Tuple[int, int, int]:
    """CLI flag, then config file, then settings/env."""
    sim = get_settings().simulation
    overrides = loaded.run_overrides
    return (
        seed if seed is not None else overrides.get("seed", sim.seed),
        events if events is not None else overrides.get("n_events", sim.n_events),
        partitions if partitions is not None else overrides.get("n_partitions", sim.n_partitions),
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        atomic_write_text(out, text)
        err_console.print(f"Wrote [cyan]{out}[/cyan]")
    else:
        click.echo(text, nl=False)


def common_options(command: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Base seed (u64)"),
        click.option("--events", "-n", type=click.IntRange(min=1), help="Events per setting"),
        click.option("--partitions", type=click.IntRange(min=1), help="RNG partitions"),
        click.option("--config", "config_path", type=click.Path(dir_okay=False),
                     help="Source config file (key = value)"),
        click.option("--out", "-o", type=click.Path(dir_okay=False), help="Output file (default stdout)"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """bellwave - local wave model of a type-II SPDC Bell experiment."""
    try:
        init_cli(verbose)
    except ValueError as e:
        _fail(ExitCode.USAGE, f"invalid environment settings: {e}")
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose


@cli.command()
@common_options
@click.option("--mode", type=click.Choice([m.value for m in ScanMode]), default=ScanMode.ANALYTIC.value,
              show_default=True)
@click.option("--delta-min", default="0", show_default=True, help="Start of delta range (deg/rad)")
@click.option("--delta-max", default="180deg", show_default=True, help="End of delta range (deg/rad)")
@click.option("--points", type=int, default=181, show_default=True, help="Number of delta values")
@click.option("--theta1", default="22.5deg", show_default=True, help="Fixed side-A angle (deg/rad)")
@click.option("--svg", "svg_path", type=click.Path(dir_okay=False), help="Also write an SVG plot")
@guarded
def scan(
    seed: Optional[int],
    events: Optional[int],
    partitions: Optional[int],
    config_path: Optional[str],
    out: Optional[str],
    mode: str,
    delta_min: str,
    delta_max: str,
    points: int,
    theta1: str,
    svg_path: Optional[str],
) -> None:
    """Scan the Bell correlation over delta = theta1 - theta2.

    Example: bellwave scan --mode mc-outcome --events 100000 --points 9 -o scan.csv
    """
    loaded = _load(config_path)
    seed, events, partitions = _resolve_run(loaded, seed, events, partitions)
    spec = ScanSpec(
        delta_min=parse_angle(delta_min),
        delta_max=parse_angle(delta_max),
        n_points=points,
        theta1_fixed=parse_angle(theta1),
        mode=ScanMode(mode),
        n_events=events,
        seed=seed,
        n_partitions=partitions,
    )
    deltas = spec.deltas()
    settings = [AnalyzerSetting.from_delta(float(d), spec.theta1_fixed) for d in deltas]
    references = [analytic_estimate(s) for s in settings]
    analytic = [e.value for e in references]

    estimator = spec.mode.estimator
    mc_values: Optional[List[float]] = None
    mc_errors: Optional[List[float]] = None
    payload: Dict[str, Any] = {"command": "scan", "config": loaded.hash_payload(),
                               "scan": spec.model_dump(mode="json")}
    if estimator is None:
        payload["scan"].update(n_events=None, seed=None, n_partitions=None)
    else:
        unique = list({s.label(): s for s in settings}.values())
        run = RunConfig(
            n_events=spec.n_events,
            seed=spec.seed,
            n_partitions=spec.n_partitions,
            estimator=estimator,
            settings=tuple(unique),
            n_workers=get_settings().simulation.n_workers,
            chunk_size=get_settings().simulation.chunk_size,
        )
        payload["run"] = run.hash_payload()
        record = run_experiment(run)
        estimates = [empirical_correlation(record, s) for s in settings]
        mc_values = [e.value for e in estimates]
        mc_errors = [e.std_error for e in estimates]

    digest = config_hash(payload)
    run_seed = spec.seed if estimator is not None else None
    rows = []
    for i, delta in enumerate(deltas):
        if mc_values is None:
            rows.append([float(delta), analytic[i], None, references[i].std_error, references[i].n_events])
        else:
            rows.append([float(delta), analytic[i], mc_values[i], mc_errors[i], spec.n_events])
    digits = get_settings().output.float_digits
    text = csv_text(
        header_comment("scan", run_seed, digest),
        ["delta_rad", "E_analytic", "E_mc", "std_err", "n_events"],
        rows,
        digits=digits,
    )
    svg = None
    if svg_path:
        svg = render_correlation_svg(
            deltas, analytic, mc_values, mc_errors,
            title=f"Bell correlation, θ1 = {spec.theta1_fixed:.4f} rad ({spec.mode.value})",
            provenance=f"bellwave scan seed={run_seed if run_seed is not None else 'none'} config_hash={digest}",
            hashsalt=get_settings().output.svg_hashsalt,
        )

    # SVG first; a failed CSV write takes the SVG with it
    if svg is not None:
        write_correlation_svg(svg_path, svg)
    try:
        _emit(text, out)
    except OSError:
        if svg is not None:
            Path(svg_path).unlink(missing_ok=True)
        raise
    logger.info(f"scan finished: {spec.n_points} points, mode {spec.mode.value}")


@cli.command()
@common_options
@click.option("--mode", type=click.Choice([ScanMode.ANALYTIC.value, ScanMode.MC_OUTCOME.value]),
              default=ScanMode.MC_OUTCOME.value, show_default=True,
              help="Independent-pairs evaluation")
@click.option("--angles", default=None,
              help="a,a',b,b' (deg/rad); default 0,45deg,22.5deg,67.5deg")
@click.option("--shared", is_flag=True, help="Evaluate one simulated shared dataset instead")
@click.option("--dataset", "dataset_path", type=click.Path(dir_okay=False),
              help="Evaluate an external CSV of +/-1 columns a,a_prime,b,b_prime")
@click.option("--anneal-steps", type=click.IntRange(min=1), default=None,
              help="Search for an adversarial shared dataset instead")
@click.option("--save-dataset", type=click.Path(dir_okay=False),
              help="Write the shared dataset used (--shared/--anneal-steps) as CSV")
@guarded
def chsh(
    seed: Optional[int],
    events: Optional[int],
    partitions: Optional[int],
    config_path: Optional[str],
    out: Optional[str],
    mode: str,
    angles: Optional[str],
    shared: bool,
    dataset_path: Optional[str],
    anneal_steps: Optional[int],
    save_dataset: Optional[str],
) -> None:
    """CHSH value from independent pairs, a shared dataset, or an external CSV.

    Example: bellwave chsh --events 1000000 --seed 7 -o chsh.json
    """
    sources = sum(bool(x) for x in (shared, dataset_path, anneal_steps))
    if sources > 1:
        raise click.UsageError("--shared, --dataset and --anneal-steps are mutually exclusive")

    loaded = _load(config_path)
    seed, events, partitions = _resolve_run(loaded, seed, events, partitions)
    values = parse_angle_list(angles) if angles else list(STANDARD_ANGLES)
    is_valid, errors = validate_angle_quad(values)
    if not is_valid:
        raise ValidationError("Invalid CHSH angles", errors)
    quad = ChshAngles(*values)

    settings = get_settings().simulation
    payload: Dict[str, Any] = {"command": "chsh", "config": loaded.hash_payload(),
                               "angles": list(quad)}
    dataset = None
    if dataset_path:
        payload.update(source="external", dataset=str(dataset_path))
        report = chsh_from_shared(read_dataset_csv(dataset_path))
        run_seed: Optional[int] = None
    elif anneal_steps:
        payload.update(source="anneal", steps=anneal_steps, rows=events, seed=seed)
        dataset = anneal_shared_dataset(events, anneal_steps, seed).dataset
        report = chsh_from_shared(dataset)
        run_seed = seed
    elif shared:
        payload.update(source="shared", rows=events, seed=seed)
        dataset = generate_shared_dataset(quad, events, seed)
        report = chsh_from_shared(dataset)
        run_seed = seed
    elif ScanMode(mode) is ScanMode.ANALYTIC:
        payload.update(source="analytic")
        report = chsh_analytic(quad)
        run_seed = None
    else:
        payload.update(source="independent", events=events, seed=seed, partitions=partitions,
                       chunk_size=settings.chunk_size)
        report = chsh_from_independent(
            quad, events, seed, n_partitions=partitions,
            n_workers=settings.n_workers, chunk_size=settings.chunk_size,
        )
        run_seed = seed

    digest = config_hash(payload)
    if save_dataset and dataset is not None:
        write_dataset_csv(save_dataset, dataset, header_comment("chsh", run_seed, digest))

    result = report.to_dict()
    result.update(
        seed=run_seed,
        config_hash=digest,
        angles=dict(zip(("a", "a_prime", "b", "b_prime"), quad)),
    )
    _emit(json_text(result), out)
    err_console.print(Panel.fit(
        f"S = [bold]{report.chsh_value:.6f}[/bold]  ({report.provenance.value}, "
        f"bound {report.bound.value_limit:.6f}, local bound satisfied: {report.bound_satisfied})"
    ))


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False),
              help="Source config file (default: shipped default.conf)")
@click.option("--out", "-o", type=click.Path(dir_okay=False), help="Also write the report as JSON")
@guarded
def validate(config_path: Optional[str], out: Optional[str]) -> None:
    """Check the phase-matching and energy-conservation constraints of a config.

    Example: bellwave validate --config my.conf
    """
    loaded = _load(config_path)
    report = validate_constraints(loaded.constraints)

    table = Table(title=f"Source constraints ({loaded.source})")
    table.add_column("Constraint", style="cyan")
    table.add_column("Status")
    table.add_column("Residual", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Condition")
    for check in report.checks:
        if check.passed:
            status = "[green]PASS[/green]"
        elif check.severity == "warning":
            status = "[yellow]WARN[/yellow]"
        else:
            status = "[red]FAIL[/red]"
        table.add_row(check.name, status, f"{check.residual:.6g}", f"{check.tolerance:.3g}", check.message)
    console.print(table)

    if out:
        data = {
            "config_hash": config_hash({"command": "validate", "config": loaded.hash_payload()}),
            "seed": None,
            "passed": report.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "residual": c.residual,
                 "tolerance": c.tolerance, "severity": c.severity, "message": c.message}
                for c in report.checks
            ],
        }
        atomic_write_text(out, json_text(data))

    if not report.passed:
        _fail(ExitCode.VALIDATION_FAILED, f"constraint(s) failed: {', '.join(c.name for c in report.failures)}")
    console.print("[green]All constraints satisfied[/green]")


def _parse_settings(text: str) -> List[AnalyzerSetting]:
    """``t1:t2,t1:t2`` with deg/rad suffixes."""
    settings = []
    for item in text.split(","):
        if not item.strip():
            continue
        parts = item.split(":")
        if len(parts) != 2:
            raise ValueError(f"Setting {item!r} must be theta1:theta2")
        settings.append(AnalyzerSetting(parse_angle(parts[0]), parse_angle(parts[1])))
    if not settings:
        raise ValueError("No settings given")
    return settings


@cli.command()
@common_options
@click.option("--mode", type=click.Choice([ScanMode.MC_WEIGHT.value, ScanMode.MC_OUTCOME.value]),
              default=ScanMode.MC_OUTCOME.value, show_default=True)
@click.option("--settings", "settings_text", default="22.5deg:0",
              show_default=True, help="Comma-separated theta1:theta2 pairs")
@guarded
def simulate(
    seed: Optional[int],
    events: Optional[int],
    partitions: Optional[int],
    config_path: Optional[str],
    out: Optional[str],
    mode: str,
    settings_text: str,
) -> None:
    """Run the Monte Carlo engine and write the counts record as JSON.

    Example: bellwave simulate --mode mc-weight --settings 0:22.5deg,0:45deg -o run.json
    """
    loaded = _load(config_path)
    seed, events, partitions = _resolve_run(loaded, seed, events, partitions)
    sim = get_settings().simulation
    estimator = ScanMode(mode).estimator
    run = RunConfig(
        n_events=events,
        seed=seed,
        n_partitions=partitions,
        estimator=estimator,
        settings=tuple(_parse_settings(settings_text)),
        n_workers=sim.n_workers,
        chunk_size=sim.chunk_size,
        debug_checks=sim.debug_checks,
    )
    record = run_experiment(run)
    digest = config_hash({"command": "simulate", "config": loaded.hash_payload(), "run": run.hash_payload()})

    data = record.to_dict()
    for entry, setting in zip(data["settings"], record.settings):
        estimate = empirical_correlation(record, setting)
        entry["estimate"] = {"value": estimate.value, "std_error": estimate.std_error}
        entry["analytic"] = analytic_estimate(setting).value
    data["config_hash"] = digest
    _emit(json_text(data), out)

    table = Table(title="Correlation estimates")
    table.add_column("theta1", justify="right")
    table.add_column("theta2", justify="right")
    table.add_column("E (MC)", justify="right", style="cyan")
    table.add_column("std err", justify="right")
    table.add_column("E (analytic)", justify="right", style="green")
    for entry in data["settings"]:
        table.add_row(
            f"{entry['theta1']:.6f}", f"{entry['theta2']:.6f}",
            f"{entry['estimate']['value']:.6f}", f"{entry['estimate']['std_error']:.2e}",
            f"{entry['analytic']:.6f}",
        )
    err_console.print(table)


if __name__ == "__main__":
    cli()
