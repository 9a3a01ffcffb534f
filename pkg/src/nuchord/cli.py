"""
Command-line interface for nuchord.

Results go to stdout (human-readable text, or a JSON ResultRecord with
--json); logs go to stderr. Exit codes are documented in results.ExitCode.
"""

import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
from loguru import logger

from .config import load_app_config
from .exceptions import ConfigurationError, NuChordError
from .logging import configure_logging, get_logger
from .metric import as_factorization, d_cr, kappa, kappa_grid
from .plant_spec import PlantSpec, document_digest, ensure_same_instance, load_plant_spec
from .progress import CheckProgress, ReportGenerator
from .results import (
    KAPPA_HEADER,
    SWEEP_HEADER,
    ExitCode,
    ResultRecord,
    error_record,
    exit_code_for,
    format_csv,
    inputs_digest,
    write_csv,
)
from .sampling import set_thread_count
from .selftest import (
    all_passed,
    certification_grid,
    closed_form_distance,
    count_certified,
    example_distances,
    example_plants,
    run_selftest,
)
from .stability import certify_robust_report, margin_result, margin_via_norm
from .types import AlgebraInstance, AppConfig, Domain, InstanceKind, LogLevel

INSTANCE_CHOICES = [kind.value for kind in InstanceKind]


@dataclass
class CliState:
    """Options of the command group, shared with every subcommand."""
    config_path: Optional[Path]
    log_level: Optional[str]
    log_file: Optional[Path]
    no_colors: bool
    json_output: bool
    tol: Optional[float]
    max_grid: Optional[int]
    instance: Optional[InstanceKind]
    config: Optional[AppConfig] = None

    def load(self) -> AppConfig:
        """Load the configuration file once and apply it."""
        if self.config is None:
            self.config = load_app_config(self.config_path)
            set_thread_count(self.config.threads)
            if self.log_level is None and self.config.log_level is not LogLevel.INFO:
                configure_logging(
                    log_level=self.config.log_level,
                    log_file=self.log_file,
                    enable_colors=not self.no_colors,
                )
        return self.config

    def algebra_instance(self, kind: InstanceKind) -> AlgebraInstance:
        return self.load().instance(kind).with_overrides(self.tol, self.max_grid)

    def flags(self, **extra: Any) -> Dict[str, Any]:
        """Flags that influence numerical results (part of the inputs digest)."""
        flags: Dict[str, Any] = {"tol": self.tol, "max_grid": self.max_grid}
        if self.config is not None:
            flags["numerics"] = self.config.numerics
        flags.update(extra)
        return flags


def _load_specs(state: CliState, paths: Sequence[str]) -> Tuple[List[PlantSpec], AlgebraInstance]:
    state.load()
    specs = [load_plant_spec(path, default_instance=state.instance) for path in paths]
    kind = ensure_same_instance(*specs)
    return specs, state.algebra_instance(kind)


def _run(
    state: CliState,
    command: str,
    body: Callable[[], Tuple[ResultRecord, Optional[str]]],
) -> None:
    """
    Execute a command body and map failures to exit codes.

    The body returns the result record and the human-readable text to print
    when --json is not given.
    """
    cli_logger = get_logger({"component": "cli", "command": command})
    started = time.perf_counter()
    exit_code = ExitCode.SUCCESS
    record: Optional[ResultRecord] = None
    text: Optional[str] = None

    try:
        cli_logger.info("Command starting", config_file=str(state.config_path) if state.config_path else None)
        record, text = body()
        exit_code = ExitCode(record.values.pop("_exit_code", ExitCode.SUCCESS))

    except ConfigurationError as e:
        logger.error("Configuration error", error=e.message, details=e.details)
        click.echo(f"Configuration error: {e}", err=True)
        exit_code = ExitCode.SPEC_ERROR
        record = error_record(command, e)

    except NuChordError as e:
        logger.error("Computation error", error=e.message, details=e.details)
        click.echo(f"Computation error: {e}", err=True)
        exit_code = exit_code_for(e)
        record = error_record(command, e)

    except KeyboardInterrupt as e:
        logger.info("Process interrupted by user")
        click.echo("\nProcess interrupted by user", err=True)
        exit_code = ExitCode.INTERRUPTED
        record = error_record(command, e)

    except Exception as e:
        logger.exception("Unexpected error occurred")
        click.echo(f"Unexpected error: {e}", err=True)
        exit_code = exit_code_for(e)
        record = error_record(command, e)

    record.wall_time = time.perf_counter() - started
    if state.json_output:
        click.echo(record.to_json())
    elif text is not None:
        click.echo(text)

    cli_logger.info("Command finished", exit_code=int(exit_code), exit_code_name=exit_code.name)
    if exit_code != ExitCode.SUCCESS:
        sys.exit(int(exit_code))


@click.group()
@click.option(
    '--config', '-c',
    help='Configuration file path (nuchord.toml)',
    type=click.Path(dir_okay=False)
)
@click.option(
    '--log-level',
    type=click.Choice([level.value for level in LogLevel], case_sensitive=False),
    help='Logging level (default: from config, else INFO)'
)
@click.option(
    '--log-file',
    help='Path to log file for persistent logging',
    type=click.Path()
)
@click.option('--no-colors', is_flag=True, help='Disable colored log output')
@click.option('--json', 'json_output', is_flag=True, help='Print the result record as JSON')
@click.option('--tol', type=float, help='Agreement required between successive sup/inf estimates')
@click.option('--max-grid', type=int, help='Largest boundary grid before giving up')
@click.option(
    '--instance',
    type=click.Choice(INSTANCE_CHOICES),
    help='Require plant files to belong to this instance (or supply it when they name none)'
)
@click.version_option(package_name="nuchord")
@click.pass_context
def cli(
    ctx: click.Context,
    config: Optional[str],
    log_level: Optional[str],
    log_file: Optional[str],
    no_colors: bool,
    json_output: bool,
    tol: Optional[float],
    max_grid: Optional[int],
    instance: Optional[str],
) -> None:
    """
    Chordal distances, stability margins and robustness certificates.

    Examples:

        # Distance between two plants
        nuchord metric p1.json p2.json

        # Stability margin of a loop, as JSON
        nuchord --json margin plant.json controller.json

        # Certify a family of perturbed plants
        nuchord sweep p1.json controller.json pa_template.json --param-range 0.7:1.45:0.05

        # Run the invariant suite
        nuchord selftest --quick
    """
    configure_logging(
        log_level=LogLevel((log_level or LogLevel.INFO.value).upper()),
        log_file=Path(log_file) if log_file else None,
        enable_colors=not no_colors,
    )
    ctx.obj = CliState(
        config_path=Path(config) if config else None,
        log_level=log_level,
        log_file=Path(log_file) if log_file else None,
        no_colors=no_colors,
        json_output=json_output,
        tol=tol,
        max_grid=max_grid,
        instance=InstanceKind(instance) if instance else None,
    )


pass_state = click.make_pass_decorator(CliState)


@cli.command()
@click.argument('p1_file', type=click.Path())
@click.argument('p2_file', type=click.Path())
@click.option('--kappa-csv', type=click.Path(dir_okay=False), help='Write (theta, omega, kappa) samples to this file')
@pass_state
def metric(state: CliState, p1_file: str, p2_file: str, kappa_csv: Optional[str]) -> None:
    """Chordal distance between two plants."""

    def body() -> Tuple[ResultRecord, str]:
        specs, instance = _load_specs(state, [p1_file, p2_file])
        p1, p2 = (spec.to_fraction(instance) for spec in specs)
        cf1, cf2 = as_factorization(p1, instance), as_factorization(p2, instance)
        result = d_cr(cf1, cf2, instance)
        if kappa_csv:
            curve = kappa(cf1, cf2, kappa_grid(cf1, cf2))
            omegas = curve.omegas if instance.domain is Domain.HALF_PLANE else curve.thetas
            write_csv(Path(kappa_csv), KAPPA_HEADER, zip(curve.thetas, omegas, curve.values))
        digest = inputs_digest([s.digest for s in specs], state.flags(instance=instance.kind.value))
        record = ResultRecord("metric", digest, {"instance": instance.kind.value, **result.to_dict()})
        text = (
            f"d_cr = {result.value:.12g}\n"
            f"branch: {result.branch.value}\n"
            f"index condition holds: {result.condition.holds}\n"
            f"grid size: {result.grid_report.grid_size}, achieved tolerance: {result.grid_report.sup_tolerance:.2e}"
        )
        return record, text

    _run(state, "metric", body)


@cli.command()
@click.argument('p_file', type=click.Path())
@click.argument('c_file', type=click.Path())
@pass_state
def margin(state: CliState, p_file: str, c_file: str) -> None:
    """Stability margin of a plant/controller pair."""

    def body() -> Tuple[ResultRecord, str]:
        specs, instance = _load_specs(state, [p_file, c_file])
        cf_p, cf_c = (as_factorization(spec.to_fraction(instance), instance) for spec in specs)
        result = margin_result(cf_p, cf_c)
        values: Dict[str, Any] = {"instance": instance.kind.value, **result.to_dict()}
        lines = [f"mu = {result.value:.12g}", f"stabilizes: {result.stabilizes}"]
        if result.stabilizes:
            via_norm = margin_via_norm(cf_p, cf_c)
            values.update(mu_via_norm=via_norm, formula_delta=abs(via_norm - result.value))
            lines.insert(1, f"1/mu = {result.inverse:.12g}")
            lines.append(f"closed-loop norm formula agrees within {abs(via_norm - result.value):.2e}")
        digest = inputs_digest([s.digest for s in specs], state.flags(instance=instance.kind.value))
        return ResultRecord("margin", digest, values), "\n".join(lines)

    _run(state, "margin", body)


@cli.command()
@click.argument('p0_file', type=click.Path())
@click.argument('c_file', type=click.Path())
@click.argument('p_file', type=click.Path())
@click.option('--direct-mu', is_flag=True, help='Also compute the margin of the perturbed loop')
@pass_state
def certify(state: CliState, p0_file: str, c_file: str, p_file: str, direct_mu: bool) -> None:
    """Certify that C stabilizes P given the nominal loop (P0, C)."""

    def body() -> Tuple[ResultRecord, str]:
        specs, instance = _load_specs(state, [p0_file, c_file, p_file])
        p0, c, p = (spec.to_fraction(instance) for spec in specs)
        report = certify_robust_report(p0, c, p, instance, direct_mu=direct_mu)
        certificate = report.certificate
        values = {
            "instance": instance.kind.value,
            **certificate.to_dict(),
            "nominal": report.nominal.to_dict(),
            "metric": report.distance.to_dict(),
        }
        lines = [
            f"mu(p0, c) = {certificate.mu_nominal:.12g}",
            f"d_cr(p, p0) = {certificate.distance:.12g}",
            f"lower bound = {certificate.lower_bound:.12g}",
            f"stabilized: {certificate.stabilized}",
        ]
        if certificate.mu_perturbed is not None:
            lines.append(f"mu(p, c) = {certificate.mu_perturbed:.12g}")
        flags = state.flags(instance=instance.kind.value, direct_mu=direct_mu)
        return ResultRecord("certify", inputs_digest([s.digest for s in specs], flags), values), "\n".join(lines)

    _run(state, "certify", body)


def parse_param_range(text: str) -> np.ndarray:
    """
    Parse a0:a1:step into the inclusive grid a0, a0 + step, ... <= a1.

    Raises:
        ConfigurationError: Malformed range or nonpositive step
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"--param-range must look like a0:a1:step, got: {text}")
    try:
        start, stop, step = (float(part) for part in parts)
    except ValueError:
        raise ConfigurationError(f"--param-range must contain numbers, got: {text}")
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
        raise ConfigurationError(f"--param-range must be finite, got: {text}")
    if step <= 0:
        raise ConfigurationError("--param-range step must be greater than 0")
    if stop < start:
        raise ConfigurationError("--param-range end must not precede its start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


@cli.command()
@click.argument('nominal', type=click.Path())
@click.argument('controller', type=click.Path())
@click.argument('template', type=click.Path())
@click.option('--param-range', required=True, help='Parameter grid a0:a1:step (inclusive)')
@click.option('--output', '-o', type=click.Path(dir_okay=False), help='Write the CSV here instead of stdout')
@click.option(
    '--mu-bound',
    type=click.FloatRange(0.0, 1.0),
    help='Use this lower bound for the nominal margin instead of computing it'
)
@pass_state
def sweep(
    state: CliState,
    nominal: str,
    controller: str,
    template: str,
    param_range: str,
    output: Optional[str],
    mu_bound: Optional[float],
) -> None:
    """Certify a parameterized family of plants against a nominal loop."""

    def body() -> Tuple[ResultRecord, Optional[str]]:
        parameters = parse_param_range(param_range)
        specs, instance = _load_specs(state, [nominal, controller])
        p0, c = (spec.to_fraction(instance) for spec in specs)
        cf0, cf_c = as_factorization(p0, instance), as_factorization(c, instance)
        mu_nominal = mu_bound if mu_bound is not None else margin_result(cf0, cf_c).value

        progress = CheckProgress("sweep", total=len(parameters))
        rows = []
        for a in parameters:
            spec = load_plant_spec(template, parameter=float(a), default_instance=instance.kind)
            distance = d_cr(spec.to_fraction(instance), cf0, instance).value
            lower_bound = mu_nominal - distance
            rows.append((float(a), distance, closed_form_distance(float(a)), lower_bound, lower_bound > 0.0))
            progress.advance(phase=f"a={a:g}")
        progress.complete()

        csv_text = format_csv(SWEEP_HEADER, rows)
        if output:
            write_csv(Path(output), SWEEP_HEADER, rows)
        values = {
            "instance": instance.kind.value,
            "mu_nominal": mu_nominal,
            "rows": [dict(zip(SWEEP_HEADER, row)) for row in rows],
            "certified": sum(1 for row in rows if row[-1]),
        }
        flags = state.flags(instance=instance.kind.value, param_range=param_range, mu_bound=mu_bound)
        digest = inputs_digest([s.digest for s in specs] + [document_digest(template)], flags)
        text = None if output else csv_text.rstrip("\n")
        return ResultRecord("sweep", digest, values), text

    _run(state, "sweep", body)


@cli.command()
@click.option('--quick', is_flag=True, help='Reduced sample counts for a smoke run')
@click.option('--seed', type=int, help='Seed of the random plant families')
@pass_state
def selftest(state: CliState, quick: bool, seed: Optional[int]) -> None:
    """Run the invariant suite and print a pass/fail table."""

    def body() -> Tuple[ResultRecord, str]:
        config = state.load()
        if state.tol is not None or state.max_grid is not None:
            config = _with_numeric_overrides(config, state)
        results = run_selftest(config, quick=quick, seed=seed)
        values: Dict[str, Any] = {"checks": [r.to_dict() for r in results], "passed": all_passed(results)}
        if not all_passed(results):
            values["_exit_code"] = ExitCode.SELFTEST_FAILED
        digest = inputs_digest([], state.flags(quick=quick, seed=seed))
        return ResultRecord("selftest", digest, values), ReportGenerator.format_check_table(results)

    _run(state, "selftest", body)


def _with_numeric_overrides(config: AppConfig, state: CliState) -> AppConfig:
    numerics = config.numerics
    if state.tol is not None:
        numerics = replace(numerics, sup_tol=state.tol)
    if state.max_grid is not None:
        numerics = replace(
            numerics, max_grid=state.max_grid, initial_grid=min(numerics.initial_grid, state.max_grid)
        )
    return replace(config, numerics=numerics)


@cli.command()
@click.option('--count', default=50, show_default=True, type=click.IntRange(1, 1000),
              help='Plants checked for certification on (2/3, 3/2)')
@pass_state
def example(state: CliState, count: int) -> None:
    """Reproduce the delay-plant worked example with the bundled files."""

    def body() -> Tuple[ResultRecord, str]:
        instance = state.algebra_instance(InstanceKind.HALFPLANE_C0AP)
        rows = example_distances(instance)
        nominal, controller = example_plants(instance)
        nominal_margin = margin_result(as_factorization(nominal, instance), as_factorization(controller, instance))
        certified = count_certified(instance, certification_grid(count))
        values = {
            "distances": rows,
            "mu": nominal_margin.value,
            "mu_inverse": nominal_margin.inverse,
            "certified": certified,
            "checked": count,
        }
        digest = inputs_digest(["example"], state.flags(count=count))
        report = ReportGenerator.format_example_report(rows, nominal_margin.inverse, certified, count)
        return ResultRecord("example", digest, values), report

    _run(state, "example", body)


def main() -> None:
    """Console script entry point."""
    cli(prog_name="nuchord")


if __name__ == "__main__":
    main()
