"""CLI for cnn-spreading."""

import io
import logging
import signal
import sys
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from types import FrameType
from typing import Any, NoReturn

import click
import numpy as np

from cnn_spreading import __version__
from cnn_spreading.asymptotics import limiting_speed_path, verify_speed_continuity
from cnn_spreading.config import ConfigError, load_config, load_sweep_spec, merge_config, resolve_template
from cnn_spreading.dispersion import (
    Direction,
    DispersionCurve,
    DomainError,
    HypothesisError,
    OutOfRangeError,
    Template,
)
from cnn_spreading.front_tracker import InsufficientDataError, default_init_half_width, estimate_speed
from cnn_spreading.lattice_sim import (
    DEFAULT_DT,
    DEFAULT_INIT_HALF_WIDTH,
    DEFAULT_SNAPSHOT_STRIDE,
    DEFAULT_T_END,
    ConfigurationError,
    NumericalBlowUpError,
    SimConfig,
    simulate,
)
from cnn_spreading.reporting import (
    RunManifest,
    continuity_rows,
    format_error,
    format_estimate,
    format_speed_report,
    format_template,
    limit_path_rows,
    to_json,
    write_convergence_csv,
    write_phi_curve_csv,
    write_snapshots_csv,
    write_trace_csv,
)
from cnn_spreading.speed_solver import DEFAULT_TOL, ConsistencyError, SolverError, analyze, grid_infimum, solve_speed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_HYPOTHESIS = 2
EXIT_ESTIMATION = 3

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


class SpreadingGroup(click.Group):
    """Command group that reports usage errors with exit code 1."""

    def main(
        self,
        args: Any = None,
        prog_name: str | None = None,
        complete_var: str | None = None,
        standalone_mode: bool = True,
        **extra: Any,
    ) -> Any:
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        if not standalone_mode:
            return rv
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


def _handle_shutdown(signum: int, _frame: FrameType | None) -> None:
    """Handle termination signals during long runs."""
    sig_name = signal.Signals(signum).name
    click.echo(f"\nReceived {sig_name}, stopping...", err=True)
    sys.exit(128 + signum)


def _setup_signal_handlers() -> None:
    """Set up handlers for termination signals."""
    signal.signal(signal.SIGINT, _handle_shutdown)
    signal.signal(signal.SIGTERM, _handle_shutdown)


def _exit_with_error(error: Exception, code: int) -> NoReturn:
    logger.debug("Exiting with code %d", code, exc_info=error)
    click.echo(to_json(format_error(error)))
    sys.exit(code)


@contextmanager
def _reported_errors() -> Iterator[None]:
    """Turn domain exceptions into an error object on stdout and the matching exit code."""
    try:
        yield
    except HypothesisError as e:
        _exit_with_error(e, EXIT_HYPOTHESIS)
    except (ConfigError, ConfigurationError, DomainError) as e:
        _exit_with_error(e, EXIT_USAGE)
    except (InsufficientDataError, NumericalBlowUpError, OutOfRangeError, SolverError, ConsistencyError) as e:
        _exit_with_error(e, EXIT_ESTIMATION)


def template_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Template flags shared by every single-template command."""
    options = [
        click.option("--alpha", type=float, default=None, help="Rightward coupling weight."),
        click.option("--a", "a", type=float, default=None, help="Self coupling weight."),
        click.option("--beta", type=float, default=None, help="Leftward coupling weight."),
        click.option("--template", "template", default=None, help="'alpha,a,beta' triple or preset name."),
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            default=None,
            help="JSON file whose keys override the flags.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def sim_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Simulation protocol flags."""
    options = [
        click.option("--dt", type=float, default=DEFAULT_DT, show_default=True, help="Runge-Kutta time step."),
        click.option("--t-end", type=float, default=DEFAULT_T_END, show_default=True, help="Final time."),
        click.option("--half-width", type=int, default=None, help="Window half width L (default: automatic)."),
        click.option(
            "--init-half-width",
            type=int,
            default=DEFAULT_INIT_HALF_WIDTH,
            show_default=True,
            help="Initial plateau covers |i| <= w0.",
        ),
        click.option("--init-level", type=float, default=None, help="Initial plateau height (default: K)."),
        click.option(
            "--snapshot-stride",
            type=int,
            default=DEFAULT_SNAPSHOT_STRIDE,
            show_default=True,
            help="Steps between stored snapshots.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


out_option = click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Directory for output files and the run manifest.",
)


def _resolve_params(params: dict[str, Any]) -> tuple[dict[str, Any], set[str]]:
    """Merge config-file overrides into the flag values; also return the overridden names."""
    config_path = params.pop("config_path", None)
    if config_path is None:
        return params, set()
    allowed = set(params) - {"out_dir"}
    overrides = load_config(config_path, allowed)
    logger.info("Config %s overrides %s", config_path, ", ".join(sorted(overrides)) or "nothing")
    return merge_config(params, overrides), set(overrides)


def _resolve_template(params: dict[str, Any]) -> Template:
    weights = [params.get(name) for name in ("alpha", "a", "beta")]
    if params.get("template"):
        if any(w is not None for w in weights):
            raise ConfigError("Use either --template or --alpha/--a/--beta, not both", field="template")
        return resolve_template(str(params["template"]))
    if any(w is None for w in weights):
        raise ConfigError("Specify --template or all of --alpha, --a and --beta", field="template")
    try:
        return Template(*(float(w) for w in weights))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), field="template") from e


def _manifest_parameters(params: dict[str, Any], template: Template) -> dict[str, Any]:
    parameters = {k: v for k, v in params.items() if k not in {"alpha", "a", "beta", "template", "out_dir"}}
    parameters["template"] = format_template(template)
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(parameters.items())}


class _Outputs:
    """Routes payloads to stdout, or to files plus a manifest when --out is given."""

    def __init__(self, command: str, out_dir: Path | None, parameters: dict[str, Any]) -> None:
        self.out_dir = out_dir
        self.started = time.perf_counter()
        self.manifest = RunManifest(command=command, parameters=parameters, tool_version=__version__)
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)

    def emit(self, text: str, filename: str, stdout: bool = True) -> None:
        if self.out_dir is None:
            if stdout:
                click.echo(text, nl=not text.endswith("\n"))
            return
        path = self.out_dir / filename
        path.write_text(text, encoding="utf-8")
        self.manifest.output_paths.append(str(path))

    def finish(self) -> None:
        if self.out_dir is None:
            return
        self.manifest.wall_time = time.perf_counter() - self.started
        path = self.manifest.write(self.out_dir)
        click.echo(f"Wrote {len(self.manifest.output_paths)} file(s) and {path}", err=True)


@click.group(cls=SpreadingGroup)
@click.version_option(package_name="cnn-spreading")
@click.option("-v", "--verbose", count=True, help="Increase log verbosity (-v info, -vv debug).")
def cli(verbose: int) -> None:
    """cnn-spreading - Spreading speeds of cellular neural network lattices."""
    level = LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)]
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


@cli.command("analyze")
@template_options
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True, help="Tolerance on |g(mu*)|.")
@out_option
def analyze_command(**params: Any) -> None:
    """Compute and classify both spreading speeds of a template."""
    with _reported_errors():
        params, _ = _resolve_params(params)
        template = _resolve_template(params)
        template.require_h()
        report = analyze(template, tol=float(params["tol"]))
        outputs = _Outputs("analyze", params.get("out_dir"), _manifest_parameters(params, template))
        outputs.emit(to_json(format_speed_report(report)), "report.json")
        outputs.finish()


@cli.command("phi-curve")
@template_options
@click.option(
    "--direction",
    type=click.Choice([d.value for d in Direction]),
    default=Direction.RIGHTWARD.value,
    show_default=True,
)
@click.option("--mu-min", type=float, default=0.1, show_default=True)
@click.option("--mu-max", type=float, default=5.0, show_default=True)
@click.option("--steps", type=int, default=100, show_default=True, help="Number of grid points.")
@out_option
def phi_curve_command(**params: Any) -> None:
    """Emit Phi(mu) on a uniform grid as CSV."""
    with _reported_errors():
        params, _ = _resolve_params(params)
        template = _resolve_template(params)
        mu_min, mu_max, steps = float(params["mu_min"]), float(params["mu_max"]), int(params["steps"])
        if not 0 < mu_min < mu_max:
            raise click.BadParameter(f"need 0 < mu-min < mu-max, got {mu_min:g}, {mu_max:g}", param_hint="--mu-min")
        if steps < 2:
            raise click.BadParameter(f"need at least 2 points, got {steps}", param_hint="--steps")

        curve = DispersionCurve(template, Direction(params["direction"]))
        samples = curve.sample(np.linspace(mu_min, mu_max, steps))

        if template.satisfies_h:
            speed, minimizer = solve_speed(curve)
            dense = grid_infimum(curve, mu_min=mu_min, mu_max=mu_max, step=(mu_max - mu_min) / 10_000)
            logger.info("Solver speed %.6g (mu* = %.6g), grid minimum %.6g", speed, minimizer.mu_star, dense)
            if dense < speed - 1e-6:
                logger.warning("Grid minimum %.9g lies below the solved speed %.9g", dense, speed)

        buffer = io.StringIO()
        write_phi_curve_csv(samples.mu, samples.phi, buffer)
        outputs = _Outputs("phi-curve", params.get("out_dir"), _manifest_parameters(params, template))
        outputs.emit(buffer.getvalue(), "phi_curve.csv")
        outputs.finish()


def _sim_config(
    params: dict[str, Any], template: Template, init_half_width: int, linearized: bool = False
) -> SimConfig:
    kwargs: dict[str, Any] = {
        "dt": float(params["dt"]),
        "t_end": float(params["t_end"]),
        "init_half_width": init_half_width,
        "init_level": None if params.get("init_level") is None else float(params["init_level"]),
        "snapshot_stride": int(params["snapshot_stride"]),
        "linearized": linearized,
    }
    if params.get("half_width") is None:
        return SimConfig.auto(template, **kwargs)
    return SimConfig(template, int(params["half_width"]), **kwargs)


@cli.command("simulate")
@template_options
@sim_options
@click.option("--linearized", is_flag=True, default=False, help="Integrate the linearized lattice.")
@out_option
def simulate_command(**params: Any) -> None:
    """Integrate the lattice and emit snapshots as "t,i,x" CSV."""
    _setup_signal_handlers()
    with _reported_errors():
        params, _ = _resolve_params(params)
        template = _resolve_template(params)
        config = _sim_config(params, template, int(params["init_half_width"]), bool(params.get("linearized")))
        click.echo(f"Simulating {template} on [-{config.half_width}, {config.half_width}]...", err=True)
        snapshots = simulate(config)

        parameters = _manifest_parameters(params, template)
        parameters["half_width"] = config.half_width
        buffer = io.StringIO()
        write_snapshots_csv(snapshots, buffer)
        outputs = _Outputs("simulate", params.get("out_dir"), parameters)
        outputs.emit(buffer.getvalue(), "snapshots.csv")
        outputs.finish()


@cli.command("estimate")
@template_options
@sim_options
@click.option("--threshold", type=float, default=None, help="Level set value (default: K/2).")
@click.option("--fit-fraction", type=float, default=0.5, show_default=True, help="Share of the run used for the fit.")
@out_option
@click.pass_context
def estimate_command(ctx: click.Context, **params: Any) -> None:
    """Simulate, track both fronts and compare fitted with formula speeds."""
    _setup_signal_handlers()
    with _reported_errors():
        w0_flag_is_default = ctx.get_parameter_source("init_half_width") is click.core.ParameterSource.DEFAULT
        params, overridden = _resolve_params(params)
        template = _resolve_template(params)
        template.require_h()
        report = analyze(template)

        init_half_width = int(params["init_half_width"])
        if w0_flag_is_default and "init_half_width" not in overridden:
            init_half_width = default_init_half_width(report)
            if init_half_width != DEFAULT_INIT_HALF_WIDTH:
                logger.info("Retreating front predicted, initial plateau widened to w0=%d", init_half_width)

        config = _sim_config(params, template, init_half_width)
        click.echo(f"Simulating {template} up to t={config.t_end:g}...", err=True)
        snapshots = simulate(config)

        threshold = params.get("threshold")
        threshold = None if threshold is None else float(threshold)
        fit_fraction = float(params["fit_fraction"])
        plus = estimate_speed(snapshots, Direction.RIGHTWARD, threshold, fit_fraction)
        minus = estimate_speed(snapshots, Direction.LEFTWARD, threshold, fit_fraction)

        parameters = _manifest_parameters(params, template)
        parameters.update(half_width=config.half_width, init_half_width=init_half_width)
        outputs = _Outputs("estimate", params.get("out_dir"), parameters)
        outputs.emit(to_json(format_estimate(report, plus, minus)), "estimate.json")
        for name, trace in (("trace_plus.csv", plus), ("trace_minus.csv", minus)):
            buffer = io.StringIO()
            write_trace_csv(trace, buffer)
            outputs.emit(buffer.getvalue(), name, stdout=False)
        outputs.finish()


@cli.command("sweep")
@click.argument("mode", type=click.Choice(["sequence", "limit"]))
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="Parallel solver processes.")
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True, help="Tolerance on |g(mu*)|.")
@out_option
def sweep_command(mode: str, spec_path: Path, workers: int, tol: float, out_dir: Path | None) -> None:
    """Run a continuity (sequence) or limiting-case (limit) sweep and emit its convergence table."""
    _setup_signal_handlers()
    with _reported_errors():
        spec = load_sweep_spec(spec_path)
        if spec.mode != mode:
            raise ConfigError(f"Spec declares mode '{spec.mode}' but '{mode}' was requested", field="mode")

        if spec.sequence is not None:
            report = verify_speed_continuity(spec.sequence, spec.eps, tol=tol, workers=workers)
            rows = continuity_rows(report)
            met = report.converged
            if not report.sandwich_holds:
                logger.warning("Envelope sandwich violated for at least one index")
        else:
            path = spec.path
            assert path is not None
            plus = limiting_speed_path(path, spec.s_values, Direction.RIGHTWARD, tol=tol)
            minus = limiting_speed_path(path, spec.s_values, Direction.LEFTWARD, tol=tol)
            rows = limit_path_rows(plus, minus)
            met = plus.final_gap <= spec.eps and minus.final_gap <= spec.eps

        buffer = io.StringIO()
        write_convergence_csv(rows, buffer)
        parameters = {"mode": mode, "spec": str(spec_path), "eps": spec.eps, "tol": tol, "workers": workers}
        outputs = _Outputs("sweep", out_dir, parameters)
        outputs.emit(buffer.getvalue(), "convergence.csv")
        outputs.finish()

    if not met:
        click.echo(f"Tolerance {spec.eps:g} not met at the final grid point", err=True)
        sys.exit(EXIT_ESTIMATION)


if __name__ == "__main__":
    cli()
