"""Command runners for the dtsafety CLI."""

from __future__ import annotations

import argparse
from dataclasses import dataclass, replace
import logging
from pathlib import Path
import sys
import time
from typing import Callable

from ..composition import Flavor, StateCapExceeded
from ..config import (
    CONFIG_FILENAME,
    Config,
    ConfigError,
    LoggingConfig,
    config_summary,
    load_config,
    write_default_config,
)
from ..diagnostics import Diagnostic
from ..error_log import ErrorCategory, ErrorLog
from ..failures import (
    AnalysisMode,
    approximation_sweep,
    max_absolute_error,
    scale_failure_probabilities,
    sweep_hours,
)
from ..logging_setup import LoggingContext, initialize_logging
from ..model import (
    AnalysisError,
    FailureModeDecl,
    FailurePattern,
    ModelError,
    SystemModel,
    ValidationError,
)
from ..modellang import ParseError, format_model, read_source
from ..pipeline import (
    LoadedModel,
    analysable_model,
    build_space,
    load,
    parse_duration,
    parse_pins,
    parse_rate,
    resolve_horizon,
)
from ..qualitative import minimal_critical_sets
from ..quantitative import fta_bound, hazard_curve, hazard_probability, horizon_probabilities
from ..reports import (
    approx_csv,
    approx_report,
    curve_csv,
    dcca_report,
    fta_report,
    hazard_report,
    simulation_report,
    to_json,
    validation_report,
    write_text_atomic,
)
from ..simulation import monte_carlo_hazard
from ..utils import format_float, generate_run_id
from ..validation import validate
from .rendering import (
    render_approx,
    render_dcca,
    render_diagnostics,
    render_fta,
    render_hazard,
    render_simulation,
    render_validation,
)

EXIT_OK = 0
EXIT_MODEL_ERROR = 1
EXIT_IO_ERROR = 2
EXIT_RESOURCE_CAP = 3


@dataclass
class Session:
    config: Config
    log_ctx: LoggingContext
    error_log: ErrorLog

    @property
    def logger(self) -> logging.Logger:
        return self.log_ctx.logger


class CommandError(ModelError):
    """Usage errors detected by a command; reported with exit code 1."""


def run_validate_cmd(args: argparse.Namespace) -> int:
    """Parse, lower and validate; exit 0 iff there are no errors."""

    def action(session: Session, loaded: LoadedModel) -> int:
        pins = parse_pins(args.pin)
        flavors = _validation_flavors(args.flavor, loaded.model)
        diagnostics: list[Diagnostic] = []
        for flavor in flavors:
            mode = AnalysisMode.QUALITATIVE if flavor is Flavor.NONDETERMINISTIC else AnalysisMode.PROBABILISTIC
            analysed = analysable_model(
                loaded.model, mode, pins=pins, elide_decide=session.config.analysis.elide_decide
            )
            diagnostics.extend(validate(analysed, flavor, state_cap=session.config.analysis.state_cap))
        errors = [item for item in diagnostics if item.is_error]
        if errors:
            print(render_diagnostics(errors, str(loaded.path)), file=sys.stderr)
            session.error_log.record(
                ErrorCategory.VALIDATION, f"{len(errors)} validation error(s)", step="validate", diagnostics=errors
            )
            _save_error_log(session)
        names = [flavor.value for flavor in flavors]
        if args.format == "json":
            _emit(args, to_json(validation_report(loaded.model.name, diagnostics, str(loaded.path))))
        else:
            _emit(args, render_validation(loaded.model.name, names, diagnostics))
        return EXIT_MODEL_ERROR if errors else EXIT_OK

    return _run_model_command(args, "validate", action)


def run_dcca_cmd(args: argparse.Namespace) -> int:
    """Minimal critical sets of the hazard."""

    def action(session: Session, loaded: LoadedModel) -> int:
        analysis = session.config.analysis
        built = build_space(loaded.model, Flavor.NONDETERMINISTIC, analysis, pins=parse_pins(args.pin))
        result = minimal_critical_sets(
            built.space,
            loaded.model.failure_names,
            hazard_name=loaded.model.hazard_name,
            occurrence=analysis.occurrence,
            workers=analysis.workers,
            state_cap=analysis.state_cap,
        )
        if args.format == "json":
            _emit(args, to_json(dcca_report(loaded.model.name, result, analysis.occurrence)))
        elif args.format == "csv":
            rows = ["size,failures"] + [f"{len(item.failures)},{' '.join(item.failures)}" for item in result.sets]
            _emit(args, "\n".join(rows) + "\n")
        else:
            _emit(args, render_dcca(result))
        return EXIT_OK

    return _run_model_command(args, "dcca", action)


def run_hazard_cmd(args: argparse.Namespace) -> int:
    """Bounded hazard probability, optionally with a sampled curve."""

    def action(session: Session, loaded: LoadedModel) -> int:
        analysis = session.config.analysis
        summation = args.summation or analysis.summation
        k = resolve_horizon(loaded.model, args.k, args.time)
        flavor = Flavor.MDP if args.mdp else Flavor.DTMC
        built = build_space(loaded.model, flavor, analysis, pins=parse_pins(args.pin))

        stride = args.curve or analysis.curve_stride
        if stride is None and args.format == "csv":
            stride = max(k, 1)
        started = time.perf_counter()
        curve = None
        if stride is not None:
            curve = hazard_curve(built.space, k, stride, summation=summation)
            probability = curve.final.probability
        else:
            probability = hazard_probability(built.space, k, summation=summation)
        runtime_ms = (time.perf_counter() - started) * 1000.0
        session.logger.info("Hazard probability of %s at k=%d: %.6g", loaded.model.name, k, probability)

        if curve is not None and args.format != "csv":
            curve_path = args.curve_output or session.config.paths.reports / f"{loaded.slug}-curve.csv"
            write_text_atomic(curve_path, curve_csv(curve))
            session.logger.info("Wrote hazard curve to %s", curve_path)

        if args.format == "json":
            report = hazard_report(
                loaded.model.name,
                built.space,
                k,
                probability,
                curve=curve,
                runtime_ms=runtime_ms if args.timing else None,
            )
            _emit(args, to_json(report))
        elif args.format == "csv":
            _emit(args, curve_csv(curve))  # type: ignore[arg-type]
        else:
            points = len(curve.points) if curve is not None else None
            _emit(args, render_hazard(built.space, k, probability, runtime_ms, points))
        return EXIT_OK

    return _run_model_command(args, "hazard", action)


def run_fta_cmd(args: argparse.Namespace) -> int:
    """Upper bound on the hazard probability from the minimal critical sets."""

    def action(session: Session, loaded: LoadedModel) -> int:
        analysis = session.config.analysis
        pins = parse_pins(args.pin)
        k = resolve_horizon(loaded.model, args.k, args.time)
        qualitative = build_space(loaded.model, Flavor.NONDETERMINISTIC, analysis, pins=pins)
        result = minimal_critical_sets(
            qualitative.space,
            loaded.model.failure_names,
            hazard_name=loaded.model.hazard_name,
            occurrence=analysis.occurrence,
            workers=analysis.workers,
            state_cap=analysis.state_cap,
        )
        supplied = parse_probabilities(args.probability)
        probabilities = horizon_probabilities(loaded.model, k, supplied, single_demand=args.single_demand)
        model_checked = None
        if args.compare:
            probabilistic = build_space(loaded.model, Flavor.DTMC, analysis, pins=pins)
            model_checked = hazard_probability(probabilistic.space, k, summation=analysis.summation)
        try:
            report = fta_bound(result.as_name_sets(), probabilities, model_checked=model_checked)
        except AnalysisError as exc:
            raise AnalysisError(
                f"{exc}; pass --probability NAME=P for per-demand modes or use --single-demand"
            ) from exc

        if args.format == "json":
            _emit(args, to_json(fta_report(loaded.model.name, k, report, probabilities)))
        elif args.format == "csv":
            rows = ["set,product"]
            rows.extend(f"{' '.join(term.failures)},{format_float(term.product)}" for term in report.terms)
            _emit(args, "\n".join(rows) + "\n")
        else:
            _emit(args, render_fta(report, k))
        return EXIT_OK

    return _run_model_command(args, "fta-bound", action)


def run_simulate_cmd(args: argparse.Namespace) -> int:
    """Monte Carlo estimate of the hazard probability."""

    def action(session: Session, loaded: LoadedModel) -> int:
        analysis = session.config.analysis
        k = resolve_horizon(loaded.model, args.k, args.time)
        model = loaded.model
        if args.scale_rates != 1.0:
            model = scale_failure_probabilities(model, args.scale_rates)
        built = build_space(model, Flavor.DTMC, analysis, pins=parse_pins(args.pin))
        samples = args.samples or analysis.mc_samples
        seed = args.seed if args.seed is not None else analysis.mc_seed
        estimate = monte_carlo_hazard(built.space, k, samples, seed, confidence=args.confidence)
        model_checked = hazard_probability(built.space, k, summation=analysis.summation) if args.compare else None
        if args.format == "json":
            _emit(args, to_json(simulation_report(model.name, k, estimate, model_checked=model_checked)))
        else:
            _emit(args, render_simulation(estimate, k, model_checked))
        return EXIT_OK

    return _run_model_command(args, "simulate", action)


def run_approx_cmd(args: argparse.Namespace) -> int:
    """Exponential vs. geometric failure CDF over a range of times."""
    session = _start_session(args, "approx-error")
    if isinstance(session, int):
        return session
    try:
        try:
            rate = parse_rate(args.rate)
            dt_seconds = parse_duration(args.dt)
            hours = args.hours if args.hours else sweep_hours(args.start, args.stop, args.points)
            points = approximation_sweep(rate, dt_seconds, hours)
        except (ModelError, ValueError) as exc:
            return _fail(session, exc, "approx-error")
        if args.format == "json":
            _emit(args, to_json(approx_report(rate, dt_seconds, points)))
        elif args.format == "csv":
            _emit(args, approx_csv(points))
        else:
            _emit(args, render_approx(points, max_absolute_error(points)))
        return EXIT_OK
    finally:
        session.log_ctx.close()


def run_print_cmd(args: argparse.Namespace) -> int:
    """Print a model in canonical form."""
    try:
        source = read_source(args.model)
    except OSError as exc:
        print(f"Cannot read {args.model}: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR
    except ParseError as exc:
        print(render_diagnostics(exc.diagnostics, str(args.model)), file=sys.stderr)
        return EXIT_MODEL_ERROR
    _emit(args, format_model(source))
    return EXIT_OK


def run_init_cmd(args: argparse.Namespace) -> int:
    """Initialize a dtsafety working directory."""
    cwd = Path.cwd()

    folders = {
        "logs": cwd / "logs",
        "reports": cwd / "reports",
        "errors": cwd / "errors",
    }

    created_folders = []
    for name, path in folders.items():
        if not path.exists():
            path.mkdir(parents=True, exist_ok=True)
            created_folders.append(name)
        else:
            print(f"  {name}/ already exists")

    for name in created_folders:
        print(f"  Created {name}/")

    config_path = cwd / CONFIG_FILENAME
    if args.no_config:
        print(f"  Skipping {CONFIG_FILENAME} creation (--no-config)")
    elif config_path.exists() and not args.force:
        print(f"  {CONFIG_FILENAME} already exists (use --force to overwrite)")
    else:
        existed = config_path.exists()
        write_default_config(config_path)
        print(f"  {'Overwrote' if existed else 'Created'} {CONFIG_FILENAME}")
    return EXIT_OK


def parse_probabilities(values: list[str] | None) -> dict[str, float]:
    """``NAME=P`` pairs from the command line."""
    result: dict[str, float] = {}
    for value in values or []:
        name, sep, raw = value.partition("=")
        try:
            probability = float(raw)
        except ValueError:
            probability = -1.0
        if not sep or not name.strip() or not 0.0 <= probability <= 1.0:
            raise CommandError(f"invalid probability '{value}'; expected NAME=P with P in [0, 1]")
        result[name.strip()] = probability
    return result


def _validation_flavors(choice: str, model: SystemModel) -> list[Flavor]:
    if choice != "auto":
        return [Flavor(choice)]
    flavors = [Flavor.NONDETERMINISTIC]
    if all(_has_probabilities(decl) for decl in model.failures):
        flavors.append(Flavor.DTMC)
    return flavors


def _has_probabilities(decl: FailureModeDecl) -> bool:
    if decl.pattern is FailurePattern.PER_DEMAND:
        return decl.probability is not None
    if decl.pattern is FailurePattern.TRANSIENT and decl.repair_per_hour is None:
        return False
    return decl.rate_per_hour is not None


def _start_session(args: argparse.Namespace, slug: str) -> Session | int:
    try:
        config = load_config(args.config, cwd=Path.cwd())
    except (FileNotFoundError, ConfigError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_IO_ERROR

    # Apply logging overrides in priority order: --debug > --verbose > --log-level
    if getattr(args, "debug", False):
        config = override_log_level(config, "DEBUG")
    elif getattr(args, "verbose", False):
        config = override_console_level(config, "DEBUG")
    elif getattr(args, "log_level", None):
        config = override_log_level(config, args.log_level)
    config = override_analysis(config, args)

    run_id = generate_run_id()
    try:
        log_ctx = initialize_logging(config, run_id)
    except OSError as exc:
        print(f"Cannot set up logging: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR
    if getattr(args, "verbose", False):
        log_ctx.logger.debug("%s", config_summary(config))
    error_log = log_ctx.error_log_store.open(slug, run_id)
    return Session(config=config, log_ctx=log_ctx, error_log=error_log)


def _run_model_command(
    args: argparse.Namespace, step: str, action: Callable[[Session, LoadedModel], int]
) -> int:
    session = _start_session(args, args.model.stem)
    if isinstance(session, int):
        return session
    try:
        with session.log_ctx.model_scope(args.model.stem) as logger:
            logger.info("Running %s on %s", step, args.model)
            try:
                return _load_and_run(session, args, step, action)
            finally:
                logger.info("Finished %s on %s", step, args.model)
    finally:
        session.log_ctx.close()


def _load_and_run(
    session: Session, args: argparse.Namespace, step: str, action: Callable[[Session, LoadedModel], int]
) -> int:
    try:
        return action(session, load(args.model))
    except (ParseError, ValidationError) as exc:
        errors = [item for item in exc.diagnostics if item.is_error]
        print(render_diagnostics(errors, str(args.model)), file=sys.stderr)
        return _fail(session, exc, step, echo=False)
    except StateCapExceeded as exc:
        return _fail(session, exc, step, exit_code=EXIT_RESOURCE_CAP)
    except ModelError as exc:
        return _fail(session, exc, step)
    except OSError as exc:
        return _fail(session, exc, step, exit_code=EXIT_IO_ERROR)


def _fail(
    session: Session,
    exc: BaseException,
    step: str,
    *,
    exit_code: int = EXIT_MODEL_ERROR,
    echo: bool = True,
) -> int:
    if echo:
        print(f"error: {exc}", file=sys.stderr)
    session.logger.error("%s failed: %s", step, exc)
    session.error_log.record_exception(exc, step)
    _save_error_log(session)
    return exit_code


def _save_error_log(session: Session) -> None:
    try:
        session.log_ctx.error_log_store.save(session.error_log)
    except OSError as exc:
        session.logger.warning("Could not save error log: %s", exc)


def _emit(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "output", None) is not None:
        write_text_atomic(args.output, text)
    else:
        sys.stdout.write(text)


def override_log_level(config: Config, level: str) -> Config:
    """Override the logging configuration with a new log level."""
    logging_cfg = LoggingConfig(level=level.upper(), console_level=level.upper())
    return replace(config, logging=logging_cfg)


def override_console_level(config: Config, level: str) -> Config:
    """Override only the console log level (file level remains unchanged)."""
    logging_cfg = LoggingConfig(
        level=config.logging.level,
        console_level=level.upper(),
    )
    return replace(config, logging=logging_cfg)


def override_analysis(config: Config, args: argparse.Namespace) -> Config:
    """Command-line analysis options take precedence over the config file."""
    updates = {}
    if getattr(args, "state_cap", None) is not None:
        updates["state_cap"] = args.state_cap
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if getattr(args, "occurrence", None) is not None:
        updates["occurrence"] = args.occurrence
    if not updates:
        return config
    return replace(config, analysis=replace(config.analysis, **updates))

