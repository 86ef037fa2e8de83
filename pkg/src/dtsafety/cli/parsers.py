"""Argument parser builders for the dtsafety CLI."""

import argparse
from pathlib import Path

FORMATS = ("text", "json", "csv")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=Path,
        help="Path to dtsafety.toml (optional)",
    )
    parser.add_argument(
        "--log-level",
        type=str,
        help="Override log level (e.g. INFO, DEBUG)",
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        help="Enable debug logging (sets both file and console to DEBUG)",
    )
    parser.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Enable verbose console output (sets console to DEBUG)",
    )
    parser.add_argument(
        "--format",
        choices=FORMATS,
        default="text",
        help="Report format (default: text)",
    )
    parser.add_argument(
        "--output", "-o",
        type=Path,
        help="Write the report to this file instead of stdout",
    )


def _add_model(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("model", type=Path, help="Model file (.ssm)")
    parser.add_argument(
        "--state-cap",
        type=int,
        help="Abort when more global states are discovered (default from config)",
    )
    parser.add_argument(
        "--pin",
        action="append",
        metavar="NAME=no|yes",
        help="Pin a failure mode to a constant state (repeatable)",
    )


def _add_horizon(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("-k", type=int, dest="k", help="Horizon in steps")
    group.add_argument(
        "--time",
        type=str,
        help="Horizon as a duration (h, min, s, ms); must be a multiple of dt",
    )


def _add_workers(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--workers",
        type=int,
        help="Worker threads for the critical-set search (default: auto)",
    )


def _new(prog: str, description: str) -> argparse.ArgumentParser:
    return argparse.ArgumentParser(prog=f"dtsafety {prog}", description=description)


def build_validate_parser() -> argparse.ArgumentParser:
    """Build argument parser for the validate command."""
    parser = _new("validate", "Parse, lower and validate a model")
    _add_model(parser)
    _add_common(parser)
    parser.add_argument(
        "--flavor",
        choices=("auto", "nondeterministic", "dtmc", "mdp"),
        default="auto",
        help="Composition to validate; auto checks the qualitative model and, "
        "when every failure mode has a rate or probability, the dtmc",
    )
    return parser


def build_dcca_parser() -> argparse.ArgumentParser:
    """Build argument parser for the dcca command."""
    parser = _new("dcca", "Compute the minimal critical failure sets of the hazard")
    _add_model(parser)
    _add_common(parser)
    _add_workers(parser)
    parser.add_argument(
        "--occurrence",
        choices=("state", "history"),
        help="Failure occurrence semantics (default from config)",
    )
    return parser


def build_hazard_parser() -> argparse.ArgumentParser:
    """Build argument parser for the hazard command."""
    parser = _new("hazard", "Probability that the hazard occurs within the horizon")
    _add_model(parser)
    _add_common(parser)
    _add_horizon(parser)
    parser.add_argument(
        "--mdp",
        action="store_true",
        help="Compose as an MDP and report the worst case over nondeterministic choices",
    )
    parser.add_argument(
        "--curve",
        type=int,
        metavar="STRIDE",
        help="Also sample the hazard probability every STRIDE steps",
    )
    parser.add_argument(
        "--curve-output",
        type=Path,
        help="CSV file for the sampled curve (with --curve)",
    )
    parser.add_argument(
        "--summation",
        choices=("plain", "compensated"),
        help="Value-iteration summation (default from config)",
    )
    parser.add_argument(
        "--timing",
        action="store_true",
        help="Include runtime_ms in the JSON report",
    )
    return parser


def build_fta_parser() -> argparse.ArgumentParser:
    """Build argument parser for the fta-bound command."""
    parser = _new("fta-bound", "Fault-tree style upper bound from the minimal critical sets")
    _add_model(parser)
    _add_common(parser)
    _add_horizon(parser)
    _add_workers(parser)
    parser.add_argument(
        "--probability",
        action="append",
        metavar="NAME=P",
        help="Occurrence probability of a failure mode within the horizon (repeatable)",
    )
    parser.add_argument(
        "--single-demand",
        action="store_true",
        help="Use the per-demand probability of per-demand modes as their horizon probability",
    )
    parser.add_argument(
        "--compare",
        action="store_true",
        help="Also model-check the hazard probability and compare",
    )
    return parser


def build_approx_parser() -> argparse.ArgumentParser:
    """Build argument parser for the approx-error command."""
    parser = _new("approx-error", "Error of the geometric approximation of an exponential failure CDF")
    _add_common(parser)
    parser.add_argument("--rate", required=True, help="Failure rate, e.g. 1e-2/h")
    parser.add_argument("--dt", required=True, help="Temporal resolution, e.g. 1s or 10ms")
    parser.add_argument(
        "--hours",
        type=float,
        nargs="+",
        help="Explicit times in hours",
    )
    parser.add_argument("--from", dest="start", type=float, default=0.0, help="Sweep start in hours")
    parser.add_argument("--to", dest="stop", type=float, default=500.0, help="Sweep end in hours")
    parser.add_argument("--points", type=int, default=101, help="Number of sweep points")
    return parser


def build_simulate_parser() -> argparse.ArgumentParser:
    """Build argument parser for the simulate command."""
    parser = _new("simulate", "Monte Carlo estimate of the hazard probability")
    _add_model(parser)
    _add_common(parser)
    _add_horizon(parser)
    parser.add_argument("--samples", type=int, help="Number of trajectories (default from config)")
    parser.add_argument("--seed", type=int, help="Random seed (default from config)")
    parser.add_argument("--confidence", type=float, default=0.95, help="Confidence level of the interval")
    parser.add_argument(
        "--compare",
        action="store_true",
        help="Also model-check the hazard probability and compare",
    )
    parser.add_argument(
        "--scale-rates",
        type=float,
        default=1.0,
        metavar="FACTOR",
        help="Multiply every failure rate and per-demand probability by FACTOR",
    )
    return parser


def build_print_parser() -> argparse.ArgumentParser:
    """Build argument parser for the print command."""
    parser = _new("print", "Print a model in canonical form")
    parser.add_argument("model", type=Path, help="Model file (.ssm)")
    parser.add_argument("--output", "-o", type=Path, help="Write to this file instead of stdout")
    return parser


def build_init_parser() -> argparse.ArgumentParser:
    """Build argument parser for the init command."""
    parser = _new("init", "Initialize a dtsafety working directory")
    parser.add_argument(
        "--force",
        action="store_true",
        help="Overwrite existing dtsafety.toml if it exists",
    )
    parser.add_argument(
        "--no-config",
        action="store_true",
        help="Skip creating dtsafety.toml",
    )
    return parser
