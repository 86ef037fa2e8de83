"""Main CLI entrypoint for dtsafety."""

import sys
from typing import Sequence

from .commands import (
    run_approx_cmd,
    run_dcca_cmd,
    run_fta_cmd,
    run_hazard_cmd,
    run_init_cmd,
    run_print_cmd,
    run_simulate_cmd,
    run_validate_cmd,
)
from .parsers import (
    build_approx_parser,
    build_dcca_parser,
    build_fta_parser,
    build_hazard_parser,
    build_init_parser,
    build_print_parser,
    build_simulate_parser,
    build_validate_parser,
)

COMMANDS = {
    "validate": (build_validate_parser, run_validate_cmd),
    "dcca": (build_dcca_parser, run_dcca_cmd),
    "hazard": (build_hazard_parser, run_hazard_cmd),
    "fta-bound": (build_fta_parser, run_fta_cmd),
    "approx-error": (build_approx_parser, run_approx_cmd),
    "simulate": (build_simulate_parser, run_simulate_cmd),
    "print": (build_print_parser, run_print_cmd),
    "init": (build_init_parser, run_init_cmd),
}

USAGE = "usage: dtsafety {" + ",".join(COMMANDS) + "} ...\n"


def main(argv: Sequence[str] | None = None) -> int:
    """Main entrypoint for the dtsafety CLI.

    The first argument selects the subcommand; each subcommand has its own
    parser. Exit codes: 0 ok, 1 model or analysis error, 2 I/O or
    configuration error, 3 state cap exceeded.
    """
    argv = list(argv) if argv is not None else sys.argv[1:]

    if not argv or argv[0] in {"-h", "--help"}:
        sys.stdout.write(USAGE)
        return 0 if argv else 2
    if argv[0] == "--version":
        sys.stdout.write("dtsafety 0.1.0\n")
        return 0

    entry = COMMANDS.get(argv[0])
    if entry is None:
        sys.stderr.write(USAGE)
        sys.stderr.write(f"dtsafety: unknown command '{argv[0]}'\n")
        return 2
    build_parser, run = entry
    args = build_parser().parse_args(argv[1:])
    return run(args)
