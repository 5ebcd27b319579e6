"""Argument parsing and dispatch for the markov-copula command line."""

import argparse
import sys
from typing import Any, Dict, List, Optional, TextIO

from config import __version__, settings
from copula_builder import ObjectiveKind

from .base_command import EXIT_ERROR, CommandOutput
from .commands import COMMANDS

CLI_OBJECTIVES = [k.value for k in ObjectiveKind if k is not ObjectiveKind.MAXIMIZE_WEIGHTED]


class ArgumentError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so usage errors keep exit code 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="markov-copula", description="Markov copulae: construction and consistency audits")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbs = parser.add_subparsers(dest="verb", required=True, parser_class=Parser)

    def verb(name: str) -> argparse.ArgumentParser:
        sub = verbs.add_parser(name, help=COMMANDS[name].description)
        sub.add_argument("--out", help="write the JSON report to this path")
        return sub

    validate = verb("validate")
    validate.add_argument("model")
    validate.add_argument("--grid", nargs="+", type=float, help="probe times")

    check = verb("check")
    check.add_argument("model")
    check.add_argument("--mode", choices=["strong", "weak", "both"], default="both")
    check.add_argument("--grid", nargs="+", type=float, help="probe/grid times")
    check.add_argument(
        "--depth", type=int, default=settings.default_event_depth, help="path-event depth 1..3"
    )
    check.add_argument("--factor", default="all", help="1-based factor index or 'all'")

    build = verb("build")
    build.add_argument("marginals", nargs="+", help="single-factor marginal model files")
    build.add_argument("--objective", choices=CLI_OBJECTIVES, default=ObjectiveKind.INDEPENDENT.value)
    build.add_argument("--grid", nargs="+", type=float, help="probe times for time-dependent marginals")
    build.add_argument("--model-out", dest="model_out", help="write the joint model to this path")

    simulate = verb("simulate")
    simulate.add_argument("model")
    simulate.add_argument("--t", type=float, required=True, help="horizon")
    simulate.add_argument("--paths", type=int, default=settings.default_paths)
    simulate.add_argument("--seed", type=int, default=settings.default_seed)
    simulate.add_argument("--report", choices=["stats", "empirical", "both"], default="stats")
    return parser


def run(argv: List[str], stdout: Optional[TextIO] = None) -> int:
    """Parse ``argv``, run the command, print its text and return the exit code."""
    stdout = stdout or sys.stdout
    try:
        namespace = build_parser().parse_args(argv)
    except ArgumentError as e:
        print(f"Error: {e}", file=stdout)
        return EXIT_ERROR

    arguments: Dict[str, Any] = {k: v for k, v in vars(namespace).items() if k != "verb" and v is not None}
    arguments["command"] = ["markov-copula", *argv]
    output: CommandOutput = COMMANDS[namespace.verb].run(arguments)
    print(str(output), end="", file=stdout)
    return output.exit_code
