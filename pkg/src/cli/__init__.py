"""Command line: model files, reports and the validate/check/build/simulate commands."""

from .app import build_parser, run
from .base_command import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, BaseCommand, CommandInput, CommandOutput
from .commands import (
    COMMANDS,
    BuildCommand,
    CheckCommand,
    SimulateCommand,
    ValidateCommand,
    default_grid,
)
from .model_file import LoadedModel, ModelFile, ModelParseError, load_model, parse_model, write_model
from .report import ReportFile

__all__ = [
    "EXIT_PASS",
    "EXIT_FAIL",
    "EXIT_ERROR",
    "BaseCommand",
    "CommandInput",
    "CommandOutput",
    "ValidateCommand",
    "CheckCommand",
    "BuildCommand",
    "SimulateCommand",
    "COMMANDS",
    "default_grid",
    "ModelFile",
    "ModelParseError",
    "LoadedModel",
    "load_model",
    "parse_model",
    "write_model",
    "ReportFile",
    "build_parser",
    "run",
]
