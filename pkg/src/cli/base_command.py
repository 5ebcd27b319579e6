"""Base command implementation."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import structlog
from pydantic import BaseModel, Field

logger = structlog.get_logger()

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


class CommandInput(BaseModel):
    """Base input model for commands."""

    command: list[str] = Field(default_factory=list, description="Command line echoed into the report")
    out: Optional[str] = Field(default=None, description="Path of the machine-readable report")


class CommandOutput(BaseModel):
    """Base output model for commands.

    ``exit_code`` follows the contract 0 = pass, 1 = certified failure, 2 = operational
    error. ``data`` holds the report document; ``lines`` the human-readable summary.
    """

    success: bool
    exit_code: int = EXIT_PASS
    message: str
    lines: list[str] = Field(default_factory=list)
    data: Optional[Dict[str, Any]] = None
    error: Optional[str] = None

    def __str__(self) -> str:
        """Format command output as readable text."""
        if not self.success:
            return f"Error: {self.error or self.message}"
        result = f"{self.message}\n"
        for line in self.lines:
            result += f"  {line}\n"
        return result


class BaseCommand(ABC):
    """Base class for all CLI commands."""

    def __init__(self, name: str, description: str):
        """Initialize the command.

        Args:
            name: Command name (the CLI verb)
            description: Command description
        """
        self.name = name
        self.description = description
        self.logger = logger.bind(command=name)

    @abstractmethod
    def execute(self, input_data: CommandInput) -> CommandOutput:
        """Execute the command.

        Args:
            input_data: Command parameters

        Returns:
            Command result
        """

    def validate_input(self, input_data: Dict[str, Any]) -> CommandInput:
        """Validate and parse input data.

        Args:
            input_data: Raw input data

        Returns:
            Validated input model
        """
        try:
            return self.input_model(**input_data)
        except Exception as e:
            self.logger.error("input_validation_failed", error=str(e))
            raise ValueError(f"Invalid input: {str(e)}")

    @property
    @abstractmethod
    def input_model(self) -> type[CommandInput]:
        """Return the input model class."""

    def run(self, input_data: Dict[str, Any]) -> CommandOutput:
        """Validate raw arguments and execute; invalid arguments are operational errors."""
        try:
            parsed = self.validate_input(input_data)
        except ValueError as e:
            return self.handle_error(e, self.name)
        return self.execute(parsed)

    def log_execution(self, action: str, **kwargs: Any) -> None:
        """Log command execution.

        Args:
            action: Action being performed
            **kwargs: Additional context
        """
        self.logger.info("command_execution", action=action, **kwargs)

    def handle_error(self, error: Exception, context: str) -> CommandOutput:
        """Handle command execution errors.

        Args:
            error: The error that occurred
            context: Context about where the error occurred

        Returns:
            Error output carrying the operational exit code
        """
        self.logger.error("command_error", context=context, error=str(error))
        return CommandOutput(
            success=False,
            exit_code=EXIT_ERROR,
            message=f"Error in {context}",
            error=str(error),
        )
