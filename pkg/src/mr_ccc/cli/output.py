"""Output mode management for CLI."""

import contextvars
from enum import Enum


class OutputMode(str, Enum):
    """How command summaries are rendered. CSV artifacts are unaffected."""

    HUMAN = "human"  # Rich tables on stderr
    JSON = "json"  # One JSON document on stdout


_output_mode_var: contextvars.ContextVar[OutputMode] = contextvars.ContextVar("output_mode", default=OutputMode.HUMAN)


def set_output_mode(mode: OutputMode) -> None:
    """Set the output mode for the current context."""
    _output_mode_var.set(mode)


def get_output_mode() -> OutputMode:
    """Get the current output mode (defaults to HUMAN)."""
    return _output_mode_var.get()


def is_json_mode() -> bool:
    return get_output_mode() == OutputMode.JSON
