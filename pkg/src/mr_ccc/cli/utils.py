"""Common CLI utilities."""

from collections.abc import Callable, Generator
from contextlib import contextmanager
from pathlib import Path
from typing import TYPE_CHECKING, Any, TypeVar

import typer
from loguru import logger
from pydantic import ValidationError

from ..core.config import McmcSettings, RunConfig, load_config_file
from ..core.errors import ConfigurationError, DataValidationError, SamplerError, TripletError
from ..settings import settings

if TYPE_CHECKING:
    from .formatters import BaseOutputFormatter

EXIT_USAGE = 1
EXIT_DATA = 2

T = TypeVar("T")


@contextmanager
def cli_error_handler(formatter: "BaseOutputFormatter") -> Generator[None, None, None]:
    """Map exceptions to the CLI exit-code contract.

    - Data, file and configuration problems exit with code 2
    - Invalid option values and anything unexpected exit with code 1
    - typer.Exit is re-raised unchanged

    Example:
        with cli_error_handler(formatter):
            dataset = read_dataset(path)
    """
    try:
        yield
    except typer.Exit:
        raise
    except FileNotFoundError as e:
        logger.error(f"File not found: {e}")
        formatter.print_error(f"Error: {e}")
        raise typer.Exit(EXIT_DATA) from e
    except (DataValidationError, ConfigurationError, SamplerError, TripletError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        formatter.print_error(f"Error: {e}")
        raise typer.Exit(EXIT_DATA) from e
    except ValidationError as e:
        logger.error(f"Invalid options: {e}")
        formatter.print_error(f"Invalid options: {e}")
        raise typer.Exit(EXIT_USAGE) from e
    except Exception as e:
        logger.error(f"Command failed: {e}")
        formatter.print_error(f"Error: {e}")
        raise typer.Exit(EXIT_USAGE) from e


def parse_list(value: str | None, cast: Callable[[str], T], default: list[T]) -> list[T]:
    """Split a comma-separated option into typed values.

    Raises:
        typer.BadParameter: If an element cannot be converted.
    """
    if value is None or not value.strip():
        return list(default)
    items = []
    for raw in value.split(","):
        try:
            items.append(cast(raw.strip()))
        except ValueError as e:
            raise typer.BadParameter(f"invalid list element {raw.strip()!r}") from e
    return items


def load_run_config(path: Path | None) -> RunConfig:
    """Load ``--config`` and apply the MRCCC_RIDGE_LAMBDA default when the file does not set it."""
    config = load_config_file(path)
    if "ridge_lambda" not in config.hyperparams.model_fields_set:
        config = config.model_copy(
            update={"hyperparams": config.hyperparams.model_copy(update={"ridge_lambda": settings.ridge_lambda})}
        )
    return config


def build_mcmc(
    preset: Callable[..., McmcSettings],
    config: RunConfig,
    **overrides: Any,
) -> McmcSettings:
    """Start from a mode preset, then apply YAML overrides, then explicit CLI options.

    Raises:
        ConfigurationError: If the combined chain settings are invalid.
    """
    cli = {k: v for k, v in overrides.items() if v is not None}
    try:
        return preset(**{**config.mcmc, **cli})
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        raise ConfigurationError(f"invalid chain settings: {messages}") from e


def print_next_steps(formatter: "BaseOutputFormatter", hints: list[tuple[str, str]]) -> None:
    """Print next-step hints after a command.

    Args:
        formatter: Output formatter instance
        hints: List of (command, description) tuples
    """
    if not hints:
        return

    formatter.print_info("\nNext steps:")
    for cmd, desc in hints:
        formatter.print_info(f"  {cmd:<44} {desc}")
