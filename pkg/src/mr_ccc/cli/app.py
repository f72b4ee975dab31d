"""CLI application for MR-CCC.

This module assembles the CLI application by importing commands from the
commands subpackage and registering them with the main Typer app.
"""

import sys
from collections.abc import Sequence
from typing import Annotated

import click
import typer
from rich.console import Console
from rich.panel import Panel

from .. import __version__, configure_logging
from ..settings import settings
from .commands.benchmark import benchmark
from .commands.fit import fit
from .commands.screen import screen
from .commands.simulate import simulate
from .commands.utility import version
from .output import OutputMode, set_output_mode
from .utils import EXIT_USAGE

try:  # newer typer vendors click; its exceptions are not click's classes
    from typer._click import exceptions as click_exceptions
except ImportError:
    from click import exceptions as click_exceptions

console = Console(stderr=True)


def _show_status() -> None:
    """Display defaults and next steps when mrccc is run without a command."""
    status_lines = [
        f"[bold blue]mr-ccc[/bold blue] v{__version__}",
        "",
        f"[bold]Workers:[/bold]      {settings.jobs} [dim](MRCCC_JOBS)[/dim]",
        f"[bold]Master seed:[/bold]  {settings.master_seed} [dim](MRCCC_MASTER_SEED)[/dim]",
        f"[bold]Ridge:[/bold]        {settings.ridge_lambda:g} [dim](MRCCC_RIDGE_LAMBDA)[/dim]",
    ]

    next_steps = [
        "",
        "[bold]Next steps:[/bold]",
        "  [cyan]mrccc simulate -s S2 -n 500 -o d.csv[/cyan]   Simulate a dataset",
        "  [cyan]mrccc fit -d d.csv -m mrccc[/cyan]            Fit MR-CCC",
        "  [cyan]mrccc benchmark --n-list 500[/cyan]           Compare estimators",
        "  [cyan]mrccc screen -m manifest.json[/cyan]          Screen triplets",
        "  [cyan]mrccc --help[/cyan]                           Show all commands",
    ]

    console.print(Panel("\n".join(status_lines + next_steps), border_style="blue"))


app = typer.Typer(
    name="mrccc",
    help="MR-CCC - Mendelian randomization for receptor-modulated cell-cell communication",
    add_completion=False,
    rich_markup_mode="rich",
    invoke_without_command=True,
)


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        console.print(f"[bold blue]mr-ccc[/bold blue] version [green]{__version__}[/green]")
        raise typer.Exit()


@app.callback()
def main_callback(
    ctx: typer.Context,
    verbose: Annotated[
        int,
        typer.Option(
            "-v",
            "--verbose",
            count=True,
            help="Increase verbosity. Use -v for INFO, -vv for DEBUG, -vvv for TRACE.",
        ),
    ] = 0,
    log_level: Annotated[
        str | None,
        typer.Option("--log-level", help="Set log level (TRACE, DEBUG, INFO, WARNING, ERROR)"),
    ] = None,
    json_output: Annotated[
        bool,
        typer.Option("--json", help="Print command summaries as JSON"),
    ] = False,
    version: Annotated[
        bool,
        typer.Option("--version", callback=version_callback, is_eager=True, help="Show version and exit"),
    ] = False,
) -> None:
    """MR-CCC - Mendelian randomization for receptor-modulated cell-cell communication."""
    set_output_mode(OutputMode.JSON if json_output else OutputMode.HUMAN)

    # -v=INFO, -vv=DEBUG, -vvv=TRACE
    if log_level:
        level = log_level.upper()
    elif verbose >= 3:
        level = "TRACE"
    elif verbose == 2:
        level = "DEBUG"
    elif verbose == 1:
        level = "INFO"
    else:
        level = settings.log_level

    if level != settings.log_level:
        configure_logging(level, settings.log_format)

    if ctx.invoked_subcommand is None:
        _show_status()


app.command()(simulate)
app.command()(fit)
app.command()(screen)
app.command()(benchmark)
app.command()(version)


def cli_dispatch(argv: Sequence[str]) -> int:
    """Run the CLI on ``argv`` and return its exit code.

    0 on success, 1 on usage errors (help text is printed), 2 on data errors.
    """
    command = typer.main.get_command(app)
    try:
        result = command.main(args=list(argv), prog_name="mrccc", standalone_mode=False)
    except click_exceptions.UsageError as e:
        if e.ctx is not None:
            click.echo(e.ctx.get_help(), err=True)
        click.echo(f"\nError: {e.format_message()}", err=True)
        return EXIT_USAGE
    except click_exceptions.Exit as e:
        return int(e.exit_code)
    except click_exceptions.Abort:
        click.echo("Aborted.", err=True)
        return EXIT_USAGE
    except click_exceptions.ClickException as e:
        e.show(file=sys.stderr)
        return EXIT_USAGE
    return int(result) if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(cli_dispatch(sys.argv[1:]))
