"""Utility commands for MR-CCC."""

from rich.console import Console

from ... import __version__

console = Console()


def version() -> None:
    """Show version information."""
    console.print(f"[bold blue]mr-ccc[/bold blue] version [green]{__version__}[/green]")
