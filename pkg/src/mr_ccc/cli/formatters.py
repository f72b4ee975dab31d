"""Output formatters for CLI commands."""

import json
import sys
from abc import ABC, abstractmethod

from rich.console import Console
from rich.table import Table

from .output import OutputMode
from .schemas import BenchmarkOutput, CommandOutput, FitOutput, ScreenOutput, SimulateOutput


def _fmt(value: float | None, digits: int = 3) -> str:
    return "---" if value is None else f"{value:.{digits}f}"


class BaseOutputFormatter(ABC):
    """Abstract base class for output formatters."""

    @abstractmethod
    def print_progress(self, message: str) -> None:
        """Print a progress message."""

    @abstractmethod
    def print_success(self, message: str) -> None:
        """Print a success message."""

    @abstractmethod
    def print_error(self, message: str) -> None:
        """Print an error message."""

    @abstractmethod
    def print_warning(self, message: str) -> None:
        """Print a warning message."""

    @abstractmethod
    def print_info(self, message: str) -> None:
        """Print an informational message."""

    @abstractmethod
    def print_result(self, result: CommandOutput) -> None:
        """Print the final command summary."""


class HumanOutputFormatter(BaseOutputFormatter):
    """Rich console output on stderr, leaving stdout free for CSV."""

    def __init__(self) -> None:
        self.console = Console(stderr=True)

    def print_progress(self, message: str) -> None:
        self.console.print(message)

    def print_success(self, message: str) -> None:
        self.console.print(f"[green]{message}[/green]")

    def print_error(self, message: str) -> None:
        self.console.print(f"[red]{message}[/red]")

    def print_warning(self, message: str) -> None:
        self.console.print(f"[yellow]{message}[/yellow]")

    def print_info(self, message: str) -> None:
        self.console.print(f"[dim]{message}[/dim]")

    def print_result(self, result: CommandOutput) -> None:
        if isinstance(result, SimulateOutput):
            self._print_simulate_result(result)
        elif isinstance(result, FitOutput):
            self._print_fit_result(result)
        elif isinstance(result, BenchmarkOutput):
            self._print_benchmark_result(result)
        elif isinstance(result, ScreenOutput):
            self._print_screen_result(result)
        else:
            self.console.print(f"[dim]{result.model_dump_json(indent=2)}[/dim]")

    def _print_simulate_result(self, result: SimulateOutput) -> None:
        self.console.print(
            f"\n[green]✓ Simulated {len(result.files)} replicate(s) of {result.scenario} with n={result.n}[/green]"
        )
        for f in result.files:
            self.console.print(f"  [blue]{f.path}[/blue]  [dim]{f.digest[:12]}[/dim]")

    def _print_fit_result(self, result: FitOutput) -> None:
        table = Table(title=f"Fit on {result.data_path} (n={result.n})", show_header=True, header_style="bold cyan")
        table.add_column("Method", style="green")
        table.add_column("Score", justify="right")
        table.add_column("Communication", justify="center")
        table.add_column("beta_X", justify="right")
        table.add_column("beta_XZ", justify="right")
        for r in result.results:
            table.add_row(
                r.method,
                _fmt(r.score),
                "[bold green]yes[/bold green]" if r.decision else "no",
                _fmt(r.beta_X_hat),
                _fmt(r.beta_XZ_hat),
            )
        self.console.print(table)
        if result.output_path:
            self.console.print(f"\n[dim]Results: {result.output_path}[/dim]")
        if result.trace_path:
            self.console.print(f"[dim]Trace: {result.trace_path}[/dim]")

    def _print_benchmark_result(self, result: BenchmarkOutput) -> None:
        table = Table(
            title=f"Benchmark ({result.replicates} replicates, seed {result.master_seed})",
            show_header=True,
            header_style="bold cyan",
        )
        for col in ("Scenario", "n", "Method", "Score", "Rejection", "Bias bX", "MAD bX", "Bias bXZ", "Fail"):
            table.add_column(col, justify="left" if col in ("Scenario", "Method") else "right")
        for c in result.cells:
            score = "---" if c.score_mean is None else f"{c.score_mean:.3f} ({_fmt(c.score_sd)})"
            table.add_row(
                c.scenario,
                str(c.n),
                c.method,
                score,
                _fmt(c.rejection_rate),
                _fmt(c.bias_bx),
                _fmt(c.mad_bx),
                _fmt(c.bias_bxz),
                str(c.failures) if c.failures else "",
            )
        self.console.print(table)
        if result.output_path:
            self.console.print(f"\n[dim]Output: {result.output_path}[/dim]")

    def _print_screen_result(self, result: ScreenOutput) -> None:
        table = Table(title="Triplet screen", show_header=True, header_style="bold cyan")
        table.add_column("Triplet", style="green")
        table.add_column("Status")
        table.add_column("PIP", justify="right")
        table.add_column("beta_X", justify="right")
        table.add_column("beta_XZ", justify="right")
        table.add_column("Z*", justify="right")
        for t in result.triplets:
            status = t.status if t.status == "ok" else f"[yellow]{t.status}[/yellow]"
            table.add_row(
                t.triplet_id, status, _fmt(t.pip), _fmt(t.beta_X), _fmt(t.beta_XZ), _fmt(t.sign_reversal_z, 2)
            )
        self.console.print(table)
        self.console.print(
            f"\n[dim]Screened {result.n_screened}, excluded {result.n_excluded}, failed {result.n_failed}[/dim]"
        )
        for t in result.triplets:
            if t.reason:
                self.console.print(f"  [yellow]{t.triplet_id}: {t.reason}[/yellow]")


class JSONOutputFormatter(BaseOutputFormatter):
    """Machine-readable output: the summary as JSON on stdout, problems on stderr."""

    def print_progress(self, message: str) -> None:
        pass

    def print_success(self, message: str) -> None:
        pass

    def print_error(self, message: str) -> None:
        print(f"ERROR: {message}", file=sys.stderr)

    def print_warning(self, message: str) -> None:
        print(f"WARNING: {message}", file=sys.stderr)

    def print_info(self, message: str) -> None:
        pass

    def print_result(self, result: CommandOutput) -> None:
        print(json.dumps(result.model_dump(mode="json", exclude_none=False), indent=2))


def get_formatter(mode: OutputMode) -> BaseOutputFormatter:
    """Get the formatter for ``mode``."""
    if mode == OutputMode.JSON:
        return JSONOutputFormatter()
    return HumanOutputFormatter()
