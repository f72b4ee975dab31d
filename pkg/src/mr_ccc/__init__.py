"""MR-CCC - Mendelian randomization for cell-cell communication.

This package provides:
- A Bayesian instrumental-variable model with a receptor-modulated interaction,
  fitted by a spike-and-slab Gibbs sampler (``run_chain`` / ``fit_mrccc``)
- Baseline estimators: naive OLS, two-stage MVMR and summary-statistic MR-BMA
- A simulator and benchmark grid for the three communication scenarios
- Triplet screening over donor-level CSV tables
- CLI tool (mrccc)

Basic usage::

    from mr_ccc import SimConfig, generate_dataset, fit_mrccc

    dataset, truth = generate_dataset(SimConfig(scenario="S2", n=500))
    result = fit_mrccc(dataset)
    print(result.score, result.beta_X_hat, result.beta_XZ_hat)

CLI usage::

    mrccc simulate --scenario S2 --n 500 --out data.csv
    mrccc fit --data data.csv --method mrccc
    mrccc benchmark --n-list 500 --seed 7 --out bench.csv
    mrccc screen --manifest manifest.json --out screen.csv
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Dataset,
    Hyperparams,
    McmcSettings,
    Method,
    MethodResult,
    Scenario,
    SimConfig,
    StructuralParams,
    fit_method,
    fit_mrbma,
    fit_mrccc,
    fit_mvmr,
    fit_ols,
    generate_dataset,
    run_chain,
)

__all__ = [
    "Dataset",
    "Hyperparams",
    "McmcSettings",
    "Method",
    "MethodResult",
    "Scenario",
    "SimConfig",
    "StructuralParams",
    "__version__",
    "fit_method",
    "fit_mrbma",
    "fit_mrccc",
    "fit_mvmr",
    "fit_ols",
    "generate_dataset",
    "run_chain",
]

LOG_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan> - <level>{message}</level>"
)


def configure_logging(level: str, log_format: str = "pretty") -> None:
    """Replace loguru sinks with a single stderr sink."""
    import sys

    from loguru import logger

    logger.remove()
    if log_format == "json":
        logger.add(sys.stderr, format="{message}", serialize=True, level=level)
    else:
        logger.add(sys.stderr, format=LOG_FORMAT, level=level, colorize=True)


def main() -> None:
    """CLI entry point."""
    import sys

    from loguru import logger
    from rich.console import Console

    from .cli.app import cli_dispatch
    from .settings import settings

    configure_logging(settings.log_level, settings.log_format)

    try:
        code = cli_dispatch(sys.argv[1:])
    except KeyboardInterrupt:
        Console(stderr=True).print("\n[yellow]Operation cancelled by user[/yellow]")
        sys.exit(130)
    except Exception as e:
        logger.exception("Unexpected error occurred")
        Console(stderr=True).print(f"[red]Error: {e}[/red]")
        sys.exit(1)
    sys.exit(code)
