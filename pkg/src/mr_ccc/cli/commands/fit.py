"""Fit command: run one estimator on a dataset CSV."""

import sys
from pathlib import Path
from typing import Annotated

import typer
from loguru import logger

from ... import __version__
from ...core.baselines import fit_method, posterior_to_result
from ...core.config import McmcSettings
from ...core.gibbs import run_chain
from ...core.model import center_dataset
from ...core.storage import read_dataset, write_results, write_trace
from ...core.types import Method
from ..formatters import get_formatter
from ..output import get_output_mode, is_json_mode
from ..schemas import FitOutput, MethodResultOutput
from ..utils import build_mcmc, cli_error_handler, load_run_config, print_next_steps


def fit(
    data: Annotated[Path, typer.Option("--data", "-d", help="Dataset CSV (donor,g*,h*,v*,x,z,y)")],
    method: Annotated[Method, typer.Option("--method", "-m", help="Estimator")] = Method.MRCCC,
    iterations: Annotated[int | None, typer.Option("--iterations", help="Gibbs iterations (default 20000)")] = None,
    burn_in: Annotated[int | None, typer.Option("--burn-in", help="Burn-in iterations (default 2000)")] = None,
    thin: Annotated[int | None, typer.Option("--thin", help="Keep every thin-th draw (default 5)")] = None,
    seed: Annotated[int | None, typer.Option("--seed", help="Chain seed")] = None,
    out: Annotated[Path | None, typer.Option("--out", "-o", help="Result CSV (default: stdout)")] = None,
    trace: Annotated[Path | None, typer.Option("--trace", help="Write per-draw chain trace CSV (mrccc only)")] = None,
    config: Annotated[Path | None, typer.Option("--config", "-c", help="YAML run configuration")] = None,
) -> None:
    """Fit OLS, MVMR, MR-BMA or MR-CCC to a dataset and write a MethodResult row.

    Examples:
        mrccc fit --data data.csv --method mrccc --out result.csv

        mrccc fit -d data.csv -m ols

        mrccc fit -d data.csv --iterations 5000 --burn-in 500 --trace trace.csv
    """
    formatter = get_formatter(get_output_mode())

    with cli_error_handler(formatter):
        run_config = load_run_config(config)
        mcmc = build_mcmc(
            McmcSettings.benchmark, run_config, iterations=iterations, burn_in=burn_in, thin=thin, seed=seed
        )
        dataset = read_dataset(data)
        logger.info(f"Fitting {method.value} on {data} (n={dataset.n})")

        if trace is not None and method is not Method.MRCCC:
            raise typer.BadParameter("--trace is only available for --method mrccc", param_hint="--trace")

        if trace is not None:
            centered, _ = center_dataset(dataset)
            summary = run_chain(centered, run_config.hyperparams, mcmc, keep_draws=True)
            result = posterior_to_result(summary)
            write_trace(summary.draws or {}, trace)
        else:
            result = fit_method(method, dataset, run_config.hyperparams, mcmc, run_config.mrbma)

        write_results([result], out if out is not None else sys.stdout)
        if out is None:
            return

        formatter.print_result(
            FitOutput(
                command="fit",
                success=True,
                version=__version__,
                data_path=str(data),
                n=dataset.n,
                results=[MethodResultOutput.from_result(result)],
                output_path=str(out),
                trace_path=str(trace) if trace else None,
            )
        )
        if not is_json_mode():
            others = [m for m in Method if m is not method]
            print_next_steps(
                formatter,
                [(f"mrccc fit --data {data} --method {m.value}", "Compare another estimator") for m in others[:2]],
            )
