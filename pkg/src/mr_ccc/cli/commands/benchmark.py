"""Benchmark command: scenario x sample size x method grid."""

import sys
from pathlib import Path
from typing import Annotated

import typer

from ... import __version__
from ...core.benchmark import BenchSettings, run_grid
from ...core.config import BENCHMARK_SAMPLE_SIZES, McmcSettings
from ...core.storage import write_bench_cells
from ...core.types import Method, Scenario
from ...settings import settings
from ..formatters import get_formatter
from ..output import get_output_mode
from ..schemas import BenchCellOutput, BenchmarkOutput
from ..utils import build_mcmc, cli_error_handler, load_run_config, parse_list


def benchmark(
    seed: Annotated[int | None, typer.Option("--seed", help="Master seed (default: MRCCC_MASTER_SEED)")] = None,
    n_list: Annotated[
        str | None, typer.Option("--n-list", help="Comma-separated sample sizes (default 500,1000,10000,30000)")
    ] = None,
    scenarios: Annotated[str | None, typer.Option("--scenarios", help="Comma-separated scenarios")] = None,
    methods: Annotated[str | None, typer.Option("--methods", help="Comma-separated methods")] = None,
    replicates: Annotated[int, typer.Option("--replicates", "-r", min=1, help="Replicates per setting")] = 20,
    out: Annotated[Path | None, typer.Option("--out", "-o", help="Output CSV (default: stdout)")] = None,
    jobs: Annotated[
        int | None, typer.Option("--jobs", "-j", min=1, help="Worker processes (default: MRCCC_JOBS)")
    ] = None,
    iterations: Annotated[int | None, typer.Option("--iterations", help="MR-CCC iterations")] = None,
    burn_in: Annotated[int | None, typer.Option("--burn-in", help="MR-CCC burn-in")] = None,
    thin: Annotated[int | None, typer.Option("--thin", help="MR-CCC thinning")] = None,
    mode: Annotated[str, typer.Option("--mode", help="benchmark (published sizes only) or adhoc")] = "benchmark",
    config: Annotated[Path | None, typer.Option("--config", "-c", help="YAML run configuration")] = None,
) -> None:
    """Compare OLS, MVMR, MR-BMA and MR-CCC on simulated replicates.

    Every (scenario, n, replicate) dataset is shared by all methods. Output
    is one CSV row per (scenario, n, method).

    Examples:
        mrccc benchmark --n-list 500 --seed 7 --out bench.csv

        mrccc benchmark --n-list 500,1000 --methods ols,mrccc --jobs 8
    """
    formatter = get_formatter(get_output_mode())
    master_seed = settings.master_seed if seed is None else seed

    with cli_error_handler(formatter):
        ns = parse_list(n_list, int, list(BENCHMARK_SAMPLE_SIZES))
        scenario_list = parse_list(scenarios, Scenario, list(Scenario))
        method_list = parse_list(methods, lambda s: Method(s.lower()), list(Method))
        run_config = load_run_config(config)
        bench = BenchSettings(
            master_seed=master_seed,
            mode=mode,
            hyper=run_config.hyperparams,
            mcmc=build_mcmc(McmcSettings.benchmark, run_config, iterations=iterations, burn_in=burn_in, thin=thin),
            mrbma=run_config.mrbma,
        )
        cells = run_grid(
            scenario_list,
            ns,
            method_list,
            replicates=replicates,
            master_seed=master_seed,
            jobs=jobs or settings.jobs,
            settings=bench,
        )
        write_bench_cells(cells, out if out is not None else sys.stdout)
        if out is None:
            return

        formatter.print_result(
            BenchmarkOutput(
                command="benchmark",
                success=True,
                version=__version__,
                master_seed=master_seed,
                replicates=replicates,
                cells=[BenchCellOutput.from_cell(c) for c in cells],
                output_path=str(out),
                errors=[
                    f"{c.scenario.value if c.scenario else ''} n={c.n} {c.method.value}: {c.failures} failed fits"
                    for c in cells
                    if c.failures
                ],
            )
        )
