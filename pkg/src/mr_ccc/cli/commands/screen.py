"""Screen command: fit MR-CCC to every triplet of a manifest."""

import sys
from pathlib import Path
from typing import Annotated

import typer

from ... import __version__
from ...core.config import McmcSettings, ScreenSettings
from ...core.pipeline import SCREEN_COLUMNS, ExcludedTriplet, screen_manifest
from ...core.storage import load_manifest, write_rows
from ...settings import settings
from ..formatters import get_formatter
from ..output import get_output_mode, is_json_mode
from ..schemas import ScreenOutput, TripletOutput
from ..utils import build_mcmc, cli_error_handler, load_run_config, print_next_steps


def screen(
    manifest: Annotated[Path, typer.Option("--manifest", "-m", help="JSON screening manifest")],
    out: Annotated[Path | None, typer.Option("--out", "-o", help="Output CSV (default: stdout)")] = None,
    jobs: Annotated[
        int | None, typer.Option("--jobs", "-j", min=1, help="Worker processes (default: MRCCC_JOBS)")
    ] = None,
    iterations: Annotated[int | None, typer.Option("--iterations", help="Gibbs iterations (default 20000)")] = None,
    burn_in: Annotated[int | None, typer.Option("--burn-in", help="Burn-in iterations (default 2000)")] = None,
    thin: Annotated[int | None, typer.Option("--thin", help="Thinning (default 10)")] = None,
    config: Annotated[Path | None, typer.Option("--config", "-c", help="YAML run configuration")] = None,
) -> None:
    """Screen ligand-receptor-pathway triplets from donor-level CSV tables.

    Output rows are sorted by triplet id; excluded and failed triplets are
    kept with their reason.

    Examples:
        mrccc screen --manifest manifest.json --out screen.csv

        mrccc screen -m manifest.json -j 8 --iterations 5000 --burn-in 500
    """
    formatter = get_formatter(get_output_mode())

    with cli_error_handler(formatter):
        run_config = load_run_config(config)
        loaded = load_manifest(manifest)
        screen_settings = ScreenSettings.model_validate(
            {
                **run_config.screen,
                "hyperparams": run_config.hyperparams,
                "mcmc": build_mcmc(
                    McmcSettings.screening,
                    run_config,
                    iterations=iterations,
                    burn_in=burn_in,
                    thin=thin,
                ),
            }
        )
        results = screen_manifest(loaded, screen_settings, jobs=jobs or settings.jobs)
        write_rows([r.as_row() for r in results], SCREEN_COLUMNS, out if out is not None else sys.stdout)
        if out is None:
            return

        excluded = [r for r in results if isinstance(r, ExcludedTriplet)]
        formatter.print_result(
            ScreenOutput(
                command="screen",
                success=True,
                version=__version__,
                manifest_path=str(manifest),
                triplets=[TripletOutput.from_result(r) for r in results],
                n_screened=len(results) - len(excluded),
                n_excluded=sum(r.status == "excluded" for r in excluded),
                n_failed=sum(r.status == "failed" for r in excluded),
                output_path=str(out),
            )
        )
        if not is_json_mode():
            print_next_steps(formatter, [(f"mrccc screen -m {manifest} -j 8", "Re-run with more workers")])
