"""Simulate command: write replicate datasets and truth sidecars."""

import sys
from pathlib import Path
from typing import Annotated

import typer

from ... import __version__
from ...core.config import SimConfig
from ...core.simulator import dataset_digest, generate_dataset
from ...core.storage import write_dataset, write_truth
from ...core.types import Scenario
from ...settings import settings
from ..formatters import get_formatter
from ..output import get_output_mode, is_json_mode
from ..schemas import SimulatedFile, SimulateOutput
from ..utils import cli_error_handler, print_next_steps


def replicate_paths(out: Path, replicate_index: int, replicates: int) -> tuple[Path, Path]:
    """Dataset and truth-sidecar paths; multiple replicates get an ``_r<index>`` suffix."""
    stem = out.stem if replicates == 1 else f"{out.stem}_r{replicate_index:03d}"
    suffix = out.suffix or ".csv"
    return out.with_name(f"{stem}{suffix}"), out.with_name(f"{stem}.truth{suffix}")


def simulate(
    scenario: Annotated[Scenario, typer.Option("--scenario", "-s", help="Scenario (S1, S2, S3)")],
    n: Annotated[int, typer.Option("--n", "-n", help="Donors per replicate")],
    replicates: Annotated[int, typer.Option("--replicates", "-r", min=1, help="Number of replicates")] = 1,
    seed: Annotated[int | None, typer.Option("--seed", help="Master seed (default: MRCCC_MASTER_SEED)")] = None,
    out: Annotated[Path | None, typer.Option("--out", "-o", help="Output CSV (default: stdout)")] = None,
    mode: Annotated[str, typer.Option("--mode", help="adhoc, or benchmark to restrict n to published sizes")] = "adhoc",
) -> None:
    """Simulate datasets from the structural model.

    Each replicate is written as ``donor,g1..,h1..,v1..,x,z,y`` with a
    ``.truth.csv`` sidecar holding the generating parameters.

    Examples:
        mrccc simulate --scenario S2 --n 500 --out data.csv

        mrccc simulate -s S1 -n 1000 -r 20 --seed 7 -o sims/s1.csv
    """
    formatter = get_formatter(get_output_mode())
    master_seed = settings.master_seed if seed is None else seed

    with cli_error_handler(formatter):
        if out is None and replicates > 1:
            raise typer.BadParameter("--out is required with more than one replicate", param_hint="--out")

        files: list[SimulatedFile] = []
        for r in range(replicates):
            cfg = SimConfig(scenario=scenario, n=n, replicate_index=r, master_seed=master_seed, mode=mode)  # type: ignore[arg-type]
            sim = generate_dataset(cfg)
            digest = dataset_digest(sim.dataset)
            if out is None:
                write_dataset(sim.dataset, sys.stdout)
                files.append(SimulatedFile(replicate_index=r, digest=digest))
                return
            data_path, truth_path = replicate_paths(out, r, replicates)
            write_dataset(sim.dataset, data_path)
            write_truth(sim.params, truth_path)
            files.append(
                SimulatedFile(
                    replicate_index=r, path=str(data_path), truth_path=str(truth_path), digest=digest
                )
            )
            formatter.print_progress(f"Replicate {r}: [blue]{data_path}[/blue]")

        formatter.print_result(
            SimulateOutput(
                command="simulate",
                success=True,
                version=__version__,
                scenario=scenario.value,
                n=n,
                master_seed=master_seed,
                mode=mode,
                files=files,
            )
        )
        if not is_json_mode() and files:
            print_next_steps(
                formatter,
                [
                    (f"mrccc fit --data {files[0].path} --method mrccc", "Fit MR-CCC on the first replicate"),
                    (f"mrccc fit --data {files[0].path} --method ols", "Compare with the naive regression"),
                ],
            )
