"""CSV and JSON persistence: datasets, truth sidecars, result tables and manifests."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import IO, TYPE_CHECKING, Any

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import ValidationError

from .config import Manifest
from .errors import ConfigurationError, DataValidationError
from .types import Dataset, MethodResult, StructuralParams

if TYPE_CHECKING:
    from .benchmark import BenchCell

Target = Path | IO[str]

# 17 significant digits round-trips every float64 exactly
FLOAT_FORMAT = "%.17g"
BENCH_FLOAT_FORMAT = "%.6f"
ID_COLUMN = "donor"


def _to_csv(frame: pd.DataFrame, target: Target, float_format: str = FLOAT_FORMAT) -> None:
    if isinstance(target, Path):
        target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, float_format=float_format, lineterminator="\n", na_rep="")
    if isinstance(target, Path):
        logger.success(f"Wrote {len(frame)} rows to {target}")


def _read_raw(path: Path, what: str) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataValidationError(f"{path}: empty table (no header)") from e
    except pd.errors.ParserError as e:
        # pandas reports the offending line, e.g. "Expected 4 fields in line 7, saw 5"
        raise DataValidationError(f"{path}: malformed CSV: {e}") from e
    if frame.empty:
        raise DataValidationError(f"{path}: empty table (header only)")
    return frame


def _numeric(frame: pd.DataFrame, columns: Iterable[str], path: Path) -> pd.DataFrame:
    """Convert ``columns`` to float, reporting the first bad cell by file line number."""
    out = {}
    for col in columns:
        values = pd.to_numeric(frame[col], errors="coerce")
        bad = values.isna().to_numpy()
        if bad.any():
            row = int(np.argmax(bad))
            # header is line 1
            raise DataValidationError(
                f"{path}: non-numeric value {frame[col].iloc[row]!r} in column '{col}' at line {row + 2}"
            )
        # correctly rounded parse, so %.17g output reads back exactly
        out[col] = frame[col].to_numpy(dtype=object).astype(np.float64)
    return pd.DataFrame(out, index=frame.index)


def read_numeric_table(path: Path, id_column: str = ID_COLUMN, what: str = "table") -> pd.DataFrame:
    """Read a CSV keyed by ``id_column`` with all other columns numeric.

    Returns:
        Float frame indexed by the (string) id column.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        DataValidationError: Empty table, ragged rows, non-numeric cells, missing
            or duplicate ids.
    """
    frame = _read_raw(path, what)
    if id_column not in frame.columns:
        raise DataValidationError(f"{path}: missing '{id_column}' column")
    ids = frame[id_column].astype(str)
    duplicated = ids[ids.duplicated()].unique().tolist()
    if duplicated:
        raise DataValidationError(f"{path}: duplicate {id_column} ids: {', '.join(duplicated[:5])}")
    if frame.columns.duplicated().any():
        raise DataValidationError(f"{path}: duplicate column names")
    values = _numeric(frame, [c for c in frame.columns if c != id_column], path)
    values.index = pd.Index(ids, name=id_column)
    logger.debug(f"Read {what} {path}: {values.shape[0]} rows x {values.shape[1]} columns")
    return values


def read_snp_positions(path: Path) -> pd.DataFrame:
    """Read ``snp,chrom,position``; returns a frame indexed by SNP id."""
    frame = _read_raw(path, "SNP positions")
    missing = {"snp", "position"} - set(frame.columns)
    if missing:
        raise DataValidationError(f"{path}: missing columns {sorted(missing)}")
    positions = _numeric(frame, ["position"], path)["position"]
    return pd.DataFrame(
        {
            "chrom": frame["chrom"].astype(str) if "chrom" in frame.columns else None,
            "position": positions.astype(np.int64),
        }
    ).set_index(pd.Index(frame["snp"].astype(str), name="snp"))


# -- datasets ---------------------------------------------------------------------------------


def dataset_frame(d: Dataset, donors: Sequence[str] | None = None) -> pd.DataFrame:
    """Tabular form ``donor,g1..,h1..,v1..,x,z,y``."""
    ids = list(donors) if donors is not None else [f"d{i + 1}" for i in range(d.n)]
    if len(ids) != d.n:
        raise DataValidationError(f"{len(ids)} donor ids for {d.n} rows")
    frame = pd.DataFrame(d.to_matrix(), columns=d.column_names())
    frame.insert(0, ID_COLUMN, ids)
    return frame


def write_dataset(d: Dataset, target: Target, donors: Sequence[str] | None = None) -> None:
    """Write ``d`` as CSV with floats at 17 significant digits."""
    _to_csv(dataset_frame(d, donors), target)


def read_dataset(path: Path) -> Dataset:
    """Load a dataset CSV written by :func:`write_dataset`.

    Raises:
        DataValidationError: If the header lacks ``x``, ``z``, ``y``, any ``g*`` or any ``h*`` column.
    """
    table = read_numeric_table(path, what="dataset")
    columns = list(table.columns)

    def block(prefix: str) -> list[str]:
        return [c for c in columns if c[0] == prefix and c[1:].isdigit()]

    missing = [c for c in ("x", "z", "y") if c not in columns]
    if missing:
        raise DataValidationError(f"{path}: missing columns {missing}")
    g_cols, h_cols, v_cols = block("g"), block("h"), block("v")
    if not g_cols or not h_cols:
        raise DataValidationError(f"{path}: need at least one g* and one h* instrument column")
    return Dataset(
        G=table[g_cols].to_numpy(),
        H=table[h_cols].to_numpy(),
        V=table[v_cols].to_numpy() if v_cols else np.zeros((len(table), 0)),
        x=table["x"].to_numpy(),
        z=table["z"].to_numpy(),
        y=table["y"].to_numpy(),
    )


def truth_frame(params: StructuralParams) -> pd.DataFrame:
    """Long-form ``parameter,value`` rows for a truth sidecar."""
    rows: list[tuple[str, float]] = []
    for name in ("pi_X", "pi_Z", "alpha_X", "alpha_Z", "alpha_Y"):
        rows.extend((f"{name}_{j + 1}", float(v)) for j, v in enumerate(getattr(params, name)))
    for name in (
        "lambda_X",
        "lambda_Z",
        "lambda_Y",
        "beta_X",
        "beta_Z",
        "beta_XZ",
        "sigma2_X",
        "sigma2_Z",
        "sigma2_Y",
        "gamma",
    ):
        rows.append((name, float(getattr(params, name))))
    return pd.DataFrame(rows, columns=["parameter", "value"])


def write_truth(params: StructuralParams, target: Target) -> None:
    _to_csv(truth_frame(params), target)


def read_truth(path: Path) -> StructuralParams:
    """Rebuild StructuralParams from a truth sidecar."""
    table = read_numeric_table(path, id_column="parameter", what="truth sidecar")["value"]

    def vector(name: str) -> np.ndarray:
        keys = [k for k in table.index if k.rsplit("_", 1)[0] == name and k.rsplit("_", 1)[1].isdigit()]
        return table[sorted(keys, key=lambda k: int(k.rsplit("_", 1)[1]))].to_numpy()

    try:
        return StructuralParams(
            **{name: vector(name) for name in ("pi_X", "pi_Z", "alpha_X", "alpha_Z", "alpha_Y")},
            **{
                name: float(table[name])
                for name in ("lambda_X", "lambda_Z", "lambda_Y", "beta_X", "beta_Z", "beta_XZ")
                + ("sigma2_X", "sigma2_Z", "sigma2_Y")
            },
            gamma=int(table["gamma"]),
        )
    except KeyError as e:
        raise DataValidationError(f"{path}: missing parameter {e}") from e


# -- result tables ----------------------------------------------------------------------------

RESULT_COLUMNS = ("method", "score", "decision", "beta_X_hat", "beta_XZ_hat")


def results_frame(results: Sequence[MethodResult]) -> pd.DataFrame:
    """One row per result; extras become trailing columns in sorted order."""
    extras = sorted({key for r in results for key in r.extras})
    rows = [
        {
            "method": r.method.value,
            "score": r.score,
            "decision": int(r.decision),
            "beta_X_hat": r.beta_X_hat,
            "beta_XZ_hat": r.beta_XZ_hat,
            **{key: r.extras.get(key) for key in extras},
        }
        for r in results
    ]
    return pd.DataFrame(rows, columns=[*RESULT_COLUMNS, *extras])


def write_results(results: Sequence[MethodResult], target: Target) -> None:
    _to_csv(results_frame(results), target)


def write_trace(draws: Mapping[str, np.ndarray], target: Target) -> None:
    """Per-draw chain trace; ``iteration`` and ``gamma`` are written as integers."""
    frame = pd.DataFrame(dict(draws))
    for col in ("iteration", "gamma"):
        if col in frame:
            frame[col] = frame[col].astype(np.int64)
    _to_csv(frame, target)


def write_bench_cells(cells: Sequence[BenchCell], target: Target) -> None:
    """Benchmark CSV in the published table column order."""
    from .benchmark import BENCH_COLUMNS

    _to_csv(pd.DataFrame([c.as_row() for c in cells], columns=list(BENCH_COLUMNS)), target, BENCH_FLOAT_FORMAT)


def write_rows(rows: Sequence[Mapping[str, Any]], columns: Sequence[str], target: Target) -> None:
    """Write pre-flattened rows (e.g. screening output) in ``columns`` order."""
    _to_csv(pd.DataFrame(list(rows), columns=list(columns)), target)


# -- manifests --------------------------------------------------------------------------------


def load_manifest(path: Path) -> Manifest:
    """Load and validate a JSON screening manifest.

    Relative table paths are resolved against the manifest's directory.

    Raises:
        FileNotFoundError: If the manifest does not exist.
        ConfigurationError: If it is not valid JSON or fails validation.
    """
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path}")
    try:
        with open(path) as f:
            raw = json.load(f)
        manifest = Manifest.model_validate(raw)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    except ValidationError as e:
        raise ConfigurationError(f"{path}: invalid manifest: {e}") from e

    base = path.parent

    def resolve(p: Path | None) -> Path | None:
        return None if p is None or p.is_absolute() else base / p

    updates: dict[str, Any] = {
        key: resolve(getattr(manifest, key)) or getattr(manifest, key)
        for key in ("sender", "receiver", "genotypes", "snp_positions", "covariates")
    }
    per_triplet = ("sender", "receiver", "genotypes")
    updates["triplets"] = [
        t.model_copy(update={key: resolve(getattr(t, key)) or getattr(t, key) for key in per_triplet})
        for t in manifest.triplets
    ]
    logger.debug(f"Loaded manifest {path} with {len(manifest.triplets)} triplets")
    return manifest.model_copy(update=updates)
