"""Output schemas for CLI command summaries."""

import math
from datetime import datetime, timezone

UTC = timezone.utc

from pydantic import BaseModel, ConfigDict, Field, field_serializer

from ..core.benchmark import BenchCell
from ..core.pipeline import ExcludedTriplet, ScreenResult
from ..core.types import MethodResult


class CommandOutput(BaseModel):
    """Base output schema for all commands."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "command": "fit",
                "success": True,
                "timestamp": "2024-01-15T10:30:00Z",
                "version": "0.1.0",
                "errors": [],
            }
        }
    )

    command: str = Field(..., description="Command name (simulate, fit, screen, benchmark)")
    success: bool = Field(..., description="Overall success status")
    timestamp: str = Field(default_factory=lambda: datetime.now(UTC).isoformat(), description="ISO 8601 timestamp")
    version: str = Field(..., description="CLI version")
    errors: list[str] = Field(default_factory=list, description="List of error messages")


# Simulate command schemas


class SimulatedFile(BaseModel):
    """One written replicate."""

    replicate_index: int
    path: str | None = Field(None, description="Dataset CSV (None when streamed to stdout)")
    truth_path: str | None = Field(None, description="Truth sidecar CSV")
    digest: str = Field(..., description="SHA-256 of the dataset contents")


class SimulateOutput(CommandOutput):
    scenario: str
    n: int
    master_seed: int
    mode: str
    files: list[SimulatedFile] = Field(default_factory=list)


# Fit command schemas


class MethodResultOutput(BaseModel):
    """Estimator output on the common contract."""

    method: str
    score: float
    decision: bool
    beta_X_hat: float
    beta_XZ_hat: float | None = None
    extras: dict[str, float] = Field(default_factory=dict)

    @field_serializer("extras")
    def finite_extras(self, extras: dict[str, float]) -> dict[str, float | None]:
        # inf/nan are not valid JSON
        return {k: (v if math.isfinite(v) else None) for k, v in extras.items()}

    @classmethod
    def from_result(cls, r: MethodResult) -> "MethodResultOutput":
        return cls(
            method=r.method.value,
            score=r.score,
            decision=r.decision,
            beta_X_hat=r.beta_X_hat,
            beta_XZ_hat=r.beta_XZ_hat,
            extras=dict(r.extras),
        )


class FitOutput(CommandOutput):
    data_path: str
    n: int
    results: list[MethodResultOutput] = Field(default_factory=list)
    output_path: str | None = None
    trace_path: str | None = None


# Benchmark command schemas


class BenchCellOutput(BaseModel):
    scenario: str
    n: int
    method: str
    score_mean: float | None
    score_sd: float | None
    rejection_rate: float | None
    bias_bx: float | None
    mad_bx: float | None
    bias_bxz: float | None = None
    mad_bxz: float | None = None
    replicates: int
    failures: int

    @classmethod
    def from_cell(cls, cell: BenchCell) -> "BenchCellOutput":
        row = cell.as_row()
        return cls(
            **{
                k: (None if isinstance(v, float) and math.isnan(v) else v)
                for k, v in row.items()
            }
        )


class BenchmarkOutput(CommandOutput):
    master_seed: int
    replicates: int
    cells: list[BenchCellOutput] = Field(default_factory=list)
    output_path: str | None = None


# Screen command schemas


class TripletOutput(BaseModel):
    triplet_id: str
    status: str
    pip: float | None = None
    beta_X: float | None = None
    beta_XZ: float | None = None
    sign_reversal_z: float | None = None
    reason: str | None = None

    @classmethod
    def from_result(cls, r: ScreenResult | ExcludedTriplet) -> "TripletOutput":
        row = r.as_row()
        return cls(
            triplet_id=r.triplet_id,
            status=str(row["status"]),
            pip=row["pip"],  # type: ignore[arg-type]
            beta_X=row["beta_X"],  # type: ignore[arg-type]
            beta_XZ=row["beta_XZ"],  # type: ignore[arg-type]
            sign_reversal_z=row["sign_reversal_z"],  # type: ignore[arg-type]
            reason=str(row["reason"]) or None,
        )


class ScreenOutput(CommandOutput):
    manifest_path: str
    triplets: list[TripletOutput] = Field(default_factory=list)
    n_screened: int = 0
    n_excluded: int = 0
    n_failed: int = 0
    output_path: str | None = None
