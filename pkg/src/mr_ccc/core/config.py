"""Configuration models for MR-CCC."""

from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError
from .types import Scenario

BENCHMARK_SAMPLE_SIZES = (500, 1000, 10_000, 30_000)
MAX_SEED = 2**64 - 1


class Hyperparams(BaseModel):
    """Prior constants and ridge regularization for the MR-CCC sampler.

    The g-prior scales default to ``min(n, 100)``; leave them unset and call
    :meth:`resolved` once the sample size is known.
    """

    model_config = ConfigDict(frozen=True)

    g_G: float | None = Field(default=None, gt=0)
    g_H: float | None = Field(default=None, gt=0)
    g_V: float | None = Field(default=None, gt=0)
    g_Z: float | None = Field(default=None, gt=0)
    g_beta: float | None = Field(default=None, gt=0)
    a_sigma: float = Field(default=3.0, gt=0)
    b_sigma: float = Field(default=2.0, gt=0)
    a_rho: float = Field(default=3.0, gt=0)
    b_rho: float = Field(default=1.0, gt=0)
    nu_1: float = Field(default=1e-4, gt=0, le=0.01, description="Spike scale; must be << 1")
    ridge_lambda: float = Field(default=1e-6, gt=0, description="Ridge added to every inverted Gram matrix")

    def resolved(self, n: int) -> "Hyperparams":
        """Return a copy with every unset g-prior scale set to ``min(n, 100)``."""
        default_g = float(min(n, 100))
        updates = {
            name: default_g for name in ("g_G", "g_H", "g_V", "g_Z", "g_beta") if getattr(self, name) is None
        }
        return self.model_copy(update=updates)

    def g(self, name: str) -> float:
        """Return a resolved g-prior scale.

        Raises:
            ConfigurationError: If :meth:`resolved` has not been applied.
        """
        value = getattr(self, f"g_{name}")
        if value is None:
            raise ConfigurationError(f"g_{name} unresolved; call Hyperparams.resolved(n) first")
        return float(value)


class McmcSettings(BaseModel):
    """Chain length, burn-in, thinning and seed for one Gibbs run."""

    model_config = ConfigDict(frozen=True)

    iterations: int = Field(default=20_000, ge=1)
    burn_in: int = Field(default=2_000, ge=0)
    thin: int = Field(default=5, ge=1)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)

    @model_validator(mode="after")
    def check_burn_in(self) -> "McmcSettings":
        """Require at least one kept draw after burn-in and thinning."""
        if self.burn_in >= self.iterations:
            raise ValueError(f"burn_in ({self.burn_in}) must be smaller than iterations ({self.iterations})")
        if self.n_kept < 1:
            raise ValueError(
                f"iterations={self.iterations}, burn_in={self.burn_in}, thin={self.thin} keeps no draws; "
                f"need iterations - burn_in >= thin"
            )
        return self

    @property
    def n_kept(self) -> int:
        """Number of draws retained after burn-in and thinning."""
        return (self.iterations - self.burn_in) // self.thin

    @classmethod
    def benchmark(cls, seed: int = 0, **overrides: Any) -> "McmcSettings":
        """Simulation-study defaults: 20,000 iterations, 2,000 burn-in, thin 5."""
        return cls(**{"iterations": 20_000, "burn_in": 2_000, "thin": 5, "seed": seed, **overrides})

    @classmethod
    def screening(cls, seed: int = 0, **overrides: Any) -> "McmcSettings":
        """Real-data screening defaults: 20,000 iterations, 2,000 burn-in, thin 10."""
        return cls(**{"iterations": 20_000, "burn_in": 2_000, "thin": 10, "seed": seed, **overrides})


class ScenarioSpec(BaseModel):
    """Communication parameters of one simulation scenario."""

    model_config = ConfigDict(frozen=True)

    id: Scenario
    beta_X: float
    beta_XZ: float
    gamma: Literal[0, 1]

    @model_validator(mode="after")
    def check_table(self) -> "ScenarioSpec":
        """Only the three published scenario settings are valid."""
        expected = SCENARIO_TABLE[self.id]
        if (self.beta_X, self.beta_XZ, self.gamma) != expected:
            raise ValueError(f"{self.id.value} requires (beta_X, beta_XZ, gamma) = {expected}")
        return self

    @classmethod
    def of(cls, scenario: Scenario | str) -> "ScenarioSpec":
        """Build the spec for a scenario id."""
        sid = Scenario(scenario)
        beta_X, beta_XZ, gamma = SCENARIO_TABLE[sid]
        return cls(id=sid, beta_X=beta_X, beta_XZ=beta_XZ, gamma=gamma)


SCENARIO_TABLE: dict[Scenario, tuple[float, float, int]] = {
    Scenario.S1: (0.0, 0.0, 0),
    Scenario.S2: (0.3, 0.3, 1),
    Scenario.S3: (0.3, 0.0, 1),
}


class SimConfig(BaseModel):
    """Identifies one simulated replicate."""

    model_config = ConfigDict(frozen=True)

    scenario: ScenarioSpec
    n: int = Field(ge=10)
    replicate_index: int = Field(default=0, ge=0)
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    mode: Literal["benchmark", "adhoc"] = "adhoc"

    @field_validator("scenario", mode="before")
    @classmethod
    def coerce_scenario(cls, v: Any) -> Any:
        """Accept a bare scenario id in place of a full spec."""
        if isinstance(v, Scenario | str):
            return ScenarioSpec.of(v)
        return v

    @model_validator(mode="after")
    def check_benchmark_size(self) -> "SimConfig":
        """Benchmark mode is restricted to the published sample sizes."""
        if self.mode == "benchmark" and self.n not in BENCHMARK_SAMPLE_SIZES:
            raise ValueError(f"benchmark mode requires n in {BENCHMARK_SAMPLE_SIZES}, got {self.n}")
        return self


class MrbmaOptions(BaseModel):
    """Tuning knobs for the summary-statistic MR-BMA baseline."""

    model_config = ConfigDict(frozen=True)

    g: float | None = Field(default=None, gt=0, description="g-prior scale; default min(J^2, 100)")
    weighted: bool = Field(default=True, description="Weight instruments by outcome-association SE^-2")
    summary_covariates: bool = Field(
        default=False, description="Adjust per-instrument summary regressions for covariates V"
    )

    def prior_scale(self, n_instruments: int) -> float:
        """Resolve the g-prior scale for ``n_instruments`` instruments."""
        return float(self.g) if self.g is not None else float(min(n_instruments**2, 100))


class ScreenSettings(BaseModel):
    """Settings for the triplet-screening pipeline."""

    model_config = ConfigDict(frozen=True)

    window_bp: int = Field(default=200_000, gt=0, description="Half-width of the promoter-centred cis window")
    max_instruments: int = Field(default=10, ge=1)
    association: Literal["pearson", "spearman"] = Field(
        default="pearson", description="Statistic used to pick the pathway representation"
    )
    mcmc: McmcSettings = Field(default_factory=McmcSettings.screening)
    hyperparams: Hyperparams = Field(default_factory=Hyperparams)


class GeneLocus(BaseModel):
    """Genomic anchor of a gene for cis-window instrument selection."""

    chrom: str | None = None
    promoter: int = Field(ge=0)

    @field_validator("chrom", mode="before")
    @classmethod
    def chrom_as_str(cls, v: Any) -> Any:
        """Chromosome labels are compared as strings."""
        return None if v is None else str(v)


class TripletEntry(BaseModel):
    """One ligand-receptor-pathway triplet as listed in a manifest."""

    ligand: str
    receptor: str
    pathway_id: str
    pathway_genes: list[str] = Field(min_length=1)
    sender: Path | None = None
    receiver: Path | None = None
    genotypes: Path | None = None

    @property
    def triplet_id(self) -> str:
        return f"{self.ligand}|{self.receptor}|{self.pathway_id}"


class Manifest(BaseModel):
    """JSON screening manifest: table paths, gene loci, covariates and triplets.

    Relative paths are resolved against the manifest's directory by the loader.
    """

    sender: Path
    receiver: Path
    genotypes: Path
    snp_positions: Path
    covariates: Path | None = None
    covariate_columns: list[str] = Field(default_factory=list)
    genes: dict[str, GeneLocus]
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    triplets: list[TripletEntry] = Field(min_length=1)

    @model_validator(mode="after")
    def check_loci(self) -> "Manifest":
        """Every ligand and receptor needs a promoter position."""
        missing = sorted(
            {gene for t in self.triplets for gene in (t.ligand, t.receptor) if gene not in self.genes}
        )
        if missing:
            raise ValueError(f"Missing promoter positions for genes: {', '.join(missing)}")
        if self.covariate_columns and self.covariates is None:
            raise ValueError("covariate_columns given but no covariates table")
        return self


class RunConfig(BaseModel):
    """Optional YAML configuration shared by the fit, screen and benchmark commands."""

    hyperparams: Hyperparams = Field(default_factory=Hyperparams)
    mcmc: dict[str, Any] = Field(default_factory=dict, description="Overrides applied to the mode's MCMC preset")
    mrbma: MrbmaOptions = Field(default_factory=MrbmaOptions)
    screen: dict[str, Any] = Field(default_factory=dict, description="Overrides for ScreenSettings")


def load_config_file(path: Path | None) -> RunConfig:
    """Load a YAML run configuration.

    Args:
        path: YAML file, or None for defaults.

    Returns:
        Parsed configuration.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigurationError: If the YAML is malformed or fails validation.
    """
    if path is None:
        return RunConfig()
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be a mapping")
        return RunConfig.model_validate(data)
    except (yaml.YAMLError, ValidationError) as e:
        raise ConfigurationError(f"Invalid configuration {path}: {e}") from e
