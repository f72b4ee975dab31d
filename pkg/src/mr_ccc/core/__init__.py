"""Core statistics for MR-CCC: model, simulator, sampler, baselines, benchmark and screening."""

from .baselines import fit_method, fit_mrbma, fit_mrccc, fit_mvmr, fit_ols
from .config import Hyperparams, Manifest, McmcSettings, MrbmaOptions, ScreenSettings, SimConfig
from .errors import (
    ConfigurationError,
    DataValidationError,
    MrcccError,
    RankDeficiencyError,
    SamplerError,
    TripletError,
)
from .gibbs import PosteriorSummary, run_chain
from .simulator import generate_dataset, generate_replicates
from .types import Dataset, EffectSummary, Method, MethodResult, Scenario, StructuralParams

__all__ = [
    "ConfigurationError",
    "DataValidationError",
    "Dataset",
    "EffectSummary",
    "Hyperparams",
    "Manifest",
    "McmcSettings",
    "Method",
    "MethodResult",
    "MrbmaOptions",
    "MrcccError",
    "PosteriorSummary",
    "RankDeficiencyError",
    "SamplerError",
    "Scenario",
    "ScreenSettings",
    "SimConfig",
    "StructuralParams",
    "TripletError",
    "fit_method",
    "fit_mrbma",
    "fit_mrccc",
    "fit_mvmr",
    "fit_ols",
    "generate_dataset",
    "generate_replicates",
    "run_chain",
]
