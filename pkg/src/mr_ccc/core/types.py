"""Core type definitions shared by every MR-CCC module."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .errors import DataValidationError

# Decision thresholds for the two families of communication scores
BAYESIAN_THRESHOLD = 0.5
SIGNIFICANCE_LEVEL = 0.05


def _frozen(array: Any, ndim: int, name: str) -> np.ndarray:
    """Copy ``array`` into a read-only float64 array of the requested rank."""
    out = np.array(array, dtype=np.float64)
    if ndim == 2 and out.ndim == 1 and out.size == 0:
        out = out.reshape(0, 0)
    if out.ndim != ndim:
        raise DataValidationError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    out.setflags(write=False)
    return out


class Method(Enum):
    """Estimators compared in the benchmark."""

    OLS = "ols"
    MVMR = "mvmr"
    MRBMA = "mrbma"
    MRCCC = "mrccc"

    @property
    def is_bayesian(self) -> bool:
        """Whether the communication score is a posterior probability."""
        return self in (Method.MRBMA, Method.MRCCC)

    @property
    def estimates_interaction(self) -> bool:
        """Whether the method reports an estimate of beta_XZ."""
        return self in (Method.OLS, Method.MRCCC)


class Scenario(Enum):
    """Simulation scenarios."""

    S1 = "S1"  # no communication
    S2 = "S2"  # communication with receptor modulation
    S3 = "S3"  # communication without receptor modulation

    @property
    def index(self) -> int:
        """Stable integer key used when deriving random streams."""
        return int(self.value[1:])


@dataclass(frozen=True, eq=False)
class Dataset:
    """Donor-level analysis input: instruments, covariates, exposures and outcome.

    Rows are donors. ``V`` may have zero columns. Arrays are stored read-only.
    """

    G: np.ndarray
    H: np.ndarray
    V: np.ndarray
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        for name, ndim in (("G", 2), ("H", 2), ("V", 2), ("x", 1), ("z", 1), ("y", 1)):
            object.__setattr__(self, name, _frozen(getattr(self, name), ndim, name))

        n = self.x.shape[0]
        if self.V.size == 0 and self.V.shape[0] != n:
            object.__setattr__(self, "V", _frozen(np.zeros((n, 0)), 2, "V"))
        if n < 2:
            raise DataValidationError(f"Dataset needs at least 2 donors, got {n}")
        for name in ("G", "H", "V", "z", "y"):
            rows = getattr(self, name).shape[0]
            if rows != n:
                raise DataValidationError(f"{name} has {rows} rows but x has {n}")
        if self.p_G < 1 or self.p_H < 1:
            raise DataValidationError("At least one instrument is required for each exposure")

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def p_G(self) -> int:
        return int(self.G.shape[1])

    @property
    def p_H(self) -> int:
        return int(self.H.shape[1])

    @property
    def p_V(self) -> int:
        return int(self.V.shape[1])

    def column_names(self) -> list[str]:
        """Column labels in CSV order: g1..gpG, h1..hpH, v1..vpV, x, z, y."""
        return (
            [f"g{j + 1}" for j in range(self.p_G)]
            + [f"h{j + 1}" for j in range(self.p_H)]
            + [f"v{j + 1}" for j in range(self.p_V)]
            + ["x", "z", "y"]
        )

    def to_matrix(self) -> np.ndarray:
        """Stack all blocks column-wise in :meth:`column_names` order."""
        return np.column_stack([self.G, self.H, self.V, self.x, self.z, self.y])

    def validate(self) -> None:
        """Check every entry is finite.

        Raises:
            DataValidationError: Naming the first offending row and column.
        """
        matrix = self.to_matrix()
        bad = ~np.isfinite(matrix)
        if bad.any():
            row, col = (int(i) for i in np.argwhere(bad)[0])
            raise DataValidationError(
                f"Non-finite value {matrix[row, col]!r} at row {row}, column '{self.column_names()[col]}'"
            )


@dataclass(frozen=True, eq=False)
class StructuralParams:
    """Generative parameters of the structural model (simulation ground truth)."""

    pi_X: np.ndarray
    pi_Z: np.ndarray
    alpha_X: np.ndarray
    alpha_Z: np.ndarray
    alpha_Y: np.ndarray
    lambda_X: float
    lambda_Z: float
    lambda_Y: float
    beta_X: float
    beta_Z: float
    beta_XZ: float
    sigma2_X: float = 1.0
    sigma2_Z: float = 1.0
    sigma2_Y: float = 1.0
    gamma: int = field(default=-1)

    def __post_init__(self) -> None:
        for name in ("pi_X", "pi_Z", "alpha_X", "alpha_Z", "alpha_Y"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1, name))
        if min(self.sigma2_X, self.sigma2_Z, self.sigma2_Y) <= 0:
            raise DataValidationError("Error variances must be strictly positive")
        implied = 0 if (self.beta_X == 0 and self.beta_XZ == 0) else 1
        if self.gamma == -1:
            object.__setattr__(self, "gamma", implied)
        elif self.gamma != implied:
            raise DataValidationError(
                f"gamma={self.gamma} inconsistent with beta_X={self.beta_X}, beta_XZ={self.beta_XZ}"
            )
        if not (self.alpha_X.shape == self.alpha_Z.shape == self.alpha_Y.shape):
            raise DataValidationError("Covariate effect vectors must share length p_V")


@dataclass(frozen=True)
class EffectSummary:
    """Raw and standardized communication effects for one fitted triplet."""

    beta_X_hat: float
    beta_Z_hat: float
    beta_XZ_hat: float
    beta_X_std: float
    beta_XZ_std: float
    sd_x: float
    sd_z: float
    sd_y: float


@dataclass(frozen=True)
class Threshold:
    """Finite sign-reversal point, in receptor SD units."""

    z_star: float


@dataclass(frozen=True)
class Unbounded:
    """The ligand effect never changes sign (no receptor modulation)."""


SignReversal = Threshold | Unbounded


@dataclass(frozen=True)
class MethodResult:
    """Per-method, per-dataset estimator output on a common contract.

    ``extras`` holds method-specific quantities (``p_value`` for frequentist
    methods, ``pip``/``mip_x``/``mace_x`` etc. for Bayesian ones).
    """

    method: Method
    score: float
    decision: bool
    beta_X_hat: float
    beta_XZ_hat: float | None = None
    extras: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise DataValidationError(f"{self.method.name} score {self.score} outside [0, 1]")
        if not self.method.estimates_interaction and self.beta_XZ_hat is not None:
            raise DataValidationError(f"{self.method.name} does not estimate beta_XZ")
        expected = decide(self.method, self.score, self.extras.get("p_value"))
        if self.decision != expected:
            raise DataValidationError(f"{self.method.name} decision {self.decision} contradicts its rule")


def decide(method: Method, score: float, p_value: float | None = None) -> bool:
    """Apply the communication decision rule for ``method``.

    Bayesian scores declare communication strictly above 0.5; frequentist
    methods declare it when the p-value is at most 0.05 (``1 - score`` when
    the p-value is not supplied).
    """
    if method.is_bayesian:
        return score > BAYESIAN_THRESHOLD
    p = 1.0 - score if p_value is None else p_value
    return p <= SIGNIFICANCE_LEVEL
