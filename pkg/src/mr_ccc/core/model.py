"""Centering, standardized effects, sign-reversal thresholds and effect curves."""

from dataclasses import dataclass

import numpy as np
from loguru import logger

from .errors import DataValidationError
from .types import Dataset, EffectSummary, SignReversal, Threshold, Unbounded

# Column means at or below this absolute size are left in place so that centering an
# already-centered dataset returns it unchanged.
_CENTER_ATOL = 1e-13
_SLOPE_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class CenteringMeans:
    """Column means removed by :func:`center_dataset`."""

    G: np.ndarray
    H: np.ndarray
    V: np.ndarray
    x: float
    z: float
    y: float


def _column_means(block: np.ndarray) -> np.ndarray:
    means = block.mean(axis=0)
    return np.where(np.abs(means) <= _CENTER_ATOL, 0.0, means)


def center_dataset(d: Dataset) -> tuple[Dataset, CenteringMeans]:
    """Subtract column means from every block of ``d``.

    Args:
        d: Dataset to center.

    Returns:
        The centered dataset and the means that were subtracted.

    Raises:
        DataValidationError: If any entry is non-finite.
    """
    d.validate()

    blocks = {name: np.atleast_2d(getattr(d, name).T).T for name in ("G", "H", "V", "x", "z", "y")}
    means = {name: _column_means(block) if block.shape[1] else np.zeros(0) for name, block in blocks.items()}

    centered = Dataset(
        G=d.G - means["G"],
        H=d.H - means["H"],
        V=d.V - means["V"] if d.p_V else d.V,
        x=d.x - means["x"][0],
        z=d.z - means["z"][0],
        y=d.y - means["y"][0],
    )
    logger.debug(f"Centered dataset with n={d.n}, p_G={d.p_G}, p_H={d.p_H}, p_V={d.p_V}")
    return centered, CenteringMeans(
        G=means["G"],
        H=means["H"],
        V=means["V"],
        x=float(means["x"][0]),
        z=float(means["z"][0]),
        y=float(means["y"][0]),
    )


def _sd(v: np.ndarray, name: str) -> float:
    if v.shape[0] < 2:
        raise DataValidationError(f"Need at least 2 observations to compute sd({name})")
    sd = float(np.std(v, ddof=1))
    if not sd > 0:
        raise DataValidationError(f"sd({name}) is zero; cannot standardize")
    return sd


def standardize_effects(
    beta_X: float,
    beta_Z: float,
    beta_XZ: float,
    x: np.ndarray,
    z: np.ndarray,
    y: np.ndarray,
) -> EffectSummary:
    """Express communication effects in standard-deviation units.

    ``beta_X_std = beta_X * sd(x) / sd(y)`` and
    ``beta_XZ_std = beta_XZ * sd(x) * sd(z) / sd(y)``, with sample SDs (n - 1).

    Raises:
        DataValidationError: If fewer than 2 donors or any SD is zero.
    """
    sd_x, sd_z, sd_y = _sd(np.asarray(x, float), "x"), _sd(np.asarray(z, float), "z"), _sd(np.asarray(y, float), "y")
    return EffectSummary(
        beta_X_hat=float(beta_X),
        beta_Z_hat=float(beta_Z),
        beta_XZ_hat=float(beta_XZ),
        beta_X_std=float(beta_X) * sd_x / sd_y,
        beta_XZ_std=float(beta_XZ) * sd_x * sd_z / sd_y,
        sd_x=sd_x,
        sd_z=sd_z,
        sd_y=sd_y,
    )


def sign_reversal_threshold(e: EffectSummary) -> SignReversal:
    """Receptor level (SD units) at which the standardized ligand effect changes sign.

    Returns :class:`Unbounded` when the standardized interaction is numerically zero.
    """
    if abs(e.beta_XZ_std) < _SLOPE_ATOL:
        return Unbounded()
    z_star = -e.beta_X_std / e.beta_XZ_std
    # -0.0 for a zero main effect reads badly in tables
    return Threshold(z_star=z_star + 0.0)


def effect_curve(e: EffectSummary, z_grid: np.ndarray) -> np.ndarray:
    """Standardized receptor-modulated ligand effect over ``z_grid`` (SD units)."""
    grid = np.asarray(z_grid, dtype=np.float64)
    if not np.all(np.isfinite(grid)):
        raise DataValidationError("z_grid must be finite")
    return e.beta_X_std + e.beta_XZ_std * grid


def observed_grid(z: np.ndarray, num: int = 101) -> np.ndarray:
    """Evenly spaced grid in SD units spanning the observed receptor range."""
    z = np.asarray(z, dtype=np.float64)
    standardized = (z - z.mean()) / _sd(z, "z")
    return np.linspace(standardized.min(), standardized.max(), num)


def receptor_modulated_effect(beta_X: float, beta_XZ: float, z: np.ndarray) -> np.ndarray:
    """Raw-scale causal effect of ligand on pathway, ``beta_X + beta_XZ * z``."""
    return beta_X + beta_XZ * np.asarray(z, dtype=np.float64)
