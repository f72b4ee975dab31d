"""Replicate generation from the structural model under scenarios S1-S3.

Every replicate draws its variable blocks from independent streams keyed by
``(master_seed, scenario, n, replicate_index, block)``. Blocks are drawn in
the fixed order G, H, V, U, eps_X, eps_Z, eps_Y; each block has its own stream,
so generation order across replicates never changes a replicate's values.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from loguru import logger

from .config import ScenarioSpec, SimConfig
from .linalg import OlsFit, ols
from .types import Dataset, Scenario, StructuralParams

P_G = 5
P_H = 5
P_V = 3
INSTRUMENT_EFFECT = 0.5
COVARIATE_EFFECT = 0.3
RECEPTOR_EFFECT = 0.5
CONFOUNDING = 0.7

_BLOCKS = ("G", "H", "V", "U", "eps_X", "eps_Z", "eps_Y")
_CHAIN_STREAM = len(_BLOCKS)


def fixed_params(s: ScenarioSpec | Scenario | str) -> StructuralParams:
    """Simulation ground truth for scenario ``s``.

    p_G = p_H = 5, p_V = 3; instrument effects 0.5; covariate effects 0.3;
    beta_Z = 0.5; confounding loadings 0.7; unit error variances.
    """
    spec = s if isinstance(s, ScenarioSpec) else ScenarioSpec.of(s)
    return StructuralParams(
        pi_X=np.full(P_G, INSTRUMENT_EFFECT),
        pi_Z=np.full(P_H, INSTRUMENT_EFFECT),
        alpha_X=np.full(P_V, COVARIATE_EFFECT),
        alpha_Z=np.full(P_V, COVARIATE_EFFECT),
        alpha_Y=np.full(P_V, COVARIATE_EFFECT),
        lambda_X=CONFOUNDING,
        lambda_Z=CONFOUNDING,
        lambda_Y=CONFOUNDING,
        beta_X=spec.beta_X,
        beta_Z=RECEPTOR_EFFECT,
        beta_XZ=spec.beta_XZ,
        sigma2_X=1.0,
        sigma2_Z=1.0,
        sigma2_Y=1.0,
        gamma=spec.gamma,
    )


def stream(master_seed: int, scenario: Scenario, n: int, replicate_index: int, block: int) -> np.random.Generator:
    """Independent generator for one (replicate, block) pair."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(scenario.index, n, replicate_index, block))
    return np.random.Generator(np.random.PCG64(seq))


def chain_seed(master_seed: int, scenario: Scenario, n: int, replicate_index: int) -> int:
    """64-bit MCMC seed tied to a replicate, independent of its data streams."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(scenario.index, n, replicate_index, _CHAIN_STREAM))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class Simulation:
    """A simulated replicate: observed data, its ground truth, and the hidden confounder."""

    dataset: Dataset
    params: StructuralParams
    _confounder: np.ndarray

    def debug_confounder(self) -> np.ndarray:
        """Unobserved confounder U. For oracle tests only; never pass it to an estimator."""
        return self._confounder

    def __iter__(self):
        # Allows ``dataset, params = generate_dataset(cfg)``
        return iter((self.dataset, self.params))


def generate_dataset(c: SimConfig, params: StructuralParams | None = None) -> Simulation:
    """Draw one replicate from the structural model.

    Args:
        c: Replicate identity and seed.
        params: Parameter override; only allowed in ad-hoc mode.

    Returns:
        The simulated replicate.

    Raises:
        ValueError: If ``params`` is supplied in benchmark mode.
    """
    if params is not None and c.mode == "benchmark":
        raise ValueError("benchmark mode uses the fixed scenario parameters")
    theta = params if params is not None else fixed_params(c.scenario)
    sid, n, r = c.scenario.id, c.n, c.replicate_index
    p_G, p_H, p_V = theta.pi_X.shape[0], theta.pi_Z.shape[0], theta.alpha_Y.shape[0]

    draws = {}
    for block, name in enumerate(_BLOCKS):
        rng = stream(c.master_seed, sid, n, r, block)
        width = {"G": p_G, "H": p_H, "V": p_V}.get(name)
        draws[name] = rng.standard_normal((n, width)) if width is not None else rng.standard_normal(n)

    G, H, V, U = draws["G"], draws["H"], draws["V"], draws["U"]
    x = G @ theta.pi_X + V @ theta.alpha_X + theta.lambda_X * U + np.sqrt(theta.sigma2_X) * draws["eps_X"]
    z = H @ theta.pi_Z + V @ theta.alpha_Z + theta.lambda_Z * U + np.sqrt(theta.sigma2_Z) * draws["eps_Z"]
    y = (
        theta.beta_X * x
        + theta.beta_Z * z
        + theta.beta_XZ * x * z
        + V @ theta.alpha_Y
        + theta.lambda_Y * U
        + np.sqrt(theta.sigma2_Y) * draws["eps_Y"]
    )
    logger.trace(f"Simulated {sid.value} n={n} replicate={r}")
    return Simulation(dataset=Dataset(G=G, H=H, V=V, x=x, z=z, y=y), params=theta, _confounder=U)


def generate_replicates(
    scenario: ScenarioSpec | Scenario | str,
    n: int,
    count: int = 20,
    master_seed: int = 0,
    mode: str = "adhoc",
) -> list[Dataset]:
    """Generate ``count`` replicate datasets, replicate ``r`` keyed by ``(master_seed, r)``."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    spec = scenario if isinstance(scenario, ScenarioSpec) else ScenarioSpec.of(scenario)
    return [
        generate_dataset(
            SimConfig(scenario=spec, n=n, replicate_index=r, master_seed=master_seed, mode=mode)  # type: ignore[arg-type]
        ).dataset
        for r in range(count)
    ]


def dataset_digest(d: Dataset) -> str:
    """SHA-256 of the dataset's raw bytes, for paired-input checks."""
    h = hashlib.sha256()
    for block in (d.G, d.H, d.V, d.x, d.z, d.y):
        h.update(np.ascontiguousarray(block).tobytes())
        h.update(str(block.shape).encode())
    return h.hexdigest()


def true_plugins(d: Dataset, params: StructuralParams) -> tuple[np.ndarray, np.ndarray]:
    """Instrument-and-covariate conditional means (X*, Z*) under the true parameters."""
    return d.G @ params.pi_X + d.V @ params.alpha_X, d.H @ params.pi_Z + d.V @ params.alpha_Z


def fit_working_model(d: Dataset, x_star: np.ndarray, z_star: np.ndarray) -> OlsFit:
    """OLS of y on (1, X*, Z*, X*Z*, V): the plug-in regression that identifies the causal effects."""
    names = ["intercept", "beta_X", "beta_Z", "beta_XZ"] + [f"v{j + 1}" for j in range(d.p_V)]
    design = np.column_stack([np.ones(d.n), x_star, z_star, x_star * z_star, d.V])
    return ols(design, d.y, names)


def implied_intercept(params: StructuralParams) -> float:
    """Working-model intercept beta_XZ * lambda_X * lambda_Z for a unit-variance, mean-zero confounder."""
    return params.beta_XZ * params.lambda_X * params.lambda_Z
