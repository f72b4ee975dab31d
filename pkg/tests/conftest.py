"""Pytest fixtures for MR-CCC tests."""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import pytest

from mr_ccc.core.config import Hyperparams, McmcSettings, SimConfig
from mr_ccc.core.gibbs import ChainState, recompute_plugins
from mr_ccc.core.simulator import generate_dataset
from mr_ccc.core.types import Dataset

# =============================================================================
# Datasets
# =============================================================================


def random_dataset(rng: np.random.Generator, n: int = 20, p_G: int = 3, p_H: int = 2, p_V: int = 2) -> Dataset:
    """Small dataset with unstructured Gaussian entries."""
    return Dataset(
        G=rng.standard_normal((n, p_G)),
        H=rng.standard_normal((n, p_H)),
        V=rng.standard_normal((n, p_V)),
        x=rng.standard_normal(n),
        z=rng.standard_normal(n),
        y=rng.standard_normal(n),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test inputs."""
    return np.random.default_rng(20240611)


@pytest.fixture
def small_dataset(rng: np.random.Generator) -> Dataset:
    """Random n=20 dataset with p_G=3, p_H=2, p_V=2."""
    return random_dataset(rng)


@pytest.fixture
def s2_dataset() -> Dataset:
    """One S2 replicate at n=500."""
    return generate_dataset(SimConfig(scenario="S2", n=500, master_seed=11)).dataset


@pytest.fixture
def s1_dataset() -> Dataset:
    """One S1 replicate at n=500."""
    return generate_dataset(SimConfig(scenario="S1", n=500, master_seed=11)).dataset


# =============================================================================
# Sampler fixtures
# =============================================================================


@pytest.fixture
def oracle_hyper() -> Hyperparams:
    """Distinct, explicit prior scales and a negligible ridge, for conditional oracles."""
    return Hyperparams(g_G=7.0, g_H=5.0, g_V=3.0, g_Z=11.0, g_beta=13.0, ridge_lambda=1e-12)


@pytest.fixture
def quick_mcmc() -> McmcSettings:
    """Short chain for smoke and determinism tests."""
    return McmcSettings(iterations=300, burn_in=100, thin=5, seed=3)


def random_chain_state(rng: np.random.Generator, data: Dataset, gamma: int = 1) -> ChainState:
    """Arbitrary but internally consistent chain state."""
    state = ChainState(
        pi_X=rng.standard_normal(data.p_G),
        alpha_X=rng.standard_normal(data.p_V),
        sigma2_X=float(rng.uniform(0.5, 2.0)),
        pi_Z=rng.standard_normal(data.p_H),
        alpha_Z=rng.standard_normal(data.p_V),
        sigma2_Z=float(rng.uniform(0.5, 2.0)),
        mu=float(rng.standard_normal()),
        alpha_Y=rng.standard_normal(data.p_V),
        beta_Z=float(rng.standard_normal()),
        sigma2_Y=float(rng.uniform(0.5, 2.0)),
        beta=rng.standard_normal(2),
        gamma=gamma,
        rho=float(rng.uniform(0.1, 0.9)),
        X_star=np.zeros(data.n),
        Z_star=np.zeros(data.n),
        X_beta=np.zeros((data.n, 2)),
    )
    return recompute_plugins(state, data)


@pytest.fixture
def make_state(rng: np.random.Generator):
    """Factory for random, internally consistent chain states.

    Example:
        def test_something(small_dataset, make_state):
            state = make_state(small_dataset, gamma=0)
    """

    def factory(data: Dataset, gamma: int = 1) -> ChainState:
        return random_chain_state(rng, data, gamma)

    return factory


# =============================================================================
# Screening tables
# =============================================================================


class TripletTables:
    """Writes a synthetic screening workspace: expression, genotype, SNP and covariate CSVs.

    The simulated dataset is laid out as it would come from a cohort: ligand
    expression in the sender table, receptor and one pathway gene in the
    receiver table, ligand instruments on chr1 near the ligand promoter and
    receptor instruments on chr2 near the receptor promoter.
    """

    LIGAND_PROMOTER = 1_000_000
    RECEPTOR_PROMOTER = 5_000_000

    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)

    def write(
        self,
        dataset: Dataset,
        ligand: str = "LIG",
        receptor: str = "REC",
        pathway_gene: str = "PW1",
        library_size: np.ndarray | None = None,
    ) -> dict[str, Path]:
        donors = [f"donor{i:04d}" for i in range(dataset.n)]
        sizes = np.full(dataset.n, 10_000.0) if library_size is None else library_size

        sender = pd.DataFrame({"donor": donors, "library_size": sizes, ligand: dataset.x, "NOISE": dataset.G[:, 0]})
        receiver = pd.DataFrame(
            {"donor": donors, "library_size": sizes, receptor: dataset.z, pathway_gene: dataset.y}
        )
        geno = {"donor": donors}
        snps = []
        for j in range(dataset.p_G):
            geno[f"rsG{j}"] = dataset.G[:, j]
            snps.append((f"rsG{j}", "1", self.LIGAND_PROMOTER + 1_000 * (j + 1)))
        for j in range(dataset.p_H):
            geno[f"rsH{j}"] = dataset.H[:, j]
            snps.append((f"rsH{j}", "2", self.RECEPTOR_PROMOTER - 1_000 * (j + 1)))
        covariates = pd.DataFrame({"donor": donors, **{f"pc{j + 1}": dataset.V[:, j] for j in range(dataset.p_V)}})

        paths = {
            "sender": self.root / "sender.csv",
            "receiver": self.root / "receiver.csv",
            "genotypes": self.root / "genotypes.csv",
            "snp_positions": self.root / "snps.csv",
            "covariates": self.root / "covariates.csv",
        }
        sender.to_csv(paths["sender"], index=False, float_format="%.17g")
        receiver.to_csv(paths["receiver"], index=False, float_format="%.17g")
        pd.DataFrame(geno).to_csv(paths["genotypes"], index=False, float_format="%.17g")
        pd.DataFrame(snps, columns=["snp", "chrom", "position"]).to_csv(paths["snp_positions"], index=False)
        covariates.to_csv(paths["covariates"], index=False, float_format="%.17g")
        return paths

    def manifest(self, triplets: list[dict[str, Any]], master_seed: int = 0, name: str = "manifest.json") -> Path:
        """Write a manifest that points at the tables by relative path."""
        body = {
            "sender": "sender.csv",
            "receiver": "receiver.csv",
            "genotypes": "genotypes.csv",
            "snp_positions": "snps.csv",
            "covariates": "covariates.csv",
            "covariate_columns": ["pc1", "pc2", "pc3"],
            "genes": {
                "LIG": {"chrom": "1", "promoter": self.LIGAND_PROMOTER},
                "REC": {"chrom": "2", "promoter": self.RECEPTOR_PROMOTER},
                "ORPHAN": {"chrom": "7", "promoter": 42},
                "NOISE": {"chrom": "9", "promoter": 42},
            },
            "master_seed": master_seed,
            "triplets": triplets,
        }
        path = self.root / name
        path.write_text(json.dumps(body, indent=2))
        return path


@pytest.fixture
def triplet_tables(tmp_path: Path) -> TripletTables:
    """Factory for synthetic screening workspaces under tmp_path."""
    return TripletTables(tmp_path / "cohort")

