"""Donor-level data preparation and ligand-receptor-pathway triplet screening.

Inputs are donor-level CSVs: pseudobulk expression per cell type
(``donor,library_size,<genes>``), genotype dosages (``donor,<snps>``), SNP
positions (``snp,chrom,position``) and optional covariates (``donor,...``).
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
import scipy.linalg as scl
from loguru import logger
from scipy import stats

from .config import GeneLocus, Manifest, ScreenSettings
from .errors import DataValidationError, MrcccError, TripletError
from .gibbs import PosteriorSummary, run_chain
from .model import center_dataset, sign_reversal_threshold, standardize_effects
from .storage import read_numeric_table, read_snp_positions
from .types import Dataset, EffectSummary, SignReversal, Threshold

LIBRARY_SIZE = "library_size"
MAD_MULTIPLIER = 3.0
MIN_MEDIAN_FRACTION = 0.25


# -- tables -----------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExpressionTable:
    """Donor x gene pseudobulk expression for one cell type, with per-donor library sizes."""

    donors: tuple[str, ...]
    genes: tuple[str, ...]
    values: np.ndarray
    library_size: np.ndarray

    def __post_init__(self) -> None:
        if len(set(self.donors)) != len(self.donors):
            raise DataValidationError("Donor ids must be unique")
        if len(set(self.genes)) != len(self.genes):
            raise DataValidationError("Gene ids must be unique")
        if self.values.shape != (len(self.donors), len(self.genes)):
            raise DataValidationError(f"values shape {self.values.shape} does not match donors x genes")
        if self.library_size.shape != (len(self.donors),):
            raise DataValidationError("library_size must have one entry per donor")
        if np.any(self.library_size < 0):
            raise DataValidationError("Library sizes must be non-negative")

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> ExpressionTable:
        if LIBRARY_SIZE not in frame.columns:
            raise DataValidationError(f"Expression table needs a '{LIBRARY_SIZE}' column")
        genes = frame.drop(columns=[LIBRARY_SIZE])
        return cls(
            donors=tuple(frame.index),
            genes=tuple(genes.columns),
            values=genes.to_numpy(dtype=np.float64),
            library_size=frame[LIBRARY_SIZE].to_numpy(dtype=np.float64),
        )

    @classmethod
    def read(cls, path: Path) -> ExpressionTable:
        return cls.from_frame(read_numeric_table(path, what="expression table"))

    def column(self, gene: str) -> np.ndarray:
        return self.values[:, self.genes.index(gene)]

    def take(self, rows: np.ndarray) -> ExpressionTable:
        """Subset donors by integer index or boolean mask."""
        idx = np.arange(len(self.donors))[rows]
        return ExpressionTable(
            donors=tuple(self.donors[i] for i in idx),
            genes=self.genes,
            values=self.values[idx],
            library_size=self.library_size[idx],
        )

    def align(self, donors: list[str]) -> ExpressionTable:
        lookup = {d: i for i, d in enumerate(self.donors)}
        return self.take(np.array([lookup[d] for d in donors], dtype=int))


@dataclass(frozen=True, eq=False)
class GenotypeMatrix:
    """Donor x SNP dosages with genomic positions."""

    donors: tuple[str, ...]
    snps: tuple[str, ...]
    dosages: np.ndarray
    positions: pd.DataFrame

    def take(self, rows: np.ndarray) -> GenotypeMatrix:
        idx = np.arange(len(self.donors))[rows]
        return GenotypeMatrix(tuple(self.donors[i] for i in idx), self.snps, self.dosages[idx], self.positions)

    def align(self, donors: list[str]) -> GenotypeMatrix:
        lookup = {d: i for i, d in enumerate(self.donors)}
        return self.take(np.array([lookup[d] for d in donors], dtype=int))


@dataclass(frozen=True, eq=False)
class LoadedTables:
    """Donor-aligned inputs for a screen; ``dropped`` maps each table to donors removed during alignment."""

    sender: ExpressionTable
    receiver: ExpressionTable
    genotypes: GenotypeMatrix
    covariates: np.ndarray
    covariate_names: tuple[str, ...]
    dropped: dict[str, list[str]] = field(default_factory=dict)

    @property
    def donors(self) -> tuple[str, ...]:
        return self.sender.donors

    def take(self, rows: np.ndarray) -> LoadedTables:
        return LoadedTables(
            sender=self.sender.take(rows),
            receiver=self.receiver.take(rows),
            genotypes=self.genotypes.take(rows),
            covariates=self.covariates[rows],
            covariate_names=self.covariate_names,
            dropped=self.dropped,
        )


def align_donors(tables: dict[str, list[str]]) -> tuple[list[str], dict[str, list[str]]]:
    """Intersect donor ids across tables, keeping the first table's order.

    Returns:
        Shared donors and, per table, the donors it loses.

    Raises:
        DataValidationError: If no donor is shared by every table.
    """
    names = list(tables)
    shared = set(tables[names[0]])
    for name in names[1:]:
        shared &= set(tables[name])
    if not shared:
        raise DataValidationError(f"No donors shared by tables: {', '.join(names)}")
    order = [d for d in tables[names[0]] if d in shared]
    dropped = {name: [d for d in ids if d not in shared] for name, ids in tables.items()}
    return order, {name: ids for name, ids in dropped.items() if ids}


def load_tables(
    manifest: Manifest,
    sender: Path | None = None,
    receiver: Path | None = None,
    genotypes: Path | None = None,
) -> LoadedTables:
    """Read and donor-align the sender, receiver, genotype and covariate tables.

    Per-triplet table overrides replace the manifest defaults. Donors missing
    from any table are dropped and reported.
    """
    sender_t = ExpressionTable.read(sender or manifest.sender)
    receiver_t = ExpressionTable.read(receiver or manifest.receiver)
    geno = read_numeric_table(genotypes or manifest.genotypes, what="genotype table")
    positions = read_snp_positions(manifest.snp_positions)

    ids = {"sender": list(sender_t.donors), "receiver": list(receiver_t.donors), "genotypes": list(geno.index)}
    cov_frame = None
    if manifest.covariates is not None:
        cov_frame = read_numeric_table(manifest.covariates, what="covariate table")
        columns = manifest.covariate_columns or list(cov_frame.columns)
        unknown = [c for c in columns if c not in cov_frame.columns]
        if unknown:
            raise DataValidationError(f"{manifest.covariates}: missing covariate columns {unknown}")
        cov_frame = cov_frame[columns]
        ids["covariates"] = list(cov_frame.index)

    donors, dropped = align_donors(ids)
    for name, lost in dropped.items():
        logger.warning(f"Dropped {len(lost)} donors absent from other tables ({name}): {', '.join(lost[:10])}")

    genotype_matrix = GenotypeMatrix(
        donors=tuple(geno.index), snps=tuple(geno.columns), dosages=geno.to_numpy(), positions=positions
    ).align(donors)
    covariates = cov_frame.loc[donors].to_numpy() if cov_frame is not None else np.zeros((len(donors), 0))
    return LoadedTables(
        sender=sender_t.align(donors),
        receiver=receiver_t.align(donors),
        genotypes=genotype_matrix,
        covariates=covariates,
        covariate_names=tuple(cov_frame.columns) if cov_frame is not None else (),
        dropped=dropped,
    )


# -- donor filtering --------------------------------------------------------------------------


def _library_size_outliers(sizes: np.ndarray) -> np.ndarray:
    median = float(np.median(sizes))
    mad = float(np.median(np.abs(sizes - median)))
    return (sizes > median + MAD_MULTIPLIER * mad) | (sizes < MIN_MEDIAN_FRACTION * median)


def filter_donors(t_sender: ExpressionTable, t_receiver: ExpressionTable) -> np.ndarray:
    """Boolean mask of donors that pass the library-size rule in both cell types.

    A donor is excluded when its library size exceeds median + 3 MAD (unscaled
    median absolute deviation) or falls below 25% of the median. The rule is
    re-applied to the survivors until nothing more is excluded, so filtering
    its own output is a no-op.

    Raises:
        DataValidationError: If the tables are not donor-aligned or every donor is excluded.
    """
    if t_sender.donors != t_receiver.donors:
        raise DataValidationError("Sender and receiver tables must be donor-aligned")
    keep = np.ones(len(t_sender.donors), dtype=bool)
    while True:
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            raise DataValidationError("Library-size filtering excluded every donor")
        bad = _library_size_outliers(t_sender.library_size[idx]) | _library_size_outliers(
            t_receiver.library_size[idx]
        )
        if not bad.any():
            break
        keep[idx[bad]] = False

    excluded = [d for d, k in zip(t_sender.donors, keep, strict=True) if not k]
    if excluded:
        logger.warning(f"Excluded {len(excluded)} donors by library size: {', '.join(excluded[:10])}")
    return keep


def normalize_library_size(t: ExpressionTable) -> ExpressionTable:
    """Scale each donor to the cell type's median library size."""
    if np.any(t.library_size <= 0):
        raise DataValidationError("Cannot normalize donors with zero library size")
    factor = np.median(t.library_size) / t.library_size
    return ExpressionTable(t.donors, t.genes, t.values * factor[:, None], t.library_size)


def prepare_tables(tables: LoadedTables) -> LoadedTables:
    """Filter donors by library size, then normalize both expression tables."""
    kept = tables.take(filter_donors(tables.sender, tables.receiver))
    return LoadedTables(
        sender=normalize_library_size(kept.sender),
        receiver=normalize_library_size(kept.receiver),
        genotypes=kept.genotypes,
        covariates=kept.covariates,
        covariate_names=kept.covariate_names,
        dropped=kept.dropped,
    )


# -- instruments ------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InstrumentSelection:
    """Selected cis-SNPs for one gene, strongest first."""

    gene: str
    snps: tuple[str, ...]
    t_statistics: np.ndarray
    dosages: np.ndarray


@dataclass(frozen=True)
class NoValidInstruments:
    """No usable cis-SNP for a gene; the triplet is excluded."""

    gene: str
    reason: str


def _residualizer(covariates: np.ndarray) -> np.ndarray:
    base = np.column_stack([np.ones(covariates.shape[0]), covariates])
    Q, _ = scl.qr(base, mode="economic")
    return Q


def cis_window(genotypes: GenotypeMatrix, locus: GeneLocus, window_bp: int) -> list[int]:
    """Column indices of SNPs within ``window_bp`` of the promoter (same chromosome when known).

    Raises:
        DataValidationError: If any genotyped SNP lacks position metadata.
    """
    missing = [s for s in genotypes.snps if s not in genotypes.positions.index]
    if missing:
        raise DataValidationError(f"Missing position metadata for SNPs: {', '.join(missing[:10])}")
    meta = genotypes.positions.loc[list(genotypes.snps)]
    in_window = (meta["position"] - locus.promoter).abs().to_numpy() <= window_bp
    if locus.chrom is not None and meta["chrom"].notna().all():
        in_window &= (meta["chrom"].astype(str) == locus.chrom).to_numpy()
    return [int(i) for i in np.flatnonzero(in_window)]


def select_instruments(
    genotypes: GenotypeMatrix,
    gene: str,
    locus: GeneLocus,
    expression: np.ndarray,
    covariates: np.ndarray,
    window_bp: int = 200_000,
    max_instruments: int = 10,
) -> InstrumentSelection | NoValidInstruments:
    """Pick the top cis-SNPs for ``gene`` by |t| of expression on dosage, adjusted for covariates."""
    window = cis_window(genotypes, locus, window_bp)
    if not window:
        return NoValidInstruments(gene, f"no SNPs within {window_bp} bp of the {gene} promoter")

    Q = _residualizer(covariates)
    dosage = genotypes.dosages[:, window]
    g = dosage - Q @ (Q.T @ dosage)
    e = expression - Q @ (Q.T @ expression)
    ss = np.einsum("ij,ij->j", g, g)
    usable = ss > 1e-12 * np.maximum(1.0, np.einsum("ij,ij->j", dosage, dosage))
    if not usable.any():
        return NoValidInstruments(gene, f"all cis-SNPs of {gene} are monomorphic after covariate adjustment")
    df = len(expression) - Q.shape[1] - 1
    if df < 1:
        raise DataValidationError(f"Too few donors ({len(expression)}) to test instruments for {gene}")

    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(usable, g.T @ e / np.where(usable, ss, 1.0), 0.0)
        rss = np.maximum(e @ e - slope**2 * ss, 0.0)
        t = np.where(usable, slope / np.sqrt(rss / df / np.where(usable, ss, 1.0)), 0.0)
    t = np.where(usable & np.isnan(t), 0.0, t)

    candidates = np.flatnonzero(usable)
    order = candidates[np.argsort(-np.abs(t[candidates]), kind="stable")][:max_instruments]
    snps = tuple(genotypes.snps[window[i]] for i in order)
    logger.debug(f"{gene}: {len(window)} cis-SNPs, selected {', '.join(snps)}")
    return InstrumentSelection(gene=gene, snps=snps, t_statistics=t[order], dosages=dosage[:, order])


# -- pathway activity -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathwayActivity:
    """Chosen per-donor pathway score and the evidence behind the choice."""

    values: np.ndarray
    representation: Literal["pc1", "mean"]
    association_pc1: float
    association_mean: float
    explained_variance: float
    genes_used: tuple[str, ...]


def _association(a: np.ndarray, b: np.ndarray, statistic: str) -> float:
    fn = stats.spearmanr if statistic == "spearman" else stats.pearsonr
    return float(fn(a, b)[0])


def pathway_activity(
    receiver: ExpressionTable,
    genes: list[str] | tuple[str, ...],
    ligand: np.ndarray,
    association: Literal["pearson", "spearman"] = "pearson",
) -> PathwayActivity:
    """Summarize a pathway gene set per donor.

    Computes PC1 of the column-standardized pathway submatrix (sign aligned
    with the mean representation) and the per-donor mean of standardized
    genes, then keeps whichever has the larger absolute association with the
    ligand. Ties keep the mean.

    Raises:
        DataValidationError: No pathway gene present, zero-variance submatrix, or a constant ligand.
    """
    present = [gene for gene in genes if gene in receiver.genes]
    if len(present) < len(genes):
        logger.warning(f"Pathway genes absent from receiver table: {sorted(set(genes) - set(present))}")
    if not present:
        raise DataValidationError("No pathway gene present in the receiver table")

    M = receiver.values[:, [receiver.genes.index(gene) for gene in present]]
    sd = M.std(axis=0, ddof=1)
    varying = sd > 0
    if not varying.any():
        raise DataValidationError("Pathway submatrix has zero variance")
    if not varying.all():
        dropped = [g for g, v in zip(present, varying, strict=True) if not v]
        logger.warning(f"Dropping zero-variance pathway genes: {dropped}")
    used = tuple(g for g, v in zip(present, varying, strict=True) if v)
    S = (M[:, varying] - M[:, varying].mean(axis=0)) / sd[varying]

    mean_rep = S.mean(axis=1)
    U, s, _ = np.linalg.svd(S, full_matrices=False)
    pc1 = U[:, 0] * s[0]
    if float(pc1 @ mean_rep) < 0:
        pc1 = -pc1
    explained = float(s[0] ** 2 / np.sum(s**2))

    if not np.std(ligand) > 0:
        raise DataValidationError("Ligand expression is constant across donors")
    r_pc1 = _association(pc1, ligand, association)
    r_mean = _association(mean_rep, ligand, association) if np.std(mean_rep) > 0 else 0.0
    choose_pc1 = abs(r_pc1) > abs(r_mean)
    logger.debug(f"Pathway: |r_pc1|={abs(r_pc1):.3f}, |r_mean|={abs(r_mean):.3f}, PC1 explains {explained:.1%}")
    return PathwayActivity(
        values=pc1 if choose_pc1 else mean_rep,
        representation="pc1" if choose_pc1 else "mean",
        association_pc1=r_pc1,
        association_mean=r_mean,
        explained_variance=explained,
        genes_used=used,
    )


# -- screening --------------------------------------------------------------------------------


@dataclass(frozen=True)
class TripletSpec:
    """One triplet to screen, with the table paths it reads."""

    ligand: str
    receptor: str
    pathway_id: str
    pathway_genes: tuple[str, ...]
    sender: Path
    receiver: Path
    genotypes: Path
    covariate_columns: tuple[str, ...] = ()

    @property
    def triplet_id(self) -> str:
        return f"{self.ligand}|{self.receptor}|{self.pathway_id}"

    @property
    def tables_key(self) -> tuple[Path, Path, Path]:
        return (self.sender, self.receiver, self.genotypes)


def triplet_specs(manifest: Manifest) -> list[TripletSpec]:
    """Expand manifest entries, filling table paths from the manifest defaults."""
    return [
        TripletSpec(
            ligand=t.ligand,
            receptor=t.receptor,
            pathway_id=t.pathway_id,
            pathway_genes=tuple(t.pathway_genes),
            sender=t.sender or manifest.sender,
            receiver=t.receiver or manifest.receiver,
            genotypes=t.genotypes or manifest.genotypes,
            covariate_columns=tuple(manifest.covariate_columns),
        )
        for t in manifest.triplets
    ]


SCREEN_COLUMNS = (
    "triplet_id",
    "ligand",
    "receptor",
    "pathway_id",
    "status",
    "reason",
    "n_donors",
    "n_instruments_ligand",
    "n_instruments_receptor",
    "representation",
    "pip",
    "beta_X",
    "beta_XZ",
    "beta_Z",
    "beta_X_std",
    "beta_XZ_std",
    "sign_reversal_z",
)


@dataclass(frozen=True, eq=False)
class ScreenResult:
    """MR-CCC fit of one triplet."""

    spec: TripletSpec
    n_donors: int
    posterior: PosteriorSummary
    effects: EffectSummary
    threshold: SignReversal
    n_instruments_ligand: int
    n_instruments_receptor: int
    representation: str
    seed: int

    @property
    def triplet_id(self) -> str:
        return self.spec.triplet_id

    def as_row(self) -> dict[str, object]:
        return {
            "triplet_id": self.triplet_id,
            "ligand": self.spec.ligand,
            "receptor": self.spec.receptor,
            "pathway_id": self.spec.pathway_id,
            "status": "ok",
            "reason": "",
            "n_donors": self.n_donors,
            "n_instruments_ligand": self.n_instruments_ligand,
            "n_instruments_receptor": self.n_instruments_receptor,
            "representation": self.representation,
            "pip": self.posterior.pip,
            "beta_X": self.posterior.mean_beta_X,
            "beta_XZ": self.posterior.mean_beta_XZ,
            "beta_Z": self.posterior.mean_beta_Z,
            "beta_X_std": self.effects.beta_X_std,
            "beta_XZ_std": self.effects.beta_XZ_std,
            "sign_reversal_z": self.threshold.z_star if isinstance(self.threshold, Threshold) else None,
        }


@dataclass(frozen=True)
class ExcludedTriplet:
    """A triplet that was not fitted: ``status`` is ``excluded`` (data rule) or ``failed`` (error)."""

    spec: TripletSpec
    reason: str
    status: Literal["excluded", "failed"] = "excluded"

    @property
    def triplet_id(self) -> str:
        return self.spec.triplet_id

    def as_row(self) -> dict[str, object]:
        row: dict[str, object] = dict.fromkeys(SCREEN_COLUMNS)
        row.update(
            triplet_id=self.triplet_id,
            ligand=self.spec.ligand,
            receptor=self.spec.receptor,
            pathway_id=self.spec.pathway_id,
            status=self.status,
            reason=self.reason,
        )
        return row


def triplet_seed(master_seed: int, ligand: str, receptor: str, pathway_id: str) -> int:
    """64-bit chain seed determined by the master seed and the triplet identity."""
    h = hashlib.blake2b(digest_size=8)
    for part in (str(master_seed), ligand, receptor, pathway_id):
        h.update(part.encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def screen_triplet(
    spec: TripletSpec,
    tables: LoadedTables,
    loci: dict[str, GeneLocus],
    settings: ScreenSettings | None = None,
    master_seed: int = 0,
) -> ScreenResult | ExcludedTriplet:
    """Assemble the triplet's dataset from prepared tables and run one MR-CCC chain.

    Raises:
        TripletError: Wrapping any component failure, tagged with the triplet id.
    """
    settings = settings or ScreenSettings()
    try:
        if spec.ligand not in tables.sender.genes:
            return ExcludedTriplet(spec, f"ligand {spec.ligand} not in sender table")
        if spec.receptor not in tables.receiver.genes:
            return ExcludedTriplet(spec, f"receptor {spec.receptor} not in receiver table")
        if not any(g in tables.receiver.genes for g in spec.pathway_genes):
            return ExcludedTriplet(spec, f"no gene of pathway {spec.pathway_id} in receiver table")

        x = tables.sender.column(spec.ligand)
        z = tables.receiver.column(spec.receptor)
        V = tables.covariates
        selections = [
            select_instruments(
                tables.genotypes, gene, loci[gene], expr, V, settings.window_bp, settings.max_instruments
            )
            for gene, expr in ((spec.ligand, x), (spec.receptor, z))
        ]
        for sel in selections:
            if isinstance(sel, NoValidInstruments):
                logger.warning(f"Excluding {spec.triplet_id}: {sel.reason}")
                return ExcludedTriplet(spec, sel.reason)
        ligand_iv, receptor_iv = selections
        assert isinstance(ligand_iv, InstrumentSelection) and isinstance(receptor_iv, InstrumentSelection)

        pathway = pathway_activity(tables.receiver, spec.pathway_genes, x, settings.association)
        dataset, _ = center_dataset(
            Dataset(G=ligand_iv.dosages, H=receptor_iv.dosages, V=V, x=x, z=z, y=pathway.values)
        )
        seed = triplet_seed(master_seed, spec.ligand, spec.receptor, spec.pathway_id)
        posterior = run_chain(dataset, settings.hyperparams, settings.mcmc.model_copy(update={"seed": seed}))
        effects = standardize_effects(
            posterior.mean_beta_X, posterior.mean_beta_Z, posterior.mean_beta_XZ, x, z, pathway.values
        )
    except MrcccError as e:
        raise TripletError(spec.triplet_id, e) from e

    logger.info(f"Screened {spec.triplet_id}: PIP={posterior.pip:.3f}, n={dataset.n}")
    return ScreenResult(
        spec=spec,
        n_donors=dataset.n,
        posterior=posterior,
        effects=effects,
        threshold=sign_reversal_threshold(effects),
        n_instruments_ligand=len(ligand_iv.snps),
        n_instruments_receptor=len(receptor_iv.snps),
        representation=pathway.representation,
        seed=seed,
    )


def _screen_unit(
    args: tuple[TripletSpec, LoadedTables, dict[str, GeneLocus], ScreenSettings, int],
) -> ScreenResult | ExcludedTriplet:
    spec = args[0]
    try:
        return screen_triplet(*args)
    except (TripletError, ArithmeticError, ValueError) as e:
        logger.error(f"Screening failed for {spec.triplet_id}: {e}")
        return ExcludedTriplet(spec, str(e), status="failed")


def screen_manifest(
    manifest: Manifest,
    settings: ScreenSettings | None = None,
    jobs: int = 1,
) -> list[ScreenResult | ExcludedTriplet]:
    """Screen every manifest triplet; results are sorted by triplet id.

    Each distinct (sender, receiver, genotypes) table set is loaded, filtered
    and normalized once. Per-triplet seeds depend only on the triplet identity,
    so the output does not depend on manifest order or ``jobs``.
    """
    settings = settings or ScreenSettings()
    specs = triplet_specs(manifest)
    prepared: dict[tuple[Path, Path, Path], LoadedTables] = {}
    for spec in specs:
        if spec.tables_key not in prepared:
            loaded = load_tables(manifest, *spec.tables_key)
            prepared[spec.tables_key] = prepare_tables(loaded)

    units = [(spec, prepared[spec.tables_key], manifest.genes, settings, manifest.master_seed) for spec in specs]
    logger.info(f"Screening {len(units)} triplets with jobs={jobs}")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_screen_unit, units))
    else:
        results = [_screen_unit(u) for u in units]
    return sorted(results, key=lambda r: r.triplet_id)
