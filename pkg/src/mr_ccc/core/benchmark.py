"""Simulation benchmark: per-replicate fits over a scenario x n x method grid, aggregated into cells."""

from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from .baselines import fitters
from .config import Hyperparams, McmcSettings, MrbmaOptions, SimConfig
from .errors import DataValidationError, MrcccError
from .simulator import chain_seed, dataset_digest, fixed_params, generate_dataset
from .types import Method, MethodResult, Scenario, StructuralParams

BENCH_COLUMNS = (
    "scenario",
    "n",
    "method",
    "score_mean",
    "score_sd",
    "rejection_rate",
    "bias_bx",
    "mad_bx",
    "bias_bxz",
    "mad_bxz",
    "replicates",
    "failures",
)

# Failures a fit may raise that should be counted rather than abort the grid
_RECOVERABLE = (MrcccError, ArithmeticError, ValueError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class BenchCell:
    """Aggregated results of one method on one (scenario, n) setting.

    ``score_sd`` is the sample SD across replicates (denominator R - 1) and is
    0 with ``single_replicate`` set when only one replicate succeeded.
    Interaction fields are None for methods that do not estimate beta_XZ.
    """

    scenario: Scenario | None
    n: int | None
    method: Method
    score_mean: float
    score_sd: float
    rejection_rate: float
    bias_beta_X: float
    mad_beta_X: float
    bias_beta_XZ: float | None
    mad_beta_XZ: float | None
    replicates: int
    failures: int = 0

    @property
    def single_replicate(self) -> bool:
        return self.replicates == 1

    def as_row(self) -> dict[str, object]:
        """Flatten into the benchmark CSV column order."""
        return dict(
            zip(
                BENCH_COLUMNS,
                (
                    self.scenario.value if self.scenario else "",
                    self.n,
                    self.method.value,
                    self.score_mean,
                    self.score_sd,
                    self.rejection_rate,
                    self.bias_beta_X,
                    self.mad_beta_X,
                    self.bias_beta_XZ,
                    self.mad_beta_XZ,
                    self.replicates,
                    self.failures,
                ),
                strict=True,
            )
        )


def _bias_and_mad(estimates: np.ndarray, truth: float) -> tuple[float, float]:
    dev = estimates - truth
    bias = float(dev.mean())
    # |mean| <= mean|.| holds exactly; clamp away last-bit rounding
    return bias, max(float(np.abs(dev).mean()), abs(bias))


def summarize_cell(
    results: Sequence[MethodResult],
    truth: StructuralParams,
    scenario: Scenario | None = None,
    n: int | None = None,
    failures: int = 0,
) -> BenchCell:
    """Reduce per-replicate results of one method to a benchmark cell.

    Raises:
        DataValidationError: If ``results`` is empty or mixes methods.
    """
    if not results:
        raise DataValidationError("Cannot summarize an empty set of results")
    methods = {r.method for r in results}
    if len(methods) != 1:
        raise DataValidationError(f"Results mix methods: {sorted(m.value for m in methods)}")
    method = methods.pop()

    scores = np.array([r.score for r in results])
    bias_x, mad_x = _bias_and_mad(np.array([r.beta_X_hat for r in results]), truth.beta_X)
    bias_xz = mad_xz = None
    if method.estimates_interaction:
        bias_xz, mad_xz = _bias_and_mad(np.array([r.beta_XZ_hat for r in results], dtype=float), truth.beta_XZ)

    return BenchCell(
        scenario=scenario,
        n=n,
        method=method,
        score_mean=float(scores.mean()),
        score_sd=float(scores.std(ddof=1)) if len(scores) > 1 else 0.0,
        rejection_rate=float(np.mean([r.decision for r in results])),
        bias_beta_X=bias_x,
        mad_beta_X=mad_x,
        bias_beta_XZ=bias_xz,
        mad_beta_XZ=mad_xz,
        replicates=len(results),
        failures=failures,
    )


@dataclass(frozen=True)
class BenchSettings:
    """Options shared by every work unit of a grid run."""

    master_seed: int = 0
    mode: str = "benchmark"
    hyper: Hyperparams = field(default_factory=Hyperparams)
    mcmc: McmcSettings = field(default_factory=McmcSettings.benchmark)
    mrbma: MrbmaOptions = field(default_factory=MrbmaOptions)


@dataclass(frozen=True)
class ReplicateOutcome:
    """All method fits on one simulated replicate. Failed fits hold the error message."""

    scenario: Scenario
    n: int
    replicate_index: int
    digest: str
    results: dict[Method, MethodResult | str]


def run_replicate(
    scenario: Scenario,
    n: int,
    replicate_index: int,
    methods: Sequence[Method],
    settings: BenchSettings,
) -> ReplicateOutcome:
    """Simulate one replicate and fit every method on that same dataset."""
    cfg = SimConfig(
        scenario=scenario,
        n=n,
        replicate_index=replicate_index,
        master_seed=settings.master_seed,
        mode=settings.mode,  # type: ignore[arg-type]
    )
    dataset = generate_dataset(cfg).dataset
    mcmc = settings.mcmc.model_copy(update={"seed": chain_seed(settings.master_seed, scenario, n, replicate_index)})
    fit = fitters(settings.hyper, mcmc, settings.mrbma)

    results: dict[Method, MethodResult | str] = {}
    for method in methods:
        try:
            results[method] = fit[method](dataset)
        except _RECOVERABLE as e:
            logger.warning(f"{method.value} failed on {scenario.value} n={n} replicate {replicate_index}: {e}")
            results[method] = str(e)
    return ReplicateOutcome(scenario, n, replicate_index, dataset_digest(dataset), results)


def _run_unit(args: tuple[Scenario, int, int, tuple[Method, ...], BenchSettings]) -> ReplicateOutcome:
    return run_replicate(*args)


def run_grid(
    scenarios: Iterable[Scenario | str],
    ns: Iterable[int],
    methods: Iterable[Method | str],
    replicates: int = 20,
    master_seed: int = 0,
    jobs: int = 1,
    settings: BenchSettings | None = None,
) -> list[BenchCell]:
    """Run the benchmark grid and aggregate one cell per (scenario, n, method).

    Each (scenario, n, replicate) is one work unit: the dataset is simulated
    once and shared by all methods. Cells come back in grid order regardless
    of completion order.

    Args:
        scenarios: Scenario ids.
        ns: Sample sizes.
        methods: Methods to compare.
        replicates: Replicates per (scenario, n).
        master_seed: Seed of every replicate and chain.
        jobs: Worker processes; 1 runs in-process.
        settings: Mode, priors and chain settings; ``master_seed`` overrides its seed.

    Returns:
        Benchmark cells; cells where every replicate failed carry NaN statistics.
    """
    scenario_list = [Scenario(s) for s in scenarios]
    n_list = list(ns)
    method_list = tuple(Method(m) for m in methods)
    if replicates < 1:
        raise DataValidationError(f"replicates must be >= 1, got {replicates}")
    base = settings or BenchSettings()
    settings = BenchSettings(
        master_seed=master_seed, mode=base.mode, hyper=base.hyper, mcmc=base.mcmc, mrbma=base.mrbma
    )

    units = [(s, n, r, method_list, settings) for s in scenario_list for n in n_list for r in range(replicates)]
    logger.info(
        f"Benchmark grid: {len(scenario_list)} scenarios x {len(n_list)} sizes x {len(method_list)} methods, "
        f"{replicates} replicates, {len(units)} work units, jobs={jobs}"
    )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_unit, units))
    else:
        outcomes = [_run_unit(u) for u in units]

    by_key: dict[tuple[Scenario, int], list[ReplicateOutcome]] = {}
    for outcome in outcomes:
        by_key.setdefault((outcome.scenario, outcome.n), []).append(outcome)

    cells = []
    for s in scenario_list:
        truth = fixed_params(s)
        for n in n_list:
            group = sorted(by_key[(s, n)], key=lambda o: o.replicate_index)
            for method in method_list:
                fitted = [o.results[method] for o in group]
                ok = [r for r in fitted if isinstance(r, MethodResult)]
                failures = len(fitted) - len(ok)
                cell = summarize_cell(ok, truth, s, n, failures) if ok else failed_cell(s, n, method, failures)
                cells.append(cell)
                logger.info(
                    f"{s.value} n={n} {method.value}: score={cell.score_mean:.3f} "
                    f"rejection={cell.rejection_rate:.3f} failures={failures}"
                )
    return cells


def failed_cell(scenario: Scenario, n: int, method: Method, failures: int) -> BenchCell:
    """Placeholder cell for a (scenario, n, method) with no successful replicate."""
    nan = float("nan")
    interaction = nan if method.estimates_interaction else None
    return BenchCell(
        scenario=scenario,
        n=n,
        method=method,
        score_mean=nan,
        score_sd=nan,
        rejection_rate=nan,
        bias_beta_X=nan,
        mad_beta_X=nan,
        bias_beta_XZ=interaction,
        mad_beta_XZ=interaction,
        replicates=0,
        failures=failures,
    )
