"""Competing estimators and the MR-CCC adapter, all returning a MethodResult."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg as scl
from loguru import logger
from scipy import stats
from scipy.special import logsumexp

from .config import Hyperparams, McmcSettings, MrbmaOptions
from .errors import DataValidationError
from .gibbs import PosteriorSummary, run_chain
from .linalg import ols
from .model import center_dataset
from .types import Dataset, Method, MethodResult, decide


def _covariate_names(d: Dataset) -> list[str]:
    return [f"v{j + 1}" for j in range(d.p_V)]


def _frequentist_result(method: Method, p_value: float, beta_X: float, beta_XZ: float | None, **extras: float):
    p = float(np.clip(p_value, 0.0, 1.0))
    return MethodResult(
        method=method,
        score=1.0 - p,
        decision=decide(method, 1.0 - p, p),
        beta_X_hat=float(beta_X),
        beta_XZ_hat=None if beta_XZ is None else float(beta_XZ),
        extras={"p_value": p, **{k: float(v) for k, v in extras.items()}},
    )


def fit_ols(d: Dataset) -> MethodResult:
    """Naive regression of y on [1, x, z, x*z, V] with a joint F-test of beta_X = beta_XZ = 0.

    Raises:
        RankDeficiencyError: Naming the collinear design columns.
    """
    names = ["intercept", "x", "z", "xz", *_covariate_names(d)]
    design = np.column_stack([np.ones(d.n), d.x, d.z, d.x * d.z, d.V])
    fit = ols(design, d.y, names)

    C = np.zeros((2, len(names)))
    C[0, fit.index("x")] = 1.0
    C[1, fit.index("xz")] = 1.0
    contrast = C @ fit.coef
    if fit.rss == 0.0:
        F = np.inf
    else:
        F = 0.5 * float(contrast @ scl.solve(C @ fit.cov @ C.T, contrast, assume_a="pos"))
    p_value = float(stats.f.sf(F, 2, fit.df_resid))

    logger.debug(f"OLS: F={F:.4g}, p={p_value:.4g}, df=(2, {fit.df_resid})")
    return _frequentist_result(
        Method.OLS,
        p_value,
        fit.coef[fit.index("x")],
        fit.coef[fit.index("xz")],
        f_statistic=F,
        beta_Z_hat=fit.coef[fit.index("z")],
    )


def fit_mvmr(d: Dataset) -> MethodResult:
    """Two-stage multivariable MR with a t-test of beta_X = 0.

    Stage 1 regresses x and z on [1, G, H, V]; stage 2 regresses y on
    [1, x_hat, z_hat, V] with conventional OLS standard errors.
    """
    stage1_names = (
        ["intercept"] + [f"g{j + 1}" for j in range(d.p_G)] + [f"h{j + 1}" for j in range(d.p_H)] + _covariate_names(d)
    )
    stage1 = np.column_stack([np.ones(d.n), d.G, d.H, d.V])
    x_hat = stage1 @ ols(stage1, d.x, stage1_names).coef
    z_hat = stage1 @ ols(stage1, d.z, stage1_names).coef

    names = ["intercept", "x_hat", "z_hat", *_covariate_names(d)]
    fit = ols(np.column_stack([np.ones(d.n), x_hat, z_hat, d.V]), d.y, names)
    j = fit.index("x_hat")
    se = fit.se[j]
    t_stat = fit.coef[j] / se if se > 0 else np.inf
    p_value = float(2.0 * stats.t.sf(abs(t_stat), fit.df_resid))

    logger.debug(f"MVMR: beta_X={fit.coef[j]:.4f}, t={t_stat:.4g}, p={p_value:.4g}")
    return _frequentist_result(Method.MVMR, p_value, fit.coef[j], None, t_statistic=t_stat)


@dataclass(frozen=True, eq=False)
class SummaryStatistics:
    """Per-instrument marginal associations: one row per instrument."""

    beta_X: np.ndarray
    beta_Z: np.ndarray
    beta_Y: np.ndarray
    se_X: np.ndarray
    se_Z: np.ndarray
    se_Y: np.ndarray

    @property
    def n_instruments(self) -> int:
        return int(self.beta_Y.shape[0])


def summary_statistics(d: Dataset, adjust_covariates: bool = False) -> SummaryStatistics:
    """Regress x, z and y on each instrument alone (with intercept, optionally V).

    Covariate adjustment uses Frisch-Waugh-Lovell residualization so every
    instrument is handled in one vectorized pass.
    """
    base = np.column_stack([np.ones(d.n), d.V]) if adjust_covariates else np.ones((d.n, 1))
    Q, _ = scl.qr(base, mode="economic")

    def residualize(a: np.ndarray) -> np.ndarray:
        return a - Q @ (Q.T @ a)

    instruments = residualize(np.column_stack([d.G, d.H]))
    ss = np.einsum("ij,ij->j", instruments, instruments)
    if np.any(ss <= 0):
        raise DataValidationError("An instrument has zero variance after adjustment")
    df = d.n - base.shape[1] - 1
    if df < 1:
        raise DataValidationError(f"Too few donors ({d.n}) for per-instrument regressions")

    def marginal(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        r = residualize(v)
        slope = instruments.T @ r / ss
        rss = np.maximum(r @ r - slope**2 * ss, 0.0)
        return slope, np.sqrt(rss / df / ss)

    (bx, sx), (bz, sz), (by, sy) = marginal(d.x), marginal(d.z), marginal(d.y)
    return SummaryStatistics(beta_X=bx, beta_Z=bz, beta_Y=by, se_X=sx, se_Z=sz, se_Y=sy)


# Exposure-inclusion models over (X, Z) in a fixed order
MRBMA_MODELS: tuple[tuple[str, ...], ...] = ((), ("X",), ("Z",), ("X", "Z"))


def mrbma_log_bayes_factors(
    stats_: SummaryStatistics, g: float, weighted: bool = True
) -> tuple[np.ndarray, dict[tuple[str, ...], np.ndarray]]:
    """Zellner g-prior log Bayes factors of each exposure model against the null.

    Each model regresses beta_Y on the included exposure-association columns
    through the origin, with residual variance profiled out:
    ``log BF = (J - k)/2 log(1 + g) - J/2 log(1 + g (1 - R^2))`` with uncentered R^2.

    Returns:
        Log Bayes factors in :data:`MRBMA_MODELS` order and each model's
        least-squares coefficients.
    """
    J = stats_.n_instruments
    if weighted:
        if np.any(stats_.se_Y <= 0):
            raise DataValidationError("Outcome association has zero standard error; cannot weight")
        w = 1.0 / stats_.se_Y
    else:
        w = np.ones(J)
    columns = {"X": stats_.beta_X * w, "Z": stats_.beta_Z * w}
    for name, col in columns.items():
        if not np.linalg.norm(col) > 0:
            raise DataValidationError(f"Summary column beta_{name} has zero variance")
    b = stats_.beta_Y * w
    tss = float(b @ b)

    log_bf = np.zeros(len(MRBMA_MODELS))
    coefs: dict[tuple[str, ...], np.ndarray] = {(): np.zeros(0)}
    for m, model in enumerate(MRBMA_MODELS):
        if not model:
            continue
        B = np.column_stack([columns[name] for name in model])
        coef, *_ = scl.lstsq(B, b)
        coefs[model] = coef
        if tss == 0.0:
            continue
        resid = b - B @ coef
        r2 = 1.0 - float(resid @ resid) / tss
        k = len(model)
        log_bf[m] = 0.5 * (J - k) * np.log1p(g) - 0.5 * J * np.log1p(g * (1.0 - r2))
    return log_bf, coefs


def fit_mrbma(d: Dataset, options: MrbmaOptions | None = None) -> MethodResult:
    """Summary-statistic Bayesian model averaging over the four exposure models.

    Score is the marginal inclusion probability of X under a uniform model prior.

    Raises:
        DataValidationError: Fewer than 2 instruments, or a zero-variance summary column.
    """
    options = options or MrbmaOptions()
    J = d.p_G + d.p_H
    if J < 2:
        raise DataValidationError(f"MR-BMA needs at least 2 instruments, got {J}")

    summary = summary_statistics(d, adjust_covariates=options.summary_covariates)
    g = options.prior_scale(J)
    log_bf, coefs = mrbma_log_bayes_factors(summary, g, weighted=options.weighted)
    probs = np.exp(log_bf - logsumexp(log_bf))

    shrink = g / (1.0 + g)
    mip = {"X": 0.0, "Z": 0.0}
    mace = {"X": 0.0, "Z": 0.0}
    for p, model in zip(probs, MRBMA_MODELS, strict=True):
        for pos, name in enumerate(model):
            mip[name] += p
            mace[name] += p * shrink * coefs[model][pos]

    score = float(np.clip(mip["X"], 0.0, 1.0))
    logger.debug(f"MR-BMA: g={g:g}, model probabilities={probs.round(4)}, MIP_X={score:.4f}")
    return MethodResult(
        method=Method.MRBMA,
        score=score,
        decision=decide(Method.MRBMA, score),
        beta_X_hat=float(mace["X"]),
        extras={
            "mip_x": score,
            "mip_z": float(mip["Z"]),
            "mace_x": float(mace["X"]),
            "mace_z": float(mace["Z"]),
            "prior_g": g,
            **{f"pp_{''.join(m).lower() or 'null'}": float(p) for m, p in zip(MRBMA_MODELS, probs, strict=True)},
        },
    )


def posterior_to_result(summary: PosteriorSummary) -> MethodResult:
    """Wrap a chain summary on the common MethodResult contract."""
    pip = float(np.clip(summary.pip, 0.0, 1.0))
    return MethodResult(
        method=Method.MRCCC,
        score=pip,
        decision=decide(Method.MRCCC, pip),
        beta_X_hat=summary.mean_beta_X,
        beta_XZ_hat=summary.mean_beta_XZ,
        extras={"pip": pip, "beta_Z_hat": summary.mean_beta_Z, "n_kept": float(summary.n_kept)},
    )


def fit_mrccc(
    d: Dataset,
    hyper: Hyperparams | None = None,
    mcmc: McmcSettings | None = None,
) -> MethodResult:
    """Center ``d``, run one MR-CCC chain and report the PIP as the score."""
    centered, _ = center_dataset(d)
    summary = run_chain(centered, hyper or Hyperparams(), mcmc or McmcSettings.benchmark())
    return posterior_to_result(summary)


Fitter = Callable[[Dataset], MethodResult]


def fitters(
    hyper: Hyperparams | None = None,
    mcmc: McmcSettings | None = None,
    mrbma: MrbmaOptions | None = None,
) -> dict[Method, Fitter]:
    """Bind per-method options into single-argument fit functions."""
    return {
        Method.OLS: fit_ols,
        Method.MVMR: fit_mvmr,
        Method.MRBMA: lambda d: fit_mrbma(d, mrbma),
        Method.MRCCC: lambda d: fit_mrccc(d, hyper, mcmc),
    }


def fit_method(
    method: Method,
    d: Dataset,
    hyper: Hyperparams | None = None,
    mcmc: McmcSettings | None = None,
    mrbma: MrbmaOptions | None = None,
) -> MethodResult:
    """Fit a single method by enum."""
    return fitters(hyper, mcmc, mrbma)[method](d)


__all__ = [
    "MRBMA_MODELS",
    "SummaryStatistics",
    "fit_method",
    "fit_mrbma",
    "fit_mrccc",
    "fit_mvmr",
    "fit_ols",
    "fitters",
    "mrbma_log_bayes_factors",
    "posterior_to_result",
    "summary_statistics",
]
