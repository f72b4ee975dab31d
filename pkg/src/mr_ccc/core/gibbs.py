"""MR-CCC posterior sampler.

Systematic-scan Gibbs sampler over the working model

    y = mu + beta_X X* + beta_Z Z* + beta_XZ X* Z* + V alpha_Y + eps_Y,

with X* = G pi_X + V alpha_X and Z* = H pi_Z + V alpha_Z learned jointly from
the exposure equations, Zellner g-priors on every regression block and a
spike-and-slab prior on beta = (beta_X, beta_XZ) indexed by gamma.

One sweep runs steps 1-13 in order:

    1-3   ligand exposure block     (pi_X, alpha_X, sigma2_X)
    4-6   receptor exposure block   (pi_Z, alpha_Z, sigma2_Z)
          plug-in recomputation     (X*, Z*, X_beta)
    7-10  outcome nuisance block    (mu, alpha_Y, beta_Z, sigma2_Y)
    11-13 communication block       (beta, gamma, rho)

Every Gram matrix is inverted with a ridge ``hyper.ridge_lambda`` added.
Each ``*_conditional`` function returns the exact full-conditional
parameters so they can be checked independently of the random draws.
"""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from loguru import logger

from .config import Hyperparams, McmcSettings
from .errors import ConfigurationError, SamplerError
from .linalg import draw_gaussian, draw_inverse_gamma, ridge_solve
from .types import Dataset


class Side(Enum):
    """Which exposure equation an update targets."""

    LIGAND = "ligand"
    RECEPTOR = "receptor"


@dataclass(frozen=True, eq=False)
class ChainState:
    """Current value of every sampled quantity plus the derived plug-in designs."""

    pi_X: np.ndarray
    alpha_X: np.ndarray
    sigma2_X: float
    pi_Z: np.ndarray
    alpha_Z: np.ndarray
    sigma2_Z: float
    mu: float
    alpha_Y: np.ndarray
    beta_Z: float
    sigma2_Y: float
    beta: np.ndarray
    gamma: int
    rho: float
    X_star: np.ndarray
    Z_star: np.ndarray
    X_beta: np.ndarray

    def slab_scale(self, hyper: Hyperparams) -> float:
        """s_gamma: 1 under the slab, nu_1 under the spike."""
        return 1.0 if self.gamma == 1 else hyper.nu_1


@dataclass(frozen=True, eq=False)
class GaussianConditional:
    """``N(mean, precision^{-1})``."""

    mean: np.ndarray
    precision: np.ndarray

    @property
    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.precision)


@dataclass(frozen=True)
class InverseGammaConditional:
    """``IG(shape, scale)``."""

    shape: float
    scale: float


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Posterior summaries of one chain, over kept draws (model-averaged)."""

    pip: float
    mean_beta_X: float
    mean_beta_XZ: float
    mean_beta_Z: float
    n_kept: int
    draws: dict[str, np.ndarray] | None = None


TRACE_COLUMNS = ("iteration", "beta_X", "beta_XZ", "beta_Z", "mu", "sigma2_X", "sigma2_Z", "sigma2_Y", "gamma", "rho")


# -- plug-ins ---------------------------------------------------------------------------------


def recompute_plugins(state: ChainState, data: Dataset) -> ChainState:
    """Refresh X* = G pi_X + V alpha_X, Z* = H pi_Z + V alpha_Z and X_beta = [X*, X* o Z*]."""
    X_star = data.G @ state.pi_X + data.V @ state.alpha_X
    Z_star = data.H @ state.pi_Z + data.V @ state.alpha_Z
    return replace(state, X_star=X_star, Z_star=Z_star, X_beta=np.column_stack([X_star, X_star * Z_star]))


def initial_state(data: Dataset, hyper: Hyperparams) -> ChainState:
    """Starting point: g-prior-shrunk least squares for each exposure, beta = 0, gamma = 1."""
    lam = hyper.ridge_lambda

    def shrunk_ls(instruments: np.ndarray, exposure: np.ndarray, g_inst: float) -> tuple[np.ndarray, np.ndarray]:
        W = np.column_stack([instruments, data.V])
        coef = ridge_solve(W.T @ W, lam, W.T @ exposure, step="initialization")
        p = instruments.shape[1]
        c_inst = g_inst / (1.0 + g_inst)
        c_cov = hyper.g("V") / (1.0 + hyper.g("V"))
        return c_inst * coef[:p], c_cov * coef[p:]

    pi_X, alpha_X = shrunk_ls(data.G, data.x, hyper.g("G"))
    pi_Z, alpha_Z = shrunk_ls(data.H, data.z, hyper.g("H"))
    empty = np.zeros(data.n)
    state = ChainState(
        pi_X=pi_X,
        alpha_X=alpha_X,
        sigma2_X=1.0,
        pi_Z=pi_Z,
        alpha_Z=alpha_Z,
        sigma2_Z=1.0,
        mu=0.0,
        alpha_Y=np.zeros(data.p_V),
        beta_Z=0.0,
        sigma2_Y=1.0,
        beta=np.zeros(2),
        gamma=1,
        rho=hyper.a_rho / (hyper.a_rho + hyper.b_rho),
        X_star=empty,
        Z_star=empty,
        X_beta=np.zeros((data.n, 2)),
    )
    return recompute_plugins(state, data)


# -- exposure blocks (steps 1-6) --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _ExposureView:
    """Side-specific arrays so one set of formulas serves both exposure equations."""

    instruments: np.ndarray
    exposure: np.ndarray
    pi: np.ndarray
    alpha: np.ndarray
    sigma2: float
    g_inst: float
    weight: np.ndarray  # w = beta_own + beta_XZ * partner plug-in
    base_residual: np.ndarray  # y - mu - beta_partner * partner - V alpha_Y
    labels: tuple[str, str, str]


def _exposure_view(state: ChainState, data: Dataset, hyper: Hyperparams, side: Side) -> _ExposureView:
    beta_X, beta_XZ = state.beta
    outcome_offset = data.y - state.mu - data.V @ state.alpha_Y
    if side is Side.LIGAND:
        return _ExposureView(
            instruments=data.G,
            exposure=data.x,
            pi=state.pi_X,
            alpha=state.alpha_X,
            sigma2=state.sigma2_X,
            g_inst=hyper.g("G"),
            weight=beta_X + beta_XZ * state.Z_star,
            base_residual=outcome_offset - state.beta_Z * state.Z_star,
            labels=("step 1: pi_X", "step 2: alpha_X", "step 3: sigma2_X"),
        )
    return _ExposureView(
        instruments=data.H,
        exposure=data.z,
        pi=state.pi_Z,
        alpha=state.alpha_Z,
        sigma2=state.sigma2_Z,
        g_inst=hyper.g("H"),
        weight=state.beta_Z + beta_XZ * state.X_star,
        base_residual=outcome_offset - beta_X * state.X_star,
        labels=("step 4: pi_Z", "step 5: alpha_Z", "step 6: sigma2_Z"),
    )


def _regression_block_conditional(
    block: np.ndarray,
    other: np.ndarray,
    view: _ExposureView,
    g_block: float,
    sigma2_Y: float,
    hyper: Hyperparams,
    step: str,
) -> GaussianConditional:
    """Shared form of steps 1, 2, 4 and 5.

    ``block`` is the design whose coefficients are updated (instruments or V) and
    ``other`` is the fitted contribution of the remaining exposure design.
    """
    weighted = block * view.weight[:, None]
    residual = view.base_residual - other * view.weight
    A = (1.0 + 1.0 / g_block) / view.sigma2 * (block.T @ block) + (weighted.T @ weighted) / sigma2_Y
    b = block.T @ (view.exposure - other) / view.sigma2 + weighted.T @ residual / sigma2_Y
    lam = hyper.ridge_lambda
    return GaussianConditional(
        mean=ridge_solve(A, lam, b, step=step),
        precision=A + lam * np.eye(A.shape[0]),
    )


def exposure_pi_conditional(state: ChainState, data: Dataset, hyper: Hyperparams, side: Side) -> GaussianConditional:
    """Full conditional of pi_X (step 1) or pi_Z (step 4)."""
    view = _exposure_view(state, data, hyper, side)
    return _regression_block_conditional(
        view.instruments, data.V @ view.alpha, view, view.g_inst, state.sigma2_Y, hyper, view.labels[0]
    )


def exposure_alpha_conditional(
    state: ChainState, data: Dataset, hyper: Hyperparams, side: Side
) -> GaussianConditional:
    """Full conditional of alpha_X (step 2) or alpha_Z (step 5)."""
    view = _exposure_view(state, data, hyper, side)
    return _regression_block_conditional(
        data.V, view.instruments @ view.pi, view, hyper.g("V"), state.sigma2_Y, hyper, view.labels[1]
    )


def exposure_sigma2_conditional(
    state: ChainState, data: Dataset, hyper: Hyperparams, side: Side
) -> InverseGammaConditional:
    """Full conditional of sigma2_X (step 3) or sigma2_Z (step 6)."""
    view = _exposure_view(state, data, hyper, side)
    fitted_inst = view.instruments @ view.pi
    fitted_cov = data.V @ view.alpha
    resid = view.exposure - fitted_inst - fitted_cov
    quad = resid @ resid + (fitted_inst @ fitted_inst) / view.g_inst
    if data.p_V:
        quad += (fitted_cov @ fitted_cov) / hyper.g("V")
    p_inst = view.instruments.shape[1]
    return InverseGammaConditional(
        shape=hyper.a_sigma + (data.n + p_inst + data.p_V) / 2.0,
        scale=hyper.b_sigma + 0.5 * quad,
    )


def update_exposure_block(
    state: ChainState,
    data: Dataset,
    hyper: Hyperparams,
    side: Side,
    rng: np.random.Generator,
) -> ChainState:
    """Steps 1-3 (ligand) or 4-6 (receptor): draw pi, then alpha, then the error variance."""
    labels = _exposure_view(state, data, hyper, side).labels
    names = ("pi_X", "alpha_X", "sigma2_X") if side is Side.LIGAND else ("pi_Z", "alpha_Z", "sigma2_Z")

    cond = exposure_pi_conditional(state, data, hyper, side)
    state = replace(state, **{names[0]: draw_gaussian(cond.mean, cond.precision, rng, labels[0])})

    if data.p_V:
        cond = exposure_alpha_conditional(state, data, hyper, side)
        state = replace(state, **{names[1]: draw_gaussian(cond.mean, cond.precision, rng, labels[1])})

    ig = exposure_sigma2_conditional(state, data, hyper, side)
    return replace(state, **{names[2]: draw_inverse_gamma(ig.shape, ig.scale, rng, labels[2])})


# -- outcome nuisance block (steps 7-10) ------------------------------------------------------


def _communication_fit(state: ChainState) -> np.ndarray:
    return state.X_beta @ state.beta


def mu_conditional(state: ChainState, data: Dataset) -> GaussianConditional:
    """Step 7: intercept, with prior N(0, n sigma2_Y)."""
    r_mu = data.y - _communication_fit(state) - state.beta_Z * state.Z_star - data.V @ state.alpha_Y
    denom = data.n + 1.0 / data.n
    return GaussianConditional(mean=np.array([r_mu.sum() / denom]), precision=np.array([[denom / state.sigma2_Y]]))


def alpha_y_conditional(state: ChainState, data: Dataset, hyper: Hyperparams) -> GaussianConditional:
    """Step 8: outcome covariate effects, shrunk by c_V = g_V / (1 + g_V)."""
    r_Y = data.y - state.mu - _communication_fit(state) - state.beta_Z * state.Z_star
    c_V = hyper.g("V") / (1.0 + hyper.g("V"))
    VtV = data.V.T @ data.V
    lam = hyper.ridge_lambda
    return GaussianConditional(
        mean=c_V * ridge_solve(VtV, lam, data.V.T @ r_Y, step="step 8: alpha_Y"),
        precision=(VtV + lam * np.eye(data.p_V)) / (c_V * state.sigma2_Y),
    )


def beta_z_conditional(state: ChainState, data: Dataset, hyper: Hyperparams) -> GaussianConditional:
    """Step 9: receptor main effect, with Z*'Z* regularized as Z*'Z* + lambda."""
    r_Z = data.y - state.mu - _communication_fit(state) - data.V @ state.alpha_Y
    c_Z = hyper.g("Z") / (1.0 + hyper.g("Z"))
    ztz = float(state.Z_star @ state.Z_star) + hyper.ridge_lambda
    return GaussianConditional(
        mean=np.array([c_Z * float(state.Z_star @ r_Z) / ztz]),
        precision=np.array([[ztz / (c_Z * state.sigma2_Y)]]),
    )


def sigma2_y_conditional(state: ChainState, data: Dataset, hyper: Hyperparams) -> InverseGammaConditional:
    """Step 10: outcome error variance, including every prior quadratic form."""
    comm = _communication_fit(state)
    cov_fit = data.V @ state.alpha_Y
    e_Y = data.y - state.mu - comm - state.beta_Z * state.Z_star - cov_fit
    quad = (
        e_Y @ e_Y
        + state.mu**2 / data.n
        + (comm @ comm) / (hyper.g("beta") * state.slab_scale(hyper))
        + state.beta_Z**2 * float(state.Z_star @ state.Z_star) / hyper.g("Z")
    )
    if data.p_V:
        quad += (cov_fit @ cov_fit) / hyper.g("V")
    return InverseGammaConditional(
        shape=hyper.a_sigma + (data.n + data.p_V + 4) / 2.0,
        scale=hyper.b_sigma + 0.5 * quad,
    )


def update_outcome_nuisance(
    state: ChainState,
    data: Dataset,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> ChainState:
    """Steps 7-10: draw mu, alpha_Y, beta_Z and sigma2_Y in turn."""
    cond = mu_conditional(state, data)
    state = replace(state, mu=float(draw_gaussian(cond.mean, cond.precision, rng, "step 7: mu")[0]))

    if data.p_V:
        cond = alpha_y_conditional(state, data, hyper)
        state = replace(state, alpha_Y=draw_gaussian(cond.mean, cond.precision, rng, "step 8: alpha_Y"))

    cond = beta_z_conditional(state, data, hyper)
    state = replace(state, beta_Z=float(draw_gaussian(cond.mean, cond.precision, rng, "step 9: beta_Z")[0]))

    ig = sigma2_y_conditional(state, data, hyper)
    return replace(state, sigma2_Y=draw_inverse_gamma(ig.shape, ig.scale, rng, "step 10: sigma2_Y"))


# -- communication block (steps 11-13) --------------------------------------------------------


def beta_conditional(state: ChainState, data: Dataset, hyper: Hyperparams) -> GaussianConditional:
    """Step 11: communication effects under the current slab/spike scale."""
    r_beta = data.y - state.mu - state.beta_Z * state.Z_star - data.V @ state.alpha_Y
    gs = hyper.g("beta") * state.slab_scale(hyper)
    c_gamma = gs / (1.0 + gs)
    M = state.X_beta.T @ state.X_beta
    lam = hyper.ridge_lambda
    return GaussianConditional(
        mean=c_gamma * ridge_solve(M, lam, state.X_beta.T @ r_beta, step="step 11: beta"),
        precision=(M + lam * np.eye(2)) / (c_gamma * state.sigma2_Y),
    )


def inclusion_log_odds(state: ChainState, hyper: Hyperparams) -> tuple[float, float]:
    """Step 12 log-weights (log A, log B) of gamma = 1 and gamma = 0."""
    Xb = _communication_fit(state)
    Q = float(Xb @ Xb)
    if Q < 0 or not np.isfinite(Q):
        raise SamplerError(f"invalid quadratic form Q={Q!r}", step="step 12: gamma")
    g_sigma = hyper.g("beta") * state.sigma2_Y
    log_a = -0.5 * Q / g_sigma + np.log(state.rho)
    log_b = -0.5 * Q / (g_sigma * hyper.nu_1) + np.log1p(-state.rho) - np.log(hyper.nu_1)
    return float(log_a), float(log_b)


def inclusion_probability(state: ChainState, hyper: Hyperparams) -> float:
    """Pr(gamma = 1 | rest), evaluated in log space with max-subtraction."""
    log_a, log_b = inclusion_log_odds(state, hyper)
    m = max(log_a, log_b)
    a, b = np.exp(log_a - m), np.exp(log_b - m)
    return float(a / (a + b))


def rho_conditional(state: ChainState, hyper: Hyperparams) -> tuple[float, float]:
    """Step 13: Beta(a_rho + gamma, b_rho + 1 - gamma) parameters."""
    return hyper.a_rho + state.gamma, hyper.b_rho + 1 - state.gamma


def update_communication_block(
    state: ChainState,
    data: Dataset,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> ChainState:
    """Steps 11-13: draw beta | gamma, then gamma, then rho."""
    cond = beta_conditional(state, data, hyper)
    state = replace(state, beta=draw_gaussian(cond.mean, cond.precision, rng, "step 11: beta"))

    p = inclusion_probability(state, hyper)
    state = replace(state, gamma=int(rng.random() < p))

    a, b = rho_conditional(state, hyper)
    rho = float(rng.beta(a, b))
    # Beta draws can round to the boundary in double precision
    rho = min(max(rho, np.finfo(float).tiny), 1.0 - np.finfo(float).eps)
    return replace(state, rho=rho)


# -- orchestration ----------------------------------------------------------------------------


def sweep(state: ChainState, data: Dataset, hyper: Hyperparams, rng: np.random.Generator) -> ChainState:
    """One full systematic scan, steps 1 through 13."""
    state = update_exposure_block(state, data, hyper, Side.LIGAND, rng)
    state = update_exposure_block(state, data, hyper, Side.RECEPTOR, rng)
    state = recompute_plugins(state, data)
    state = update_outcome_nuisance(state, data, hyper, rng)
    return update_communication_block(state, data, hyper, rng)


def run_chain(
    data: Dataset,
    hyper: Hyperparams,
    mcmc: McmcSettings,
    keep_draws: bool = False,
) -> PosteriorSummary:
    """Run one MR-CCC chain and summarize it.

    Args:
        data: Centered, validated dataset.
        hyper: Prior constants; unset g-scales resolve to ``min(n, 100)``.
        mcmc: Iterations, burn-in, thinning and seed.
        keep_draws: Retain per-draw values of the kept iterations.

    Returns:
        PIP and model-averaged posterior means of beta_X, beta_XZ and beta_Z.

    Raises:
        ConfigurationError: If the settings keep no draws.
        SamplerError: Tagged with the iteration and step that failed.
    """
    if mcmc.n_kept < 1:
        raise ConfigurationError(
            f"chain keeps no draws (iterations={mcmc.iterations}, burn_in={mcmc.burn_in}, thin={mcmc.thin})"
        )
    hyper = hyper.resolved(data.n)
    rng = np.random.default_rng(mcmc.seed)
    state = initial_state(data, hyper)

    n_keep = mcmc.n_kept
    trace = np.empty((n_keep, len(TRACE_COLUMNS))) if keep_draws else None
    sums = np.zeros(3)
    included = 0
    kept = 0
    report_every = max(1, mcmc.iterations // 10)

    logger.debug(
        f"Running chain: n={data.n}, iterations={mcmc.iterations}, burn_in={mcmc.burn_in}, "
        f"thin={mcmc.thin}, seed={mcmc.seed}"
    )
    for t in range(1, mcmc.iterations + 1):
        try:
            state = sweep(state, data, hyper, rng)
        except SamplerError as e:
            raise e.at_iteration(t) from e

        if t > mcmc.burn_in and (t - mcmc.burn_in) % mcmc.thin == 0 and kept < n_keep:
            sums += (state.beta[0], state.beta[1], state.beta_Z)
            included += state.gamma
            if trace is not None:
                trace[kept] = (
                    t,
                    state.beta[0],
                    state.beta[1],
                    state.beta_Z,
                    state.mu,
                    state.sigma2_X,
                    state.sigma2_Z,
                    state.sigma2_Y,
                    state.gamma,
                    state.rho,
                )
            kept += 1

        if t % report_every == 0:
            logger.debug(f"Iteration {t}/{mcmc.iterations}: gamma={state.gamma}, beta={state.beta.round(4)}")

    means = sums / kept
    summary = PosteriorSummary(
        pip=included / kept,
        mean_beta_X=float(means[0]),
        mean_beta_XZ=float(means[1]),
        mean_beta_Z=float(means[2]),
        n_kept=kept,
        draws={name: trace[:, j].copy() for j, name in enumerate(TRACE_COLUMNS)} if trace is not None else None,
    )
    logger.debug(f"Chain finished: PIP={summary.pip:.3f}, beta_X={summary.mean_beta_X:.4f}")
    return summary
