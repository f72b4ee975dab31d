"""Tests for the MR-CCC Gibbs sampler.

Every Gaussian full conditional is checked against a generic conjugate
update: the posterior of ``b`` given independent observation blocks
``target_k ~ N(A_k b, s_k I)`` and a zero-mean prior with precision ``P0``
has precision ``P0 + sum A_k'A_k / s_k`` and mean
``precision^{-1} sum A_k' target_k / s_k``.
"""

from dataclasses import replace

import numpy as np
import pytest

from mr_ccc.core.baselines import fit_mrccc
from mr_ccc.core.config import Hyperparams, McmcSettings, SimConfig
from mr_ccc.core.errors import ConfigurationError, SamplerError
from mr_ccc.core.gibbs import (
    TRACE_COLUMNS,
    ChainState,
    Side,
    alpha_y_conditional,
    beta_conditional,
    beta_z_conditional,
    exposure_alpha_conditional,
    exposure_pi_conditional,
    exposure_sigma2_conditional,
    inclusion_log_odds,
    inclusion_probability,
    initial_state,
    mu_conditional,
    recompute_plugins,
    rho_conditional,
    run_chain,
    sigma2_y_conditional,
    sweep,
)
from mr_ccc.core.model import center_dataset
from mr_ccc.core.simulator import generate_dataset
from mr_ccc.core.types import Dataset


def conjugate_oracle(terms, prior_precision):
    """Posterior (mean, covariance) for a Gaussian linear model with known noise variances."""
    P = np.array(prior_precision, dtype=float)
    h = np.zeros(P.shape[0])
    for A, target, s in terms:
        A = np.atleast_2d(A.T).T
        P = P + A.T @ A / s
        h = h + A.T @ target / s
    cov = np.linalg.inv(P)
    return cov @ h, cov


def assert_matches(cond, oracle):
    mean, cov = oracle
    np.testing.assert_allclose(cond.mean, mean, rtol=1e-7, atol=1e-9)
    np.testing.assert_allclose(cond.covariance, cov, rtol=1e-7, atol=1e-9)


@pytest.fixture
def hyper(oracle_hyper: Hyperparams) -> Hyperparams:
    return oracle_hyper


@pytest.mark.unit
class TestExposureConditionals:
    """Steps 1-6 against the conjugate oracle."""

    def test_pi_x(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test step 1: ligand instrument effects."""
        d, s = small_dataset, make_state(small_dataset)
        w = s.beta[0] + s.beta[1] * s.Z_star
        outcome_target = d.y - s.mu - s.beta_Z * s.Z_star - d.V @ s.alpha_Y - w * (d.V @ s.alpha_X)

        oracle = conjugate_oracle(
            [(d.G, d.x - d.V @ s.alpha_X, s.sigma2_X), (d.G * w[:, None], outcome_target, s.sigma2_Y)],
            d.G.T @ d.G / (hyper.g_G * s.sigma2_X),
        )

        assert_matches(exposure_pi_conditional(s, d, hyper, Side.LIGAND), oracle)

    def test_alpha_x(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test step 2: ligand covariate effects."""
        d, s = small_dataset, make_state(small_dataset)
        w = s.beta[0] + s.beta[1] * s.Z_star
        outcome_target = d.y - s.mu - s.beta_Z * s.Z_star - d.V @ s.alpha_Y - w * (d.G @ s.pi_X)

        oracle = conjugate_oracle(
            [(d.V, d.x - d.G @ s.pi_X, s.sigma2_X), (d.V * w[:, None], outcome_target, s.sigma2_Y)],
            d.V.T @ d.V / (hyper.g_V * s.sigma2_X),
        )

        assert_matches(exposure_alpha_conditional(s, d, hyper, Side.LIGAND), oracle)

    def test_pi_z(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test step 4: receptor instrument effects."""
        d, s = small_dataset, make_state(small_dataset)
        w = s.beta_Z + s.beta[1] * s.X_star
        outcome_target = d.y - s.mu - s.beta[0] * s.X_star - d.V @ s.alpha_Y - w * (d.V @ s.alpha_Z)

        oracle = conjugate_oracle(
            [(d.H, d.z - d.V @ s.alpha_Z, s.sigma2_Z), (d.H * w[:, None], outcome_target, s.sigma2_Y)],
            d.H.T @ d.H / (hyper.g_H * s.sigma2_Z),
        )

        assert_matches(exposure_pi_conditional(s, d, hyper, Side.RECEPTOR), oracle)

    def test_alpha_z(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test step 5: receptor covariate effects."""
        d, s = small_dataset, make_state(small_dataset)
        w = s.beta_Z + s.beta[1] * s.X_star
        outcome_target = d.y - s.mu - s.beta[0] * s.X_star - d.V @ s.alpha_Y - w * (d.H @ s.pi_Z)

        oracle = conjugate_oracle(
            [(d.V, d.z - d.H @ s.pi_Z, s.sigma2_Z), (d.V * w[:, None], outcome_target, s.sigma2_Y)],
            d.V.T @ d.V / (hyper.g_V * s.sigma2_Z),
        )

        assert_matches(exposure_alpha_conditional(s, d, hyper, Side.RECEPTOR), oracle)

    @pytest.mark.parametrize("side", [Side.LIGAND, Side.RECEPTOR])
    def test_exposure_variance(self, small_dataset: Dataset, make_state, hyper: Hyperparams, side: Side):
        """Test steps 3 and 6: inverse-gamma shape and scale."""
        d, s = small_dataset, make_state(small_dataset)
        if side is Side.LIGAND:
            inst, exposure, pi, alpha, g_inst = d.G, d.x, s.pi_X, s.alpha_X, hyper.g_G
        else:
            inst, exposure, pi, alpha, g_inst = d.H, d.z, s.pi_Z, s.alpha_Z, hyper.g_H
        resid = exposure - inst @ pi - d.V @ alpha
        quad = (
            np.sum(resid**2)
            + pi @ (inst.T @ inst) @ pi / g_inst
            + alpha @ (d.V.T @ d.V) @ alpha / hyper.g_V
        )

        ig = exposure_sigma2_conditional(s, d, hyper, side)

        assert ig.shape == pytest.approx(hyper.a_sigma + (d.n + inst.shape[1] + d.p_V) / 2)
        assert ig.scale == pytest.approx(hyper.b_sigma + quad / 2, rel=1e-12)

    def test_exposure_variance_zero_residual(self, hyper: Hyperparams):
        """Test that an exactly fitted exposure leaves only prior terms in the scale."""
        G = np.array([[1.0], [0.0], [-1.0]])
        H = np.array([[1.0], [2.0], [0.0]])
        d = Dataset(G=G, H=H, V=np.zeros((3, 0)), x=2 * G[:, 0], z=np.ones(3), y=np.ones(3))
        s = ChainState(
            pi_X=np.array([2.0]),
            alpha_X=np.zeros(0),
            sigma2_X=1.0,
            pi_Z=np.zeros(1),
            alpha_Z=np.zeros(0),
            sigma2_Z=1.0,
            mu=0.0,
            alpha_Y=np.zeros(0),
            beta_Z=0.0,
            sigma2_Y=1.0,
            beta=np.zeros(2),
            gamma=1,
            rho=0.5,
            X_star=np.zeros(3),
            Z_star=np.zeros(3),
            X_beta=np.zeros((3, 2)),
        )

        ig = exposure_sigma2_conditional(s, d, hyper, Side.LIGAND)

        # ||G pi||^2 = 8
        assert ig.scale == pytest.approx(hyper.b_sigma + 0.5 * 8.0 / hyper.g_G)
        assert ig.shape == pytest.approx(hyper.a_sigma + 2.0)


@pytest.mark.unit
class TestOutcomeConditionals:
    """Steps 7-10 against the conjugate oracle."""

    def test_mu(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test step 7 with prior N(0, n sigma2_Y)."""
        d, s = small_dataset, make_state(small_dataset)
        target = d.y - s.X_beta @ s.beta - s.beta_Z * s.Z_star - d.V @ s.alpha_Y

        oracle = conjugate_oracle([(np.ones(d.n), target, s.sigma2_Y)], [[1.0 / (d.n * s.sigma2_Y)]])

        assert_matches(mu_conditional(s, d), oracle)

    def test_mu_worked_example(self):
        """Test n = 4 with unit residuals: mean 4 / (4 + 1/4)."""
        rng = np.random.default_rng(0)
        d = Dataset(
            G=rng.standard_normal((4, 1)),
            H=rng.standard_normal((4, 1)),
            V=np.zeros((4, 0)),
            x=rng.standard_normal(4),
            z=rng.standard_normal(4),
            y=np.ones(4),
        )
        s = replace(
            initial_state(d, Hyperparams().resolved(4)),
            beta=np.zeros(2),
            beta_Z=0.0,
            sigma2_Y=2.0,
        )

        cond = mu_conditional(s, d)

        assert cond.mean[0] == pytest.approx(4 / 4.25)
        assert cond.covariance[0, 0] == pytest.approx(2.0 / 4.25)

    def test_alpha_y(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test step 8."""
        d, s = small_dataset, make_state(small_dataset)
        target = d.y - s.mu - s.X_beta @ s.beta - s.beta_Z * s.Z_star

        oracle = conjugate_oracle([(d.V, target, s.sigma2_Y)], d.V.T @ d.V / (hyper.g_V * s.sigma2_Y))

        assert_matches(alpha_y_conditional(s, d, hyper), oracle)

    def test_beta_z(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test step 9."""
        d, s = small_dataset, make_state(small_dataset)
        target = d.y - s.mu - s.X_beta @ s.beta - d.V @ s.alpha_Y

        oracle = conjugate_oracle(
            [(s.Z_star, target, s.sigma2_Y)], [[s.Z_star @ s.Z_star / (hyper.g_Z * s.sigma2_Y)]]
        )

        assert_matches(beta_z_conditional(s, d, hyper), oracle)

    @pytest.mark.parametrize("gamma", [0, 1])
    def test_sigma2_y(self, small_dataset: Dataset, make_state, hyper: Hyperparams, gamma: int):
        """Test step 10: shape a + (n + p_V + 4)/2 and every prior quadratic form."""
        d, s = small_dataset, make_state(small_dataset, gamma=gamma)
        scale_gamma = 1.0 if gamma else hyper.nu_1
        resid = d.y - s.mu - s.X_beta @ s.beta - s.beta_Z * s.Z_star - d.V @ s.alpha_Y
        quad = (
            np.sum(resid**2)
            + s.mu**2 / d.n
            + s.beta @ (s.X_beta.T @ s.X_beta) @ s.beta / (hyper.g_beta * scale_gamma)
            + s.beta_Z**2 * np.sum(s.Z_star**2) / hyper.g_Z
            + s.alpha_Y @ (d.V.T @ d.V) @ s.alpha_Y / hyper.g_V
        )

        ig = sigma2_y_conditional(s, d, hyper)

        assert ig.shape == pytest.approx(hyper.a_sigma + (d.n + d.p_V + 4) / 2)
        assert ig.scale == pytest.approx(hyper.b_sigma + quad / 2, rel=1e-10)


@pytest.mark.unit
class TestCommunicationBlock:
    """Steps 11-13."""

    @pytest.mark.parametrize("gamma", [0, 1])
    def test_beta(self, small_dataset: Dataset, make_state, hyper: Hyperparams, gamma: int):
        """Test step 11 under the slab and the spike."""
        d, s = small_dataset, make_state(small_dataset, gamma=gamma)
        scale_gamma = 1.0 if gamma else hyper.nu_1
        target = d.y - s.mu - s.beta_Z * s.Z_star - d.V @ s.alpha_Y
        M = s.X_beta.T @ s.X_beta

        oracle = conjugate_oracle([(s.X_beta, target, s.sigma2_Y)], M / (hyper.g_beta * scale_gamma * s.sigma2_Y))

        assert_matches(beta_conditional(s, d, hyper), oracle)

    def test_inclusion_probability_matches_direct_ratio(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test step 12 against A / (A + B) computed without logs."""
        d = small_dataset
        s = replace(make_state(d), beta=np.array([1e-3, -2e-3]))
        Q = float(np.sum((s.X_beta @ s.beta) ** 2))
        g, nu = hyper.g_beta, hyper.nu_1
        A = s.rho * np.exp(-Q / (2 * g * s.sigma2_Y))
        B = (1 - s.rho) / nu * np.exp(-Q / (2 * g * nu * s.sigma2_Y))

        assert inclusion_probability(s, hyper) == pytest.approx(A / (A + B), rel=1e-10)

    def test_zero_effects_give_prior_odds(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test Q = 0 and rho = 1/2: probability nu_1 / (1 + nu_1)."""
        s = replace(make_state(small_dataset), beta=np.zeros(2), rho=0.5)

        assert inclusion_probability(s, hyper) == pytest.approx(hyper.nu_1 / (1 + hyper.nu_1))

    def test_large_effects_do_not_overflow(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test that a huge Q gives probability 1 without NaN."""
        s = replace(make_state(small_dataset), beta=np.array([1e3, 1e3]))

        p = inclusion_probability(s, hyper)

        assert p == 1.0

    def test_invalid_quadratic_form(self, small_dataset: Dataset, make_state, hyper: Hyperparams):
        """Test that a non-finite Q is a sampler error naming step 12."""
        s = replace(make_state(small_dataset), beta=np.array([np.inf, 0.0]))

        with pytest.raises(SamplerError, match="step 12"):
            inclusion_log_odds(s, hyper)

    @pytest.mark.parametrize(("gamma", "expected"), [(1, (4.0, 1.0)), (0, (3.0, 2.0))])
    def test_rho(self, small_dataset: Dataset, make_state, gamma: int, expected: tuple[float, float]):
        """Test step 13: Beta(a_rho + gamma, b_rho + 1 - gamma)."""
        s = make_state(small_dataset, gamma=gamma)

        assert rho_conditional(s, Hyperparams()) == expected


@pytest.mark.unit
class TestPlugins:
    """Tests for plug-in recomputation and initialization."""

    def test_hand_example(self, hyper: Hyperparams):
        """Test G = (1, 0, -1), pi_X = 2 gives X* = (2, 0, -2)."""
        d = Dataset(
            G=np.array([[1.0], [0.0], [-1.0]]),
            H=np.array([[1.0], [1.0], [0.0]]),
            V=np.zeros((3, 0)),
            x=np.zeros(3),
            z=np.zeros(3),
            y=np.zeros(3),
        )
        s = replace(initial_state(d, hyper), pi_X=np.array([2.0]), pi_Z=np.array([3.0]))

        s = recompute_plugins(s, d)

        np.testing.assert_array_equal(s.X_star, [2.0, 0.0, -2.0])
        np.testing.assert_array_equal(s.Z_star, [3.0, 3.0, 0.0])
        np.testing.assert_array_equal(s.X_beta, [[2.0, 6.0], [0.0, 0.0], [-2.0, 0.0]])

    def test_sweep_keeps_plugins_consistent(self, small_dataset: Dataset, hyper: Hyperparams):
        """Test that X* and Z* match the exposure coefficients after a sweep."""
        d = small_dataset
        s = sweep(initial_state(d, hyper), d, hyper, np.random.default_rng(1))

        np.testing.assert_allclose(s.X_star, d.G @ s.pi_X + d.V @ s.alpha_X)
        np.testing.assert_allclose(s.Z_star, d.H @ s.pi_Z + d.V @ s.alpha_Z)
        assert s.gamma in (0, 1)
        assert 0.0 < s.rho < 1.0

    def test_sweep_without_covariates(self, rng: np.random.Generator, hyper: Hyperparams):
        """Test a sweep when p_V = 0."""
        d = Dataset(
            G=rng.standard_normal((15, 2)),
            H=rng.standard_normal((15, 2)),
            V=np.zeros((15, 0)),
            x=rng.standard_normal(15),
            z=rng.standard_normal(15),
            y=rng.standard_normal(15),
        )

        s = sweep(initial_state(d, hyper), d, hyper, rng)

        assert s.alpha_X.shape == (0,)
        assert np.isfinite(s.sigma2_Y)


@pytest.mark.unit
class TestRunChain:
    """Tests for chain orchestration."""

    def test_deterministic(self, s2_dataset: Dataset, quick_mcmc: McmcSettings):
        """Test that the same seed reproduces the same summary."""
        data, _ = center_dataset(s2_dataset)

        first = run_chain(data, Hyperparams(), quick_mcmc)
        second = run_chain(data, Hyperparams(), quick_mcmc)

        assert first.pip == second.pip
        assert first.mean_beta_X == second.mean_beta_X
        assert first.mean_beta_XZ == second.mean_beta_XZ

    def test_kept_draws(self, s2_dataset: Dataset, quick_mcmc: McmcSettings):
        """Test the keep rule t > burn_in and (t - burn_in) % thin == 0."""
        data, _ = center_dataset(s2_dataset)

        summary = run_chain(data, Hyperparams(), quick_mcmc, keep_draws=True)

        assert summary.n_kept == 40
        assert summary.draws is not None
        assert set(summary.draws) == set(TRACE_COLUMNS)
        np.testing.assert_array_equal(summary.draws["iteration"], np.arange(105, 301, 5))
        assert set(np.unique(summary.draws["gamma"])) <= {0.0, 1.0}
        assert summary.pip == pytest.approx(summary.draws["gamma"].mean())
        assert summary.mean_beta_X == pytest.approx(summary.draws["beta_X"].mean())

    def test_sampler_error_tagged_with_iteration(self, small_dataset: Dataset):
        """Test that a failing update reports its iteration and step."""
        data, _ = center_dataset(small_dataset)
        y = data.y.copy()
        y[0] = np.nan
        broken = Dataset(G=data.G, H=data.H, V=data.V, x=data.x, z=data.z, y=y)

        with pytest.raises(SamplerError, match="iteration 1, step 3"):
            run_chain(broken, Hyperparams(), McmcSettings(iterations=10, burn_in=0, thin=1))

    def test_refuses_settings_without_kept_draws(self, small_dataset: Dataset):
        """Test that unvalidated settings keeping no draws fail before sampling."""
        data, _ = center_dataset(small_dataset)
        unchecked = McmcSettings.model_construct(iterations=10, burn_in=5, thin=10, seed=0)

        with pytest.raises(ConfigurationError, match="keeps no draws"):
            run_chain(data, Hyperparams(), unchecked)


@pytest.mark.unit
@pytest.mark.slow
class TestPosteriorBehaviour:
    """Full-length chains on simulated replicates."""

    def test_detects_modulated_communication(self):
        """Test PIP >= 0.99 on an S2 replicate at n = 1000."""
        dataset = generate_dataset(SimConfig(scenario="S2", n=1000, master_seed=3, mode="benchmark")).dataset

        result = fit_mrccc(dataset, mcmc=McmcSettings.benchmark(seed=17))

        assert result.score >= 0.99
        assert result.decision is True
        assert result.beta_XZ_hat == pytest.approx(0.3, abs=0.1)

    def test_no_communication(self):
        """Test that an S1 replicate is not declared communicating."""
        dataset = generate_dataset(SimConfig(scenario="S1", n=1000, master_seed=3, mode="benchmark")).dataset

        result = fit_mrccc(dataset, mcmc=McmcSettings.benchmark(seed=17))

        assert result.score < 0.5
        assert result.decision is False
