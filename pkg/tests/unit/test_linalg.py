"""Tests for the dense linear-algebra kernels."""

import numpy as np
import pytest

from mr_ccc.core.errors import RankDeficiencyError, SamplerError
from mr_ccc.core.linalg import draw_gaussian, draw_inverse_gamma, ols, ridge_solve


@pytest.mark.unit
class TestRidgeSolve:
    """Tests for ridge_solve."""

    def test_identity(self):
        """Test (I + I)^{-1} b = b / 2."""
        b = np.array([1.0, -4.0, 6.0])

        np.testing.assert_allclose(ridge_solve(np.eye(3), 1.0, b), b / 2)

    def test_diagonal(self):
        """Test (diag(2, 3) + I)^{-1} (1, 1) = (1/3, 1/4)."""
        np.testing.assert_allclose(ridge_solve(np.diag([2.0, 3.0]), 1.0, np.ones(2)), [1 / 3, 1 / 4])

    def test_matches_explicit_inverse(self, rng: np.random.Generator):
        """Test agreement with the explicit inverse on a random SPD matrix."""
        W = rng.standard_normal((30, 4))
        A = W.T @ W
        B = rng.standard_normal((4, 2))

        np.testing.assert_allclose(ridge_solve(A, 0.1, B), np.linalg.inv(A + 0.1 * np.eye(4)) @ B, rtol=1e-10)

    def test_ridge_rescues_singular_gram(self):
        """Test that a singular Gram matrix becomes solvable with a ridge."""
        A = np.ones((2, 2))

        x = ridge_solve(A, 1e-6, np.array([1.0, 1.0]))

        assert np.all(np.isfinite(x))

    def test_not_positive_definite(self):
        """Test that an indefinite matrix raises SamplerError with the step label."""
        with pytest.raises(SamplerError, match="step 11"):
            ridge_solve(np.diag([1.0, -5.0]), 1e-6, np.ones(2), step="step 11: beta")


@pytest.mark.unit
class TestDraws:
    """Tests for Gaussian and inverse-gamma draws."""

    def test_gaussian_moments(self, rng: np.random.Generator):
        """Test that draws from N(m, P^{-1}) have the right mean and covariance."""
        P = np.array([[4.0, 1.0], [1.0, 2.0]])
        mean = np.array([1.0, -2.0])

        draws = np.array([draw_gaussian(mean, P, rng, "test") for _ in range(20_000)])

        np.testing.assert_allclose(draws.mean(axis=0), mean, atol=0.02)
        np.testing.assert_allclose(np.cov(draws.T), np.linalg.inv(P), atol=0.01)

    def test_inverse_gamma_mean(self, rng: np.random.Generator):
        """Test the IG(a, b) mean b / (a - 1)."""
        draws = [draw_inverse_gamma(5.0, 8.0, rng, "test") for _ in range(20_000)]

        assert np.mean(draws) == pytest.approx(2.0, rel=0.03)

    def test_inverse_gamma_rejects_zero_scale(self, rng: np.random.Generator):
        """Test that a non-positive scale is a sampler error."""
        with pytest.raises(SamplerError, match="step 3"):
            draw_inverse_gamma(2.0, 0.0, rng, "step 3: sigma2_X")


@pytest.mark.unit
class TestOls:
    """Tests for ols."""

    def test_exact_fit(self, rng: np.random.Generator):
        """Test noiseless recovery, zero RSS and degrees of freedom."""
        X = np.column_stack([np.ones(20), rng.standard_normal((20, 2))])
        y = X @ np.array([1.0, -2.0, 0.5])

        fit = ols(X, y, ["intercept", "a", "b"])

        np.testing.assert_allclose(fit.coef, [1.0, -2.0, 0.5], atol=1e-12)
        assert fit.rss == pytest.approx(0.0, abs=1e-20)
        assert fit.df_resid == 17
        assert fit.index("b") == 2

    def test_standard_errors(self, rng: np.random.Generator):
        """Test conventional SEs sqrt(diag(s^2 (X'X)^{-1}))."""
        X = np.column_stack([np.ones(50), rng.standard_normal(50)])
        y = X @ np.array([0.2, 1.0]) + rng.standard_normal(50)

        fit = ols(X, y, ["intercept", "a"])
        expected = np.sqrt(np.diag(fit.sigma2 * np.linalg.inv(X.T @ X)))

        np.testing.assert_allclose(fit.se, expected, rtol=1e-10)

    def test_collinear_columns_named(self, rng: np.random.Generator):
        """Test that a duplicated column is reported by name."""
        a = rng.standard_normal(20)
        X = np.column_stack([np.ones(20), a, rng.standard_normal(20), a])

        with pytest.raises(RankDeficiencyError) as excinfo:
            ols(X, rng.standard_normal(20), ["intercept", "a", "b", "a_copy"])

        assert len(excinfo.value.columns) == 1
        assert excinfo.value.columns[0] in {"a", "a_copy"}

    def test_too_few_observations(self):
        """Test that n <= p is rank deficient."""
        with pytest.raises(RankDeficiencyError):
            ols(np.eye(3), np.ones(3), ["a", "b", "c"])
