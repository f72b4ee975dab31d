"""Dense linear-algebra kernels: ridge-regularized symmetric solves, OLS, Gaussian draws."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as scl

from .errors import RankDeficiencyError, SamplerError

CholeskyFactor = tuple[np.ndarray, bool]


def factorize(A: np.ndarray, lam: float = 0.0, step: str = "ridge_solve") -> CholeskyFactor:
    """Cholesky-factorize ``A + lam * I``.

    Raises:
        SamplerError: If the regularized matrix is not numerically positive definite.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SamplerError(f"expected a square matrix, got shape {A.shape}", step=step)
    M = A + lam * np.eye(A.shape[0]) if lam else A
    try:
        return scl.cho_factor(M, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SamplerError(f"matrix is not positive definite after ridge {lam:g}: {e}", step=step) from e


def ridge_solve(A: np.ndarray, lam: float, B: np.ndarray, step: str = "ridge_solve") -> np.ndarray:
    """Return ``(A + lam I)^{-1} B`` via a Cholesky solve.

    Args:
        A: Symmetric p x p matrix.
        lam: Non-negative ridge added to the diagonal.
        B: Right-hand side, p or p x k.
        step: Label attached to any failure.

    Raises:
        SamplerError: If ``A + lam I`` is not positive definite.
    """
    return scl.cho_solve(factorize(A, lam, step), np.asarray(B, dtype=np.float64), check_finite=False)


def draw_gaussian(
    mean: np.ndarray,
    precision: np.ndarray,
    rng: np.random.Generator,
    step: str,
) -> np.ndarray:
    """Draw from ``N(mean, precision^{-1})`` without forming the covariance.

    With ``precision = L L^T`` the draw is ``mean + L^{-T} e`` for standard normal ``e``.
    """
    L, _ = factorize(precision, 0.0, step)
    e = rng.standard_normal(mean.shape[0])
    return mean + scl.solve_triangular(L, e, lower=True, trans="T", check_finite=False)


def draw_inverse_gamma(shape: float, scale: float, rng: np.random.Generator, step: str) -> float:
    """Draw from ``IG(shape, scale)`` as ``scale / Gamma(shape, 1)``."""
    if not scale > 0 or not np.isfinite(scale):
        raise SamplerError(f"non-positive inverse-gamma scale {scale!r}", step=step)
    return float(scale / rng.gamma(shape, 1.0))


@dataclass(frozen=True, eq=False)
class OlsFit:
    """Ordinary least-squares fit with conventional standard errors."""

    names: list[str]
    coef: np.ndarray
    cov: np.ndarray
    rss: float
    df_resid: int

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def sigma2(self) -> float:
        return self.rss / self.df_resid

    def index(self, name: str) -> int:
        return self.names.index(name)


def ols(design: np.ndarray, y: np.ndarray, names: list[str]) -> OlsFit:
    """Fit ``y`` on ``design`` by least squares.

    Args:
        design: n x p design matrix (include an intercept column explicitly).
        y: Response vector.
        names: Column labels, used in rank-deficiency errors.

    Raises:
        RankDeficiencyError: Naming the columns that are linear combinations of earlier ones.
    """
    X = np.asarray(design, dtype=np.float64)
    n, p = X.shape
    if n <= p:
        raise RankDeficiencyError(f"{n} observations cannot identify {p} coefficients", columns=list(names))

    # Pivoted QR exposes which columns are redundant
    _, R, piv = scl.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(n, p) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < p:
        collinear = [names[i] for i in sorted(piv[rank:])]
        raise RankDeficiencyError(f"Design is rank deficient; collinear columns: {', '.join(collinear)}", collinear)

    coef, *_ = scl.lstsq(X, y, check_finite=False)
    resid = y - X @ coef
    rss = float(resid @ resid)
    df_resid = n - p
    XtX_inv = scl.cho_solve(scl.cho_factor(X.T @ X, lower=True), np.eye(p))
    return OlsFit(
        names=list(names),
        coef=coef,
        cov=(rss / df_resid) * XtX_inv,
        rss=rss,
        df_resid=df_resid,
    )
