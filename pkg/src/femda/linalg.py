"""Symmetric positive-definite linear algebra shared by estimators and rules.

Quadratic forms are always evaluated through triangular solves against a
cached lower Cholesky factor; no routine here forms an explicit inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from .errors import NotPositiveDefinite, ZeroTrace

__all__ = [
    "CholFactor",
    "cholesky_spd",
    "mahalanobis_sq",
    "normalize_scatter",
    "symmetrize",
]

_SYMMETRY_RTOL = 1e-12
_JITTER_SCALE = 1e-10


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CholFactor:
    """Lower Cholesky factor ``L`` of a scatter matrix and ``log |L L^T|``."""

    lower: NDArray
    log_det: float
    jittered: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lower", _frozen(self.lower))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def reconstruct(self) -> NDArray:
        return self.lower @ self.lower.T


def symmetrize(M: ArrayLike) -> NDArray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def _check_square(M: NDArray) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {M.shape}")


def cholesky_spd(M: ArrayLike) -> CholFactor:
    """Cholesky-factor a symmetric positive-definite matrix.

    On a failed factorization a single jitter of ``1e-10 * trace(M) / m`` is
    added to the diagonal and the factorization retried once.

    Parameters
    ----------
    M : array_like, shape (m, m)
        Symmetric matrix. Only the lower triangle is read, but asymmetry
        beyond a relative ``1e-12`` is rejected.

    Returns
    -------
    CholFactor

    Raises
    ------
    NotPositiveDefinite
        If the factorization fails even after the jitter pass.
    """
    M = np.asarray(M, dtype=float)
    _check_square(M)
    if not np.all(np.isfinite(M)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    scale = np.max(np.abs(M))
    if np.max(np.abs(M - M.T)) > _SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")
    m = M.shape[0]
    jittered = False
    try:
        L = cholesky(M, lower=True, check_finite=False)
    except LinAlgError:
        jitter = _JITTER_SCALE * np.trace(M) / m
        if not jitter > 0:
            raise NotPositiveDefinite("matrix is not positive definite") from None
        try:
            L = cholesky(M + jitter * np.eye(m), lower=True, check_finite=False)
        except LinAlgError:
            raise NotPositiveDefinite(
                "matrix is not positive definite even after jitter"
            ) from None
        jittered = True
    diag = np.diag(L)
    if np.any(diag <= 0):
        raise NotPositiveDefinite("non-positive Cholesky pivot")
    return CholFactor(lower=L, log_det=float(2.0 * np.sum(np.log(diag))), jittered=jittered)


def mahalanobis_sq(x: ArrayLike, mu: ArrayLike, chol: CholFactor):
    """Squared Mahalanobis distance ``(x - mu)^T Sigma^{-1} (x - mu)``.

    ``x`` may be a single m-vector (returns a float) or an (n, m) array of
    rows (returns an (n,) array).
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    m = chol.dim
    if mu.shape != (m,) or x.shape[-1] != m or x.ndim > 2:
        raise ValueError(
            f"dimension mismatch: x {x.shape}, mu {mu.shape}, scatter {m}x{m}"
        )
    diff = (x - mu).T
    z = solve_triangular(chol.lower, diff, lower=True, check_finite=False)
    t = np.sum(z * z, axis=0)
    if x.ndim == 1:
        return float(t)
    return t


def normalize_scatter(M: ArrayLike) -> NDArray:
    """Rescale ``M`` so that its trace equals its dimension."""
    M = np.asarray(M, dtype=float)
    _check_square(M)
    tr = np.trace(M)
    if not tr > 0:
        raise ZeroTrace(f"scatter trace {tr} is not positive")
    return (M.shape[0] / tr) * M
