"""Per-class location/scatter estimators.

* :func:`fit_femda` - the flexible fixed point with weights ``1/t``.
* :func:`fit_gaussian` - sample mean and ML covariance.
* :func:`fit_huber_m` - Huber-type M-estimator (plug-in for robust QDA).
* :func:`fit_student_em` - ECME fit of a multivariate t, degrees of freedom
  included.
* :func:`pooled_covariance` - sample-size weighted pooling for LDA.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq
from scipy.special import digamma, gammaln
from scipy.stats import chi2

from .errors import ConfigError, DegenerateClass, NotPositiveDefinite, ZeroTrace
from .linalg import CholFactor, cholesky_spd, mahalanobis_sq, normalize_scatter, symmetrize

__all__ = [
    "FitOptions",
    "ClassParams",
    "StudentParams",
    "fit_femda",
    "femda_update",
    "fit_gaussian",
    "fit_huber_m",
    "huber_threshold",
    "huber_consistency",
    "fit_student_em",
    "student_loglik",
    "pooled_covariance",
]


@dataclass(frozen=True)
class FitOptions:
    """Numerical settings shared by the iterative estimators.

    ``t_floor=None`` resolves to ``1e-10 * m`` at fit time.
    """

    tol: float = 1e-6
    max_iter: int = 100
    t_floor: float | None = None
    huber_quantile: float = 0.9
    nu_min: float = 0.5
    nu_max: float = 200.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError(f"max_iter must be a positive integer, got {self.max_iter}")
        if self.t_floor is not None and not self.t_floor > 0:
            raise ConfigError(f"t_floor must be positive, got {self.t_floor}")
        if not 0 < self.huber_quantile < 1:
            raise ConfigError("huber_quantile must lie in (0, 1)")
        if not 0 < self.nu_min < self.nu_max:
            raise ConfigError("need 0 < nu_min < nu_max")

    def floor_for(self, m: int) -> float:
        return self.t_floor if self.t_floor is not None else 1e-10 * m


@dataclass(frozen=True)
class ClassParams:
    """Location, scatter and cached Cholesky factor of one class."""

    mu: NDArray
    sigma: NDArray
    chol: CholFactor
    n_obs: int
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        for name in ("mu", "sigma"):
            a = np.array(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @classmethod
    def build(cls, mu, sigma, n_obs, iterations=0, converged=True) -> "ClassParams":
        sigma = symmetrize(sigma)
        return cls(mu, sigma, cholesky_spd(sigma), int(n_obs), int(iterations), bool(converged))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @property
    def log_det(self) -> float:
        return self.chol.log_det

    def scaled(self, lam: float) -> "ClassParams":
        """Same class with the scatter multiplied by ``lam``."""
        return ClassParams.build(self.mu, lam * self.sigma, self.n_obs, self.iterations, self.converged)

    def mahalanobis_sq(self, X: ArrayLike):
        return mahalanobis_sq(X, self.mu, self.chol)


@dataclass(frozen=True)
class StudentParams:
    base: ClassParams
    nu: float

    @property
    def mu(self) -> NDArray:
        return self.base.mu

    @property
    def sigma(self) -> NDArray:
        return self.base.sigma

    @property
    def chol(self) -> CholFactor:
        return self.base.chol

    @property
    def n_obs(self) -> int:
        return self.base.n_obs

    @property
    def iterations(self) -> int:
        return self.base.iterations

    @property
    def converged(self) -> bool:
        return self.base.converged

    @property
    def log_det(self) -> float:
        return self.base.chol.log_det

    def mahalanobis_sq(self, X: ArrayLike):
        return self.base.mahalanobis_sq(X)


def _as_class_data(X: ArrayLike) -> NDArray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"class data must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("class data contains non-finite values")
    n, m = X.shape
    if n <= m:
        raise DegenerateClass(f"{n} observations cannot support a {m}x{m} scatter")
    return X


def _factor(sigma: NDArray, what: str) -> CholFactor:
    try:
        return cholesky_spd(sigma)
    except NotPositiveDefinite as exc:
        raise DegenerateClass(f"{what}: scatter estimate is singular") from exc


def _weighted_scatter(Xc: NDArray, w: NDArray) -> NDArray:
    return symmetrize((Xc * w[:, None]).T @ Xc)


def _rel_change(new: NDArray, old: NDArray, denom: float) -> float:
    return float(np.linalg.norm(new - old) / denom)


# --------------------------------------------------------------------------
# FEMDA fixed point
# --------------------------------------------------------------------------

def femda_update(X: ArrayLike, mu: ArrayLike, sigma: ArrayLike, t_floor: float | None = None):
    """One sweep of the FEMDA fixed-point iteration.

    Weights ``w_i = 1/t_i`` are recomputed from ``(mu, sigma)`` and the
    location updated; the weights are then recomputed at the new location
    and the scatter ``(m/n) sum_i w_i (x_i - mu)(x_i - mu)^T`` formed and
    rescaled to trace ``m``.

    Returns
    -------
    mu_new, sigma_new : ndarray
    """
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    floor = 1e-10 * m if t_floor is None else t_floor
    chol = _factor(np.asarray(sigma, dtype=float), "FEMDA")
    w = 1.0 / np.maximum(mahalanobis_sq(X, mu, chol), floor)
    mu_new = w @ X / w.sum()
    w = 1.0 / np.maximum(mahalanobis_sq(X, mu_new, chol), floor)
    Xc = X - mu_new
    try:
        sigma_new = normalize_scatter((m / n) * _weighted_scatter(Xc, w))
    except ZeroTrace as exc:
        raise DegenerateClass("FEMDA: all observations coincide") from exc
    return mu_new, sigma_new


def fit_femda(X: ArrayLike, opts: FitOptions | None = None, init=None) -> ClassParams:
    """Fit the FEMDA location and shape of one class.

    Parameters
    ----------
    X : array_like, shape (n, m)
        Observations of a single class, ``n >= m + 1``.
    opts : FitOptions, optional
    init : tuple (mu0, sigma0), optional
        Starting point. Defaults to the coordinatewise median and the
        identity.

    Returns
    -------
    ClassParams
        Scatter normalized to trace ``m``. ``converged`` is False when
        ``max_iter`` sweeps did not bring both relative changes under
        ``tol``.
    """
    opts = opts or FitOptions()
    X = _as_class_data(X)
    n, m = X.shape
    floor = opts.floor_for(m)
    if init is None:
        mu, sigma = np.median(X, axis=0), np.eye(m)
    else:
        mu = np.asarray(init[0], dtype=float)
        sigma = normalize_scatter(symmetrize(init[1]))

    converged = False
    it = 0
    while it < opts.max_iter:
        it += 1
        mu_new, sigma_new = femda_update(X, mu, sigma, floor)
        dmu = _rel_change(mu_new, mu, 1.0 + np.linalg.norm(mu))
        dsig = _rel_change(sigma_new, sigma, np.linalg.norm(sigma))
        mu, sigma = mu_new, sigma_new
        if dmu <= opts.tol and dsig <= opts.tol:
            converged = True
            break
    return ClassParams(mu, sigma, _factor(sigma, "FEMDA"), n, it, converged)


# --------------------------------------------------------------------------
# Gaussian ML
# --------------------------------------------------------------------------

def fit_gaussian(X: ArrayLike) -> ClassParams:
    """Sample mean and the 1/n (maximum-likelihood) covariance."""
    X = _as_class_data(X)
    n, _ = X.shape
    mu = X.mean(axis=0)
    Xc = X - mu
    sigma = symmetrize(Xc.T @ Xc / n)
    return ClassParams(mu, sigma, _factor(sigma, "Gaussian"), n, 0, True)


# --------------------------------------------------------------------------
# Huber M-estimator
# --------------------------------------------------------------------------

def huber_threshold(m: int, quantile: float) -> float:
    """Squared-distance cut-off ``a``: the chi-square(m) ``quantile``."""
    return float(chi2.ppf(quantile, m))


def huber_consistency(m: int, a: float) -> float:
    """``E[min(chi2_m, a)] / m``, the Gaussian consistency factor.

    Uses ``E[X 1{X <= a}] = m F_{m+2}(a)`` for ``X ~ chi2_m``.
    """
    return float(chi2.cdf(a, m + 2) + (a / m) * chi2.sf(a, m))


def fit_huber_m(X: ArrayLike, opts: FitOptions | None = None) -> ClassParams:
    """Huber M-estimator of location and scatter.

    Weights are ``u(t) = min(1, a/t)`` with ``a`` the chi-square(m)
    quantile at ``opts.huber_quantile``; the scatter is divided by the
    Gaussian consistency factor so that it targets the covariance under
    normality. Starts from the median and the sample covariance.
    """
    opts = opts or FitOptions()
    X = _as_class_data(X)
    n, m = X.shape
    a = huber_threshold(m, opts.huber_quantile)
    b = huber_consistency(m, a)
    floor = opts.floor_for(m)

    mu = np.median(X, axis=0)
    Xc = X - X.mean(axis=0)
    sigma = symmetrize(Xc.T @ Xc / n)
    chol = _factor(sigma, "Huber")
    converged = False
    it = 0
    while it < opts.max_iter:
        it += 1
        t = np.maximum(mahalanobis_sq(X, mu, chol), floor)
        u = np.minimum(1.0, a / t)
        mu_new = u @ X / u.sum()
        sigma_new = _weighted_scatter(X - mu_new, u) / (b * n)
        dmu = _rel_change(mu_new, mu, 1.0 + np.linalg.norm(mu))
        dsig = _rel_change(sigma_new, sigma, np.linalg.norm(sigma))
        mu, sigma = mu_new, sigma_new
        chol = _factor(sigma, "Huber")
        if dmu <= opts.tol and dsig <= opts.tol:
            converged = True
            break
    return ClassParams(mu, sigma, chol, n, it, converged)


# --------------------------------------------------------------------------
# Multivariate t (ECME)
# --------------------------------------------------------------------------

def _t_loglik(t: NDArray, log_det: float, nu: float, m: int) -> float:
    n = t.shape[0]
    const = gammaln(0.5 * (nu + m)) - gammaln(0.5 * nu) - 0.5 * m * np.log(nu * np.pi)
    return float(n * (const - 0.5 * log_det) - 0.5 * (nu + m) * np.sum(np.log1p(t / nu)))


def student_loglik(X: ArrayLike, mu: ArrayLike, chol: CholFactor, nu: float) -> float:
    """Observed-data log-likelihood of a multivariate t sample."""
    X = np.asarray(X, dtype=float)
    return _t_loglik(mahalanobis_sq(X, mu, chol), chol.log_det, nu, X.shape[1])


def _nu_score(nu: float, t: NDArray, m: int) -> float:
    # derivative of _t_loglik in nu, divided by n
    r = t / nu
    return float(
        0.5 * (digamma(0.5 * (nu + m)) - digamma(0.5 * nu) - m / nu)
        - 0.5 * np.mean(np.log1p(r))
        + 0.5 * (nu + m) / nu * np.mean(r / (1.0 + r))
    )


def _update_nu(t: NDArray, log_det: float, nu_old: float, m: int, opts: FitOptions) -> float:
    lo, hi = opts.nu_min, opts.nu_max
    candidates = [lo, hi, nu_old]
    s_lo, s_hi = _nu_score(lo, t, m), _nu_score(hi, t, m)
    if s_lo > 0 > s_hi:
        candidates.append(brentq(_nu_score, lo, hi, args=(t, m), xtol=1e-12, rtol=1e-14))
    # never accept a step that lowers the likelihood
    return max(candidates, key=lambda nu: (_t_loglik(t, log_det, nu, m), nu == nu_old))


def fit_student_em(
    X: ArrayLike,
    opts: FitOptions | None = None,
    nu0: float = 10.0,
    trace: list | None = None,
) -> StudentParams:
    """Fit location, scatter and degrees of freedom of a multivariate t.

    Each sweep runs the E-step (weights ``(nu+m)/(nu+t_i)``), the
    conditional M-step for (mu, Sigma), and then maximizes the
    observed-data likelihood over ``nu`` in ``[nu_min, nu_max]`` with mu and
    Sigma held fixed. The observed log-likelihood cannot decrease from one
    sweep to the next.

    Parameters
    ----------
    trace : list, optional
        When given, the observed log-likelihood is appended after the
        initial state and after every sweep.
    """
    opts = opts or FitOptions()
    X = _as_class_data(X)
    n, m = X.shape
    floor = opts.floor_for(m)

    mu = np.median(X, axis=0)
    Xc = X - X.mean(axis=0)
    sigma = symmetrize(Xc.T @ Xc / n)
    chol = _factor(sigma, "t-EM")
    nu = float(np.clip(nu0, opts.nu_min, opts.nu_max))
    t = mahalanobis_sq(X, mu, chol)
    if trace is not None:
        trace.append(_t_loglik(t, chol.log_det, nu, m))

    converged = False
    it = 0
    while it < opts.max_iter:
        it += 1
        u = (nu + m) / (nu + np.maximum(t, floor))
        mu_new = u @ X / u.sum()
        sigma_new = _weighted_scatter(X - mu_new, u) / n
        chol = _factor(sigma_new, "t-EM")
        t = mahalanobis_sq(X, mu_new, chol)
        nu_new = _update_nu(t, chol.log_det, nu, m, opts)
        dmu = _rel_change(mu_new, mu, 1.0 + np.linalg.norm(mu))
        dsig = _rel_change(sigma_new, sigma, np.linalg.norm(sigma))
        dnu = abs(nu_new - nu) / nu
        mu, sigma, nu = mu_new, sigma_new, nu_new
        if trace is not None:
            trace.append(_t_loglik(t, chol.log_det, nu, m))
        if max(dmu, dsig, dnu) <= opts.tol:
            converged = True
            break
    return StudentParams(ClassParams(mu, sigma, chol, n, it, converged), nu)


# --------------------------------------------------------------------------
# LDA pooling
# --------------------------------------------------------------------------

def pooled_covariance(per_class: Sequence[ClassParams]) -> NDArray:
    """``sum_k n_k Sigma_k / sum_k n_k``."""
    if len(per_class) == 0:
        raise ValueError("need at least one class")
    total = sum(p.n_obs for p in per_class)
    pooled = sum(p.n_obs * p.sigma for p in per_class) / total
    return symmetrize(pooled)
