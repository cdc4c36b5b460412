"""Synthetic heterogeneous elliptical data.

Points are drawn through the stochastic representations of three
elliptical families, each point with its own texture ``tau`` multiplying
the class scatter::

    GG(beta):  mu + sqrt(tau) Gamma(m/(2 beta), 2)^(1/(2 beta)) A u,  u ~ U(sphere)
    t(nu):     mu + sqrt(tau) A z / sqrt(Gamma(nu/2, 2/nu)),          z ~ N(0, I)
    K(nu):     mu + sqrt(tau) A z * sqrt(Gamma(nu, 1/nu))

with ``A A^T = Sigma`` and Gamma parameterized by (shape, scale).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .datasets import LabeledDataset, replaced_count
from .errors import ConfigError, ParseError, SumError
from .linalg import cholesky_spd, symmetrize
from .rng import substream

__all__ = [
    "Family",
    "ShapeMode",
    "EsPointSpec",
    "ScenarioSpec",
    "ClusterTruth",
    "BETA_RANGE",
    "NU_RANGE",
    "EIGEN_RANGE",
    "haar_orthogonal",
    "random_scatter",
    "random_cluster_params",
    "sample_es",
    "sample_es_point",
    "sample_class",
    "generate_scenario",
    "default_noise_scatter",
    "contaminate_synthetic",
    "parse_scenario_string",
    "format_proportions",
]

BETA_RANGE = (0.25, 10.0)
NU_RANGE = (1.0, 10.0)
EIGEN_RANGE = (1.0, 10.0)


class Family(enum.IntEnum):
    GeneralizedGaussian = 0
    StudentT = 1
    KDist = 2


class ShapeMode(str, enum.Enum):
    SharedPerCluster = "green"
    PerPoint = "red"

    @classmethod
    def parse(cls, value) -> "ShapeMode":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        for mode in cls:
            if v in (mode.value, mode.name.lower()):
                return mode
        raise ConfigError(f"unknown shape mode {value!r}; use 'green' or 'red'")


@dataclass(frozen=True)
class EsPointSpec:
    family: Family
    shape: float
    texture_tau: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.shape > 0 or not self.texture_tau > 0:
            raise ValueError("shape and texture must be positive")


@dataclass(frozen=True)
class ScenarioSpec:
    """Recipe of one synthetic experiment (defaults give the full-scale setting)."""

    m: int = 10
    K: int = 5
    n_train: int = 5000
    n_test: int = 20000
    proportions: tuple[float, float, float] = (1.0, 0.0, 0.0)
    shape_mode: ShapeMode = ShapeMode.SharedPerCluster
    contamination_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        props = tuple(float(p) for p in self.proportions)
        object.__setattr__(self, "proportions", props)
        object.__setattr__(self, "shape_mode", ShapeMode.parse(self.shape_mode))
        if len(props) != 3 or min(props) < 0 or abs(sum(props) - 1.0) > 1e-9:
            raise ConfigError(f"proportions must be 3 non-negative fractions summing to 1: {props}")
        if self.m < 2 or self.K < 1:
            raise ConfigError("need m >= 2 and K >= 1")
        if self.n_train < self.K or self.n_test < 0:
            raise ConfigError("need at least one training point per class")
        if not 0 <= self.contamination_rate < 1:
            raise ConfigError("contamination_rate must lie in [0, 1)")

    @property
    def name(self) -> str:
        return f"{self.shape_mode.value} {format_proportions(self.proportions)}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["proportions"] = list(self.proportions)
        d["shape_mode"] = self.shape_mode.value
        return d


@dataclass(frozen=True)
class ClusterTruth:
    mu: NDArray
    sigma: NDArray

    def __post_init__(self):
        for name in ("mu", "sigma"):
            a = np.array(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def root(self) -> NDArray:
        return cholesky_spd(self.sigma).lower


def haar_orthogonal(m: int, rng: np.random.Generator) -> NDArray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
    column signs fixed so that ``R`` has a positive diagonal."""
    Z = rng.standard_normal((m, m))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def random_scatter(m: int, rng: np.random.Generator, eigen_range=EIGEN_RANGE) -> NDArray:
    Q = haar_orthogonal(m, rng)
    lam = rng.uniform(*eigen_range, size=m)
    return symmetrize((Q * lam) @ Q.T)


def random_cluster_params(K: int, m: int, rng: np.random.Generator) -> list[ClusterTruth]:
    """Means uniform on the unit sphere, scatters ``Q diag(lambda) Q^T``."""
    if K < 1 or m < 2:
        raise ValueError("need K >= 1 and m >= 2")
    out = []
    for _ in range(K):
        g = rng.standard_normal(m)
        out.append(ClusterTruth(g / np.linalg.norm(g), random_scatter(m, rng)))
    return out


def _sphere(n: int, m: int, rng: np.random.Generator) -> NDArray:
    g = rng.standard_normal((n, m))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_es(
    truth: ClusterTruth,
    family: Family,
    shape: ArrayLike,
    tau: ArrayLike,
    rng: np.random.Generator,
    n: int | None = None,
) -> NDArray:
    """Draw points of one family; ``shape`` and ``tau`` broadcast to ``n``."""
    family = Family(family)
    shape = np.asarray(shape, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if n is None:
        n = int(np.broadcast(shape, tau).size)
    shape = np.broadcast_to(shape, (n,))
    tau = np.broadcast_to(tau, (n,))
    m = truth.mu.shape[0]
    A = truth.root
    if family is Family.GeneralizedGaussian:
        radius = rng.gamma(m / (2.0 * shape), 2.0) ** (1.0 / (2.0 * shape))
        Y = _sphere(n, m, rng) * radius[:, None]
    elif family is Family.StudentT:
        Y = rng.standard_normal((n, m)) / np.sqrt(rng.gamma(shape / 2.0, 2.0 / shape))[:, None]
    else:
        Y = rng.standard_normal((n, m)) * np.sqrt(rng.gamma(shape, 1.0 / shape))[:, None]
    return truth.mu + np.sqrt(tau)[:, None] * (Y @ A.T)


def sample_es_point(truth: ClusterTruth, spec: EsPointSpec, rng: np.random.Generator) -> NDArray:
    return sample_es(truth, spec.family, spec.shape, spec.texture_tau, rng, n=1)[0]


def _shape_draw(family: Family, rng: np.random.Generator, size=None):
    lo, hi = BETA_RANGE if family is Family.GeneralizedGaussian else NU_RANGE
    return rng.uniform(lo, hi, size=size)


def sample_class(
    truth: ClusterTruth,
    n: int,
    proportions,
    shape_mode: ShapeMode,
    rng: np.random.Generator,
    shared_shapes=None,
) -> tuple[NDArray, NDArray]:
    """Points of one cluster with per-point family and texture.

    Each point's family is drawn from ``proportions``; its texture from
    ``U(1, m)``. Under ``SharedPerCluster`` the three ``shared_shapes``
    (beta, nu_t, nu_k) are used for every point; under ``PerPoint`` a
    fresh shape is drawn per point.

    Returns
    -------
    X : ndarray, shape (n, m)
    families : ndarray of int, shape (n,)
    """
    m = truth.mu.shape[0]
    shape_mode = ShapeMode.parse(shape_mode)
    families = rng.choice(3, size=n, p=np.asarray(proportions, dtype=float))
    tau = rng.uniform(1.0, m, size=n)
    if shape_mode is ShapeMode.PerPoint:
        shapes = np.empty(n)
        for f in Family:
            mask = families == f
            shapes[mask] = _shape_draw(f, rng, size=int(mask.sum()))
    else:
        if shared_shapes is None:
            raise ValueError("SharedPerCluster needs the cluster's shape parameters")
        shapes = np.asarray(shared_shapes, dtype=float)[families]
    X = np.empty((n, m))
    for f in Family:
        mask = families == f
        if mask.any():
            X[mask] = sample_es(truth, f, shapes[mask], tau[mask], rng)
    return X, families


def _split_counts(n: int, K: int) -> list[int]:
    base, extra = divmod(n, K)
    return [base + (1 if k < extra else 0) for k in range(K)]


def _assemble(parts: list[NDArray], K: int, source: str) -> LabeledDataset:
    y = np.concatenate([np.full(p.shape[0], k, dtype=np.int64) for k, p in enumerate(parts)])
    return LabeledDataset(np.vstack(parts), y, tuple(f"C{k}" for k in range(K)), source)


def generate_scenario(spec: ScenarioSpec, repetition: int = 0):
    """Draw cluster truths, a training set and a clean test set.

    All randomness comes from substreams keyed by ``(spec.seed, repetition,
    role, class)``, so the result is a pure function of its arguments and
    classes can be generated in any order. Rows are ordered by class.
    Training contamination is not applied here; see
    :func:`contaminate_synthetic`.

    Returns
    -------
    train, test : LabeledDataset
    truths : list of ClusterTruth
    """
    seed, rep = spec.seed, repetition
    truths = random_cluster_params(spec.K, spec.m, substream(seed, rep, "truth"))
    shared = [
        [_shape_draw(f, substream(seed, rep, "shapes", k)) for f in Family]
        if spec.shape_mode is ShapeMode.SharedPerCluster else None
        for k in range(spec.K)
    ]
    out = []
    for role, n in (("train", spec.n_train), ("test", spec.n_test)):
        parts = [
            sample_class(truths[k], n_k, spec.proportions, spec.shape_mode,
                         substream(seed, rep, role, k), shared[k])[0]
            for k, n_k in enumerate(_split_counts(n, spec.K))
        ]
        out.append(_assemble(parts, spec.K, f"synthetic:{spec.name}:rep{rep}:{role}"))
    return out[0], out[1], truths


def default_noise_scatter(m: int, rng: np.random.Generator) -> NDArray:
    """Random scatter with average eigenvalue ``m`` (trace ``m * m``)."""
    S = random_scatter(m, rng)
    return S * (m * m / np.trace(S))


def contaminate_synthetic(
    ds: LabeledDataset, rate: float, noise_sigma: ArrayLike, rng: np.random.Generator
) -> LabeledDataset:
    """Replace ``floor(rate * n)`` random rows by ``N(0, noise_sigma)`` draws.

    Labels are kept.
    """
    count = replaced_count(rate, ds.n)
    if count == 0:
        return ds
    L = cholesky_spd(symmetrize(noise_sigma)).lower
    rows = rng.choice(ds.n, size=count, replace=False)
    X = ds.features.copy()
    X[rows] = rng.standard_normal((count, ds.m)) @ L.T
    return ds.with_features(X, f"{ds.source}+noise{rate:g}")


_NUM = r"\d+(?:\.\d*)?(?:/\d+(?:\.\d*)?)?|\.\d+"
_FULL = re.compile(rf"^({_NUM})\s*GG\s*-\s*({_NUM})\s*T\s*-\s*({_NUM})\s*K$", re.IGNORECASE)
_SHORT = re.compile(rf"^({_NUM})\s*-\s*({_NUM})\s*-\s*({_NUM})$")


def _fraction(tok: str) -> float:
    return float(Fraction(tok)) if "/" in tok else float(tok)


def parse_scenario_string(s: str) -> tuple[float, float, float]:
    """Parse ``"0.5GG-0.3T-0.2K"`` or the short form ``"1/2-1/2-0"``.

    Raises
    ------
    ParseError
        Text not in either grammar.
    SumError
        Fractions not summing to one within ``1e-9``.
    """
    text = s.strip().replace("−", "-").replace("–", "-")
    match = _FULL.match(text) or _SHORT.match(text)
    if match is None:
        raise ParseError(f"malformed scenario string {s!r}")
    try:
        fracs = tuple(_fraction(g) for g in match.groups())
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"malformed fraction in {s!r}") from None
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise SumError(f"scenario fractions {fracs} sum to {sum(fracs):g}, not 1")
    return fracs


def format_proportions(props) -> str:
    """Short Table-1 style label, e.g. ``1-0-0`` or ``1/3-1/3-1/3``."""
    out = []
    for p in props:
        fr = Fraction(p).limit_denominator(12)
        if math.isclose(float(fr), p, abs_tol=1e-9):
            out.append(str(fr.numerator) if fr.denominator == 1 else f"{fr.numerator}/{fr.denominator}")
        else:
            out.append(f"{p:g}")
    return "-".join(out)
