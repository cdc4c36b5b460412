"""Decision rules and evaluation.

All rules use uniform class priors and break ties toward the lowest class
index (``numpy.argmax`` semantics). Scores are "higher is better".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gammaln

from .errors import EmptyGrid, LengthMismatch
from .estimators import (
    ClassParams,
    FitOptions,
    StudentParams,
    fit_femda,
    fit_gaussian,
    fit_huber_m,
    fit_student_em,
    pooled_covariance,
)

__all__ = [
    "Kind",
    "FittedModel",
    "Prediction",
    "Evaluation",
    "GQDA_GRID",
    "femda_scores",
    "qda_scores",
    "tqda_scores",
    "gqda_scores",
    "score_matrix",
    "argmax_lowest",
    "gqda_select_c",
    "fit_model",
    "predict",
    "predict_labels",
    "evaluate",
]


class Kind(str, enum.Enum):
    FEMDA = "FEMDA"
    QDA = "QDA"
    LDA = "LDA"
    RobustQDA = "RobustQDA"
    TQDA = "TQDA"
    GQDA = "GQDA"
    RGQDA = "RGQDA"

    @classmethod
    def parse(cls, name: str) -> "Kind":
        key = "".join(ch for ch in name.lower() if ch.isalnum())
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown method {name!r}; expected one of {[k.value for k in cls]}")


# c in {0.05, 0.10, ..., 5.00}
GQDA_GRID: tuple[float, ...] = tuple(round(0.05 * i, 2) for i in range(1, 101))


@dataclass(frozen=True)
class FittedModel:
    kind: Kind
    classes: tuple
    class_labels: tuple
    threshold_c: float | None = None
    t_floor: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        if not self.classes:
            raise ValueError("a model needs at least one class")
        if len(self.classes) != len(self.class_labels):
            raise ValueError("one label per class block is required")
        dims = {p.mu.shape[0] for p in self.classes}
        if len(dims) != 1:
            raise ValueError(f"class blocks disagree on dimension: {sorted(dims)}")
        has_c = self.threshold_c is not None
        if has_c != (self.kind in (Kind.GQDA, Kind.RGQDA)):
            raise ValueError("threshold_c is required for GQDA/RGQDA and only for them")
        if self.kind is Kind.TQDA and not all(isinstance(p, StudentParams) for p in self.classes):
            raise ValueError("TQDA models need StudentParams blocks")

    @property
    def dim(self) -> int:
        return self.classes[0].mu.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def iterations(self) -> int:
        return max(p.iterations for p in self.classes)

    @property
    def converged(self) -> bool:
        return all(p.converged for p in self.classes)


@dataclass(frozen=True)
class Prediction:
    label_index: int
    scores: NDArray


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    confusion: NDArray


def _rows(x: ArrayLike, m: int) -> tuple[NDArray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != m:
        raise ValueError(f"dimension mismatch: model has m={m}, input shape {x.shape}")
    return X, single


def _distances(X: NDArray, model: FittedModel) -> NDArray:
    return np.column_stack([p.mahalanobis_sq(X) for p in model.classes])


def _log_dets(model: FittedModel) -> NDArray:
    return np.array([p.chol.log_det for p in model.classes])


def _out(S: NDArray, single: bool) -> NDArray:
    return S[0] if single else S


# scores this close to the row maximum count as tied
TIE_RTOL = 1e-12


def argmax_lowest(S: ArrayLike) -> NDArray:
    """Row-wise argmax; near-ties go to the lowest class index.

    Proportional scatters give FEMDA scores that agree only up to rounding,
    so exact comparison would break their tie at random.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    best = S.max(axis=1, keepdims=True)
    return np.argmax(S >= best - TIE_RTOL * np.maximum(1.0, np.abs(best)), axis=1)


def femda_scores(x: ArrayLike, model: FittedModel) -> NDArray:
    """``-[(1/m) log|Sigma_k| + log t_k]`` per class.

    Invariant to any positive per-class rescaling of the scatters.
    """
    m = model.dim
    X, single = _rows(x, m)
    floor = model.t_floor if model.t_floor is not None else 1e-10 * m
    T = np.maximum(_distances(X, model), floor)
    return _out(-(_log_dets(model) / m + np.log(T)), single)


def qda_scores(x: ArrayLike, model: FittedModel) -> NDArray:
    """Gaussian log-likelihood up to constants: ``-(log|Sigma_k| + t_k)/2``."""
    X, single = _rows(x, model.dim)
    return _out(-0.5 * (_log_dets(model) + _distances(X, model)), single)


def tqda_scores(x: ArrayLike, model: FittedModel) -> NDArray:
    """Multivariate-t log-density of each class, one ``nu`` per class."""
    m = model.dim
    X, single = _rows(x, m)
    nu = np.array([p.nu for p in model.classes])
    const = (
        gammaln(0.5 * (nu + m))
        - gammaln(0.5 * nu)
        - 0.5 * m * np.log(nu * np.pi)
        - 0.5 * _log_dets(model)
    )
    S = const - 0.5 * (nu + m) * np.log1p(_distances(X, model) / nu)
    return _out(S, single)


def gqda_scores(x: ArrayLike, model: FittedModel, c: float | None = None) -> NDArray:
    """``-(t_k + c log|Sigma_k|)``; ``c`` defaults to the model threshold."""
    X, single = _rows(x, model.dim)
    c = model.threshold_c if c is None else c
    return _out(-(_distances(X, model) + c * _log_dets(model)), single)


def score_matrix(model: FittedModel, X: ArrayLike) -> NDArray:
    """(n, K) scores from the rule that belongs to ``model.kind``."""
    kind = model.kind
    if kind is Kind.FEMDA:
        return femda_scores(X, model)
    if kind in (Kind.QDA, Kind.LDA, Kind.RobustQDA):
        return qda_scores(X, model)
    if kind is Kind.TQDA:
        return tqda_scores(X, model)
    return gqda_scores(X, model)


def gqda_select_c(
    X: ArrayLike,
    y: ArrayLike,
    per_class: Sequence[ClassParams],
    grid: Sequence[float] = GQDA_GRID,
) -> float:
    """Pick the threshold ``c`` with the fewest training errors.

    Ties go to the ``c`` closest to 1, then to the smaller ``c``.
    """
    grid = [float(c) for c in grid]
    if not grid:
        raise EmptyGrid("GQDA threshold grid is empty")
    if len(per_class) < 2:
        raise ValueError("threshold selection needs at least two classes")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    T = np.column_stack([p.mahalanobis_sq(X) for p in per_class])
    ld = np.array([p.chol.log_det for p in per_class])
    errors = [int(np.sum(argmax_lowest(-(T + c * ld)) != y)) for c in grid]
    return min(zip(errors, grid), key=lambda ec: (ec[0], abs(ec[1] - 1.0), ec[1]))[1]


def _split_classes(X: NDArray, y: NDArray, n_classes: int) -> list[NDArray]:
    return [X[y == k] for k in range(n_classes)]


def fit_model(
    kind,
    X: ArrayLike,
    y: ArrayLike,
    opts: FitOptions | None = None,
    class_labels: Sequence | None = None,
    grid: Sequence[float] = GQDA_GRID,
) -> FittedModel:
    """Estimate per-class parameters for ``kind`` and package a model.

    Labels must be integers in ``[0, K)``; every class needs ``> m`` rows.
    """
    if not isinstance(kind, Kind):
        kind = Kind.parse(str(kind))
    opts = opts or FitOptions()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
    K = int(y.max()) + 1 if class_labels is None else len(class_labels)
    labels = tuple(range(K)) if class_labels is None else tuple(class_labels)
    parts = _split_classes(X, y, K)

    c = None
    if kind is Kind.FEMDA:
        blocks = [fit_femda(P, opts) for P in parts]
    elif kind in (Kind.QDA, Kind.GQDA):
        blocks = [fit_gaussian(P) for P in parts]
    elif kind in (Kind.RobustQDA, Kind.RGQDA):
        blocks = [fit_huber_m(P, opts) for P in parts]
    elif kind is Kind.TQDA:
        blocks = [fit_student_em(P, opts) for P in parts]
    elif kind is Kind.LDA:
        per = [fit_gaussian(P) for P in parts]
        shared = pooled_covariance(per)
        blocks = [ClassParams.build(p.mu, shared, p.n_obs) for p in per]
    else:  # pragma: no cover
        raise ValueError(kind)
    if kind in (Kind.GQDA, Kind.RGQDA):
        c = gqda_select_c(X, y, blocks, grid)
    floor = opts.floor_for(X.shape[1]) if kind is Kind.FEMDA else None
    return FittedModel(kind, blocks, labels, threshold_c=c, t_floor=floor)


def predict_labels(model: FittedModel, X: ArrayLike) -> NDArray:
    return argmax_lowest(score_matrix(model, np.atleast_2d(X)))


def predict(model: FittedModel, X: ArrayLike) -> list[Prediction]:
    """Score every row of ``X`` and return one :class:`Prediction` each."""
    S = score_matrix(model, np.atleast_2d(X))
    idx = argmax_lowest(S)
    return [Prediction(int(k), s) for k, s in zip(idx, S)]


def evaluate(preds: ArrayLike, truth: ArrayLike, n_classes: int | None = None) -> Evaluation:
    """Accuracy and the confusion matrix ``C[i, j] = #(truth i, predicted j)``."""
    preds = np.asarray(preds, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if preds.shape != truth.shape:
        raise LengthMismatch(f"{preds.size} predictions for {truth.size} labels")
    if n_classes is None:
        n_classes = int(max(preds.max(initial=-1), truth.max(initial=-1))) + 1
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (truth, preds), 1)
    accuracy = float(np.mean(preds == truth)) if truth.size else float("nan")
    return Evaluation(accuracy, confusion)
