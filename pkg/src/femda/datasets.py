"""Labeled datasets, the three UCI loaders, splitting and box contamination."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import EmptyClass, ParseError, SchemaMismatch

__all__ = [
    "LabeledDataset",
    "DatasetSchema",
    "SCHEMAS",
    "SPAMBASE",
    "ECOLI",
    "STATLOG",
    "get_schema",
    "load_dataset",
    "check_shape",
    "shuffle_split",
    "contaminate_real",
    "replaced_count",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledDataset:
    """``n`` observations in R^m with integer labels in ``[0, K)``."""

    features: NDArray
    labels: NDArray
    label_names: tuple[str, ...]
    source: str = ""

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.labels, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(f"features {X.shape} and labels {y.shape} do not align")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        names = tuple(str(s) for s in self.label_names)
        if y.size and (y.min() < 0 or y.max() >= len(names)):
            raise ValueError("labels reference unknown class names")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "label_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def class_counts(self) -> NDArray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def take(self, rows: ArrayLike, source: str | None = None) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(
            self.features[rows], self.labels[rows], self.label_names,
            self.source if source is None else source,
        )

    def with_features(self, features: ArrayLike, source: str | None = None) -> "LabeledDataset":
        return LabeledDataset(
            features, self.labels, self.label_names, self.source if source is None else source
        )


@dataclass(frozen=True)
class DatasetSchema:
    """How to parse one of the supported text formats.

    ``delimiter`` is ``"comma"`` or ``"whitespace"``. ``drop_columns``
    index the raw tokens of a line, before the label is split off.
    """

    name: str
    n_features: int
    delimiter: str
    label_position: str = "last"
    drop_columns: tuple[int, ...] = ()
    min_class_size: int = 0
    expected_rows: int | None = None
    allowed_labels: tuple[str, ...] | None = None
    urls: tuple[str, ...] = ()
    contamination_box: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.delimiter not in ("comma", "whitespace"):
            raise ValueError(f"unknown delimiter {self.delimiter!r}")
        if self.label_position not in ("first", "last"):
            raise ValueError(f"unknown label position {self.label_position!r}")

    @property
    def n_tokens(self) -> int:
        return self.n_features + 1 + len(self.drop_columns)

    def box(self) -> tuple[NDArray, NDArray]:
        lo, hi = self.contamination_box
        return np.full(self.n_features, lo), np.full(self.n_features, hi)


_UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"

SPAMBASE = DatasetSchema(
    name="spambase",
    n_features=57,
    delimiter="comma",
    min_class_size=2 * (57 + 1),
    expected_rows=4601,
    allowed_labels=("0", "1"),
    urls=(f"{_UCI}/spambase/spambase.data",),
    contamination_box=(0.0, 100.0),
)
ECOLI = DatasetSchema(
    name="ecoli",
    n_features=7,
    delimiter="whitespace",
    drop_columns=(0,),
    min_class_size=2 * (7 + 1),
    expected_rows=336,
    urls=(f"{_UCI}/ecoli/ecoli.data",),
    contamination_box=(0.0, 1.0),
)
STATLOG = DatasetSchema(
    name="statlog",
    n_features=36,
    delimiter="whitespace",
    min_class_size=2 * (36 + 1),
    expected_rows=4435 + 2000,
    allowed_labels=("1", "2", "3", "4", "5", "7"),
    urls=(f"{_UCI}/statlog/satimage/sat.trn", f"{_UCI}/statlog/satimage/sat.tst"),
    contamination_box=(0.0, 200.0),
)
SCHEMAS = {s.name: s for s in (SPAMBASE, ECOLI, STATLOG)}


def get_schema(name: str) -> DatasetSchema:
    try:
        return SCHEMAS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown dataset {name!r}; expected one of {sorted(SCHEMAS)}") from None


def _tokens(line: str, delimiter: str) -> list[str]:
    if delimiter == "comma":
        return [tok.strip() for tok in line.split(",")]
    return line.split()


def _canonical_label(tok: str) -> str:
    try:
        value = float(tok)
    except ValueError:
        return tok
    return str(int(value)) if value.is_integer() else tok


def _label_order(names: Iterable[str]) -> list[str]:
    names = list(names)
    try:
        return sorted(names, key=float)
    except ValueError:
        return sorted(names)


def _parse_lines(lines: Iterable[str], schema: DatasetSchema, where: str):
    rows, labels = [], []
    keep = [i for i in range(schema.n_tokens) if i not in set(schema.drop_columns)]
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        toks = _tokens(line, schema.delimiter)
        if len(toks) != schema.n_tokens:
            raise SchemaMismatch(
                f"{where}: line {lineno}: expected {schema.n_tokens} columns for "
                f"{schema.name}, found {len(toks)}"
            )
        toks = [toks[i] for i in keep]
        if schema.label_position == "last":
            label, values = toks[-1], toks[:-1]
        else:
            label, values = toks[0], toks[1:]
        try:
            row = [float(v) for v in values]
        except ValueError as exc:
            raise ParseError(f"{where}: non-numeric feature ({exc})", line=lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError(f"{where}: non-finite feature value", line=lineno)
        label = _canonical_label(label)
        if schema.allowed_labels is not None and label not in schema.allowed_labels:
            raise ParseError(f"{where}: unexpected class label {label!r}", line=lineno)
        rows.append(row)
        labels.append(label)
    return rows, labels


def load_dataset(
    path: str | os.PathLike | Sequence[str | os.PathLike],
    schema: DatasetSchema | str,
) -> LabeledDataset:
    """Parse one file, or several concatenated in order, under ``schema``.

    Classes with fewer than ``schema.min_class_size`` rows are dropped and
    the drop is logged at WARNING level, as is a total row count that
    differs from the canonical one.

    Raises
    ------
    ParseError
        Non-numeric or non-finite feature, or an unexpected label.
    SchemaMismatch
        Wrong number of columns on a line.
    EmptyClass
        Nothing left after class filtering.
    """
    if isinstance(schema, str):
        schema = get_schema(schema)
    paths = [path] if isinstance(path, (str, os.PathLike)) else list(path)
    rows, labels = [], []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            r, lab = _parse_lines(fh, schema, os.fspath(p))
        rows.extend(r)
        labels.extend(lab)
    source = f"{schema.name}:" + "+".join(os.path.basename(os.fspath(p)) for p in paths)
    if schema.expected_rows is not None and len(rows) != schema.expected_rows:
        log.warning(
            "%s: read %d rows, canonical file has %d", schema.name, len(rows), schema.expected_rows
        )
    if not rows:
        raise EmptyClass(f"{source}: no data rows")

    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    dropped = {k: v for k, v in counts.items() if v < schema.min_class_size}
    if dropped:
        log.warning(
            "%s: dropping classes smaller than %d rows: %s",
            schema.name, schema.min_class_size,
            ", ".join(f"{k} ({v})" for k, v in sorted(dropped.items())),
        )
    names = _label_order(k for k in counts if k not in dropped)
    if not names:
        raise EmptyClass(f"{source}: every class is below min_class_size={schema.min_class_size}")
    index = {k: i for i, k in enumerate(names)}
    kept = [i for i, lab in enumerate(labels) if lab in index]
    X = np.array([rows[i] for i in kept], dtype=float).reshape(len(kept), schema.n_features)
    y = np.array([index[labels[i]] for i in kept], dtype=np.int64)
    return LabeledDataset(X, y, tuple(names), source)


def check_shape(path, schema: DatasetSchema | str) -> dict:
    """Raw row/column counts of a file versus the canonical expectation."""
    if isinstance(schema, str):
        schema = get_schema(schema)
    paths = [path] if isinstance(path, (str, os.PathLike)) else list(path)
    n_rows, widths = 0, set()
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    n_rows += 1
                    widths.add(len(_tokens(line.strip(), schema.delimiter)))
    return {
        "rows": n_rows,
        "columns": sorted(widths),
        "expected_rows": schema.expected_rows,
        "expected_columns": schema.n_tokens,
        "ok": n_rows == schema.expected_rows and widths == {schema.n_tokens},
    }


def shuffle_split(
    ds: LabeledDataset, train_fraction: float, rng: np.random.Generator
) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified random split; each class contributes ``floor(f * n_k)`` rows.

    Rows keep their original relative order inside each part.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    train_idx, test_idx = [], []
    for k in range(ds.n_classes):
        rows = np.flatnonzero(ds.labels == k)
        if rows.size == 0:
            continue
        n_train = math.floor(train_fraction * rows.size + 1e-9)
        if n_train == 0:
            raise EmptyClass(
                f"class {ds.label_names[k]!r} ({rows.size} rows) gets no training rows"
            )
        perm = rng.permutation(rows)
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return ds.take(train, ds.source + "/train"), ds.take(test, ds.source + "/test")


def replaced_count(rate: float, n: int) -> int:
    """``floor(rate * n)``, robust to representation error in ``rate``."""
    if not 0 <= rate < 1:
        raise ValueError(f"contamination rate must lie in [0, 1), got {rate}")
    return math.floor(rate * n + 1e-9)


def contaminate_real(
    ds: LabeledDataset,
    rate: float,
    box_low: ArrayLike,
    box_high: ArrayLike,
    rng: np.random.Generator,
) -> LabeledDataset:
    """Redraw ``floor(rate * n)`` random rows i.i.d. uniform on the box.

    Labels are left untouched.
    """
    low = np.broadcast_to(np.asarray(box_low, dtype=float), (ds.m,))
    high = np.broadcast_to(np.asarray(box_high, dtype=float), (ds.m,))
    if np.any(low >= high):
        raise ValueError("box_low must be strictly below box_high")
    count = replaced_count(rate, ds.n)
    if count == 0:
        return ds
    rows = rng.choice(ds.n, size=count, replace=False)
    X = ds.features.copy()
    X[rows] = rng.uniform(low, high, size=(count, ds.m))
    return ds.with_features(X, f"{ds.source}+box{rate:g}")
