import logging
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from femda.datasets import (
    ECOLI,
    SPAMBASE,
    STATLOG,
    LabeledDataset,
    check_shape,
    contaminate_real,
    get_schema,
    load_dataset,
    replaced_count,
    shuffle_split,
)
from femda.errors import EmptyClass, ParseError, SchemaMismatch
from femda.rng import substream

DATA = Path(__file__).parent / "data"

# parsing tests on small fixtures skip the class-size filter
SPAM_RAW = replace(SPAMBASE, min_class_size=0)
STAT_RAW = replace(STATLOG, min_class_size=0)

# public class sizes of the UCI Ecoli file
ECOLI_COUNTS = {"cp": 143, "im": 77, "pp": 52, "imU": 35, "om": 20, "omL": 5, "imL": 2, "imS": 2}


def write_ecoli(path, counts=ECOLI_COUNTS, seed=0):
    g = np.random.default_rng(seed)
    lines = []
    for name, c in counts.items():
        for i in range(c):
            vals = "  ".join(f"{v:.2f}" for v in g.uniform(0, 1, 7))
            lines.append(f"{name.upper()}{i:03d}_ECOLI  {vals}  {name}")
    path.write_text("\n".join(lines) + "\n")
    return path


def spam_line(values, label):
    return ",".join(str(v) for v in values) + f",{label}"


# ---------------------------------------------------------------- schemas

def test_schemas():
    assert (SPAMBASE.n_features, ECOLI.n_features, STATLOG.n_features) == (57, 7, 36)
    assert ECOLI.min_class_size == 16
    lo, hi = SPAMBASE.box()
    assert lo.shape == (57,) and lo.max() == 0 and hi.min() == 100
    assert STATLOG.contamination_box == (0.0, 200.0) and ECOLI.contamination_box == (0.0, 1.0)
    assert get_schema("Spambase") is SPAMBASE
    with pytest.raises(KeyError):
        get_schema("iris")


# ---------------------------------------------------------------- Spambase

def test_spambase_golden_fragment():
    ds = load_dataset(DATA / "spambase_fragment.data", SPAM_RAW)
    expected = np.zeros((3, 57))
    nonzero = {
        0: {1: 0.64, 2: 0.64, 4: 0.32, 11: 0.64, 15: 0.32, 17: 1.29, 18: 1.93, 20: 0.96,
            51: 0.778, 54: 3.756, 55: 61, 56: 278},
        1: {0: 0.21, 1: 0.28, 2: 0.5, 4: 0.14, 5: 0.28, 6: 0.21, 7: 0.07, 9: 0.94, 10: 0.21,
            11: 0.79, 12: 0.65, 13: 0.21, 14: 0.14, 15: 0.14, 16: 0.07, 17: 0.28, 18: 3.47,
            20: 1.59, 22: 0.43, 23: 0.43, 36: 0.07, 49: 0.132, 51: 0.372, 52: 0.18, 53: 0.048,
            54: 5.114, 55: 101, 56: 1028},
        2: {12: 1.5, 18: 2.5, 24: 3.1, 49: 0.25, 54: 1.2, 55: 4, 56: 30},
    }
    for i, row in nonzero.items():
        for j, v in row.items():
            expected[i, j] = v
    np.testing.assert_array_equal(ds.features, expected)
    assert ds.label_names == ("0", "1")
    np.testing.assert_array_equal(ds.labels, [1, 1, 0])
    assert ds.source == "spambase:spambase_fragment.data"


def test_spambase_filter_empties_fragment():
    with pytest.raises(EmptyClass):
        load_dataset(DATA / "spambase_fragment.data", SPAMBASE)


def test_load_is_idempotent():
    a = load_dataset(DATA / "spambase_fragment.data", SPAM_RAW)
    b = load_dataset(DATA / "spambase_fragment.data", SPAM_RAW)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_row_count_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="femda.datasets"):
        load_dataset(DATA / "spambase_fragment.data", SPAM_RAW)
    assert "canonical file has 4601" in caplog.text


def test_non_numeric_feature_names_line(tmp_path):
    good = spam_line([0] * 57, 0)
    bad = spam_line([0] * 20 + ["abc"] + [0] * 36, 1)
    p = tmp_path / "bad.data"
    p.write_text(f"{good}\n{good}\n{bad}\n")
    with pytest.raises(ParseError, match="line 3") as info:
        load_dataset(p, SPAMBASE)
    assert info.value.line == 3


def test_non_finite_feature(tmp_path):
    p = tmp_path / "nan.data"
    p.write_text(spam_line([0] * 56 + ["nan"], 0) + "\n")
    with pytest.raises(ParseError, match="line 1"):
        load_dataset(p, SPAMBASE)


def test_wrong_column_count(tmp_path):
    p = tmp_path / "short.data"
    p.write_text(spam_line([0] * 57, 0) + "\n" + spam_line([0] * 50, 1) + "\n")
    with pytest.raises(SchemaMismatch, match="line 2"):
        load_dataset(p, SPAMBASE)


def test_unexpected_label(tmp_path):
    p = tmp_path / "label.data"
    p.write_text(spam_line([0] * 57, 2) + "\n")
    with pytest.raises(ParseError):
        load_dataset(p, SPAMBASE)


def test_blank_lines_skipped(tmp_path):
    p = tmp_path / "blank.data"
    p.write_text("\n" + spam_line([1] * 57, 0) + "\n\n" + spam_line([2] * 57, 1) + "\n")
    ds = load_dataset(p, SPAM_RAW)
    assert ds.n == 2


# ---------------------------------------------------------------- Ecoli

def test_ecoli_raw_and_filtered(tmp_path, caplog):
    p = write_ecoli(tmp_path / "ecoli.data")
    rows = check_shape(p, "ecoli")
    assert rows["rows"] == 336 and rows["columns"] == [9] and rows["ok"]

    raw_schema = replace(ECOLI, min_class_size=0)
    raw = load_dataset(p, raw_schema)
    assert raw.n == 336 and raw.m == 7 and raw.n_classes == 8

    with caplog.at_level(logging.WARNING, logger="femda.datasets"):
        ds = load_dataset(p, "ecoli")
    assert "imL (2)" in caplog.text and "omL (5)" in caplog.text
    assert set(ds.label_names) == {"cp", "im", "pp", "imU", "om"}
    assert ds.n == 336 - 9
    assert ds.class_counts().min() >= ECOLI.min_class_size


def test_ecoli_everything_filtered(tmp_path):
    p = write_ecoli(tmp_path / "tiny.data", {"cp": 3, "im": 4})
    with pytest.raises(EmptyClass):
        load_dataset(p, ECOLI)


# ---------------------------------------------------------------- Statlog

def statlog_lines(labels, seed=0):
    g = np.random.default_rng(seed)
    return "".join(" ".join(str(v) for v in g.integers(0, 160, 36)) + f" {lab}\n" for lab in labels)


def test_statlog_concatenation_and_label_order(tmp_path):
    a = tmp_path / "sat.trn"
    b = tmp_path / "sat.tst"
    a.write_text(statlog_lines([7, 1, 2] * 30))
    b.write_text(statlog_lines([3, 4, 5] * 30, seed=1))
    ds = load_dataset([a, b], STAT_RAW)
    assert ds.label_names == ("1", "2", "3", "4", "5", "7")
    assert ds.n == 180 and ds.m == 36
    assert ds.source == "statlog:sat.trn+sat.tst"


def test_statlog_rejects_label_six(tmp_path):
    p = tmp_path / "sat.trn"
    p.write_text(statlog_lines([1, 6]))
    with pytest.raises(ParseError, match="line 2"):
        load_dataset(p, STATLOG)


# ---------------------------------------------------------------- LabeledDataset

def test_dataset_validation():
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((3, 2)), [0, 1], ("a", "b"))
    with pytest.raises(ValueError):
        LabeledDataset(np.array([[np.inf, 0.0]]), [0], ("a",))
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((1, 2)), [3], ("a",))


# ---------------------------------------------------------------- splitting

def one_class(n):
    return LabeledDataset(np.arange(2 * n, dtype=float).reshape(n, 2), np.zeros(n, int), ("a",))


def test_split_70_30():
    train, test = shuffle_split(one_class(100), 0.7, substream(0))
    assert (train.n, test.n) == (70, 30)


def test_split_deterministic():
    ds = one_class(50)
    a, _ = shuffle_split(ds, 0.7, substream(4, "split"))
    b, _ = shuffle_split(ds, 0.7, substream(4, "split"))
    c, _ = shuffle_split(ds, 0.7, substream(5, "split"))
    np.testing.assert_array_equal(a.features, b.features)
    assert not np.array_equal(a.features, c.features)


def test_split_empty_class():
    ds = LabeledDataset(np.zeros((11, 1)), [0] * 10 + [1], ("a", "b"))
    with pytest.raises(EmptyClass):
        shuffle_split(ds, 0.7, substream(0))


@pytest.mark.parametrize("f", [0.0, 1.0, -0.2])
def test_split_fraction_validation(f):
    with pytest.raises(ValueError):
        shuffle_split(one_class(10), f, substream(0))


@settings(max_examples=40, deadline=None)
@given(
    counts=st.lists(st.integers(2, 60), min_size=1, max_size=5),
    f=st.floats(0.5, 0.9),
    seed=st.integers(0, 1000),
)
def test_split_partition_and_stratification(counts, f, seed):
    y = np.repeat(np.arange(len(counts)), counts)
    X = np.arange(y.size, dtype=float)[:, None]
    ds = LabeledDataset(X, y, tuple(map(str, range(len(counts)))))
    train, test = shuffle_split(ds, f, substream(seed))
    ids_tr, ids_te = train.features[:, 0], test.features[:, 0]
    assert not set(ids_tr) & set(ids_te)
    np.testing.assert_array_equal(np.sort(np.r_[ids_tr, ids_te]), X[:, 0])
    for k, c in enumerate(counts):
        assert abs(int(np.sum(train.labels == k)) - f * c) < 1.0 + 1e-9
        assert np.all(y[ids_tr[train.labels == k].astype(int)] == k)


# ---------------------------------------------------------------- contamination

def test_replaced_count():
    assert replaced_count(0.25, 5000) == 1250
    assert replaced_count(0.7, 10) == 7
    with pytest.raises(ValueError):
        replaced_count(1.0, 10)


def test_contaminate_real_zero_rate():
    ds = one_class(20)
    assert contaminate_real(ds, 0.0, 0.0, 1.0, substream(0)) is ds


def test_contaminate_real_box():
    g = np.random.default_rng(0)
    ds = LabeledDataset(g.uniform(-5, -1, (500, 57)), g.integers(0, 2, 500), ("0", "1"))
    lo, hi = SPAMBASE.box()
    out = contaminate_real(ds, 0.4, lo, hi, substream(1))
    changed = np.any(out.features != ds.features, axis=1)
    assert changed.sum() == 200
    assert np.all((out.features[changed] >= 0) & (out.features[changed] <= 100))
    np.testing.assert_array_equal(out.labels, ds.labels)


def test_contaminate_real_bad_box():
    with pytest.raises(ValueError):
        contaminate_real(one_class(5), 0.2, 1.0, 1.0, substream(0))
