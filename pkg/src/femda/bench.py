"""Benchmark protocols: synthetic sweeps, real-data contamination curves and
timing, plus CSV/Markdown/JSON report rendering.

Results that do not depend on the machine (accuracies, iteration counts)
go to ``results.csv`` and are byte-identical across re-runs with the same
configuration; wall-clock measurements go to ``timings.csv``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .classifiers import Kind, evaluate, fit_model, predict_labels
from .datasets import LabeledDataset, contaminate_real, get_schema, load_dataset, shuffle_split
from .errors import ConfigError, DegenerateClass
from .estimators import FitOptions
from .rng import substream
from .synthgen import (
    ScenarioSpec,
    ShapeMode,
    contaminate_synthetic,
    default_noise_scatter,
    generate_scenario,
    parse_scenario_string,
)

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "MethodSummary",
    "ScenarioResult",
    "BenchReport",
    "STANDARD_SCENARIOS",
    "parse_scenario_entry",
    "config_from_mapping",
    "load_config",
    "run_synthetic",
    "run_real",
    "run_timing",
    "run",
    "render_report",
    "write_report",
]

MODES = ("synthetic", "real", "timing")

# the ten standard synthetic scenario rows, in order
STANDARD_SCENARIOS = (
    "green:1-0-0", "green:0-1-0", "green:0-0-1",
    "red:1-0-0", "red:0-1-0", "red:0-0-1",
    "green:1/2-1/2-0", "red:1/2-1/2-0",
    "green:1/3-1/3-1/3", "red:1/3-1/3-1/3",
)


def parse_scenario_entry(entry: str, default_mode="green") -> tuple[tuple[float, float, float], ShapeMode]:
    """``"red:1/3-1/3-1/3"`` -> (proportions, mode); the prefix is optional."""
    mode = default_mode
    text = entry.strip()
    for sep in (":", " "):
        head, _, tail = text.partition(sep)
        if tail and head.strip().lower() in ("green", "red"):
            mode, text = head.strip(), tail.strip()
            break
    return parse_scenario_string(text), ShapeMode.parse(mode)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "synthetic"
    methods: tuple[Kind, ...] = tuple(Kind)
    repetitions: int = 20
    seed: int = 0
    fit_options: FitOptions = field(default_factory=FitOptions)
    output_dir: str | None = None
    jobs: int = 1
    # synthetic / timing
    scenarios: tuple[ScenarioSpec, ...] = ()
    # real
    dataset: str | None = None
    data_paths: tuple[str, ...] = ()
    train_fraction: float = 0.7
    contamination_schedule: tuple[float, ...] = (0.0,)
    reshuffle_every: int = 10
    standardize: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate methods")
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ConfigError("repetitions must be a positive integer")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.mode in ("synthetic", "timing") and not self.scenarios:
            raise ConfigError(f"{self.mode} mode needs at least one scenario")
        if self.mode == "real":
            if self.dataset is None:
                raise ConfigError("real mode needs a dataset name")
            try:
                get_schema(self.dataset)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from None
            if not 0 < self.train_fraction < 1:
                raise ConfigError("split must lie in (0, 1)")
            if not self.contamination_schedule:
                raise ConfigError("contamination schedule is empty")
            if any(not 0 <= r < 1 for r in self.contamination_schedule):
                raise ConfigError("contamination rates must lie in [0, 1)")
            if self.reshuffle_every < 1:
                raise ConfigError("reshuffle_every must be >= 1")

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "methods": [k.value for k in self.methods],
            "repetitions": self.repetitions,
            "seed": self.seed,
            "fit_options": asdict(self.fit_options),
            "jobs": self.jobs,
        }
        if self.mode == "real":
            d.update(
                dataset=self.dataset,
                data_paths=list(self.data_paths),
                train_fraction=self.train_fraction,
                contamination_schedule=list(self.contamination_schedule),
                reshuffle_every=self.reshuffle_every,
                standardize=self.standardize,
            )
        else:
            d["scenarios"] = [s.to_dict() for s in self.scenarios]
        return d


_KNOWN_KEYS = {
    "mode", "methods", "repetitions", "reps", "seed", "out", "output_dir", "jobs",
    "scenarios", "scenario", "shape_mode", "contamination", "m", "K", "n_train", "n_test",
    "tol", "max_iter", "t_floor", "huber_quantile", "nu_min", "nu_max",
    "dataset", "data", "data_paths", "split", "train_fraction",
    "contamination_schedule", "reshuffle_every", "standardize",
}


def _as_list(v):
    if v is None:
        return []
    if isinstance(v, str):
        return [s for s in (p.strip() for p in v.split(",")) if s]
    return list(v)


def config_from_mapping(d: Mapping) -> ExperimentConfig:
    """Build a config from flat key/value pairs (config file or CLI).

    Unknown keys and malformed values raise :class:`ConfigError`.
    """
    unknown = set(d) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    mode = d.get("mode", "synthetic")
    try:
        methods = tuple(Kind.parse(str(k)) for k in _as_list(d.get("methods", [k.value for k in Kind])))
        opts = FitOptions(**{
            k: d[k] for k in ("tol", "max_iter", "t_floor", "huber_quantile", "nu_min", "nu_max")
            if k in d
        })
        seed = int(d.get("seed", 0))
        scenarios = ()
        if mode in ("synthetic", "timing"):
            entries = _as_list(d.get("scenarios", d.get("scenario")))
            if not entries:
                entries = ["1/3-1/3-1/3"] if mode == "timing" else list(STANDARD_SCENARIOS)
            rate = float(d.get("contamination", 0.0))
            parsed = [parse_scenario_entry(e, d.get("shape_mode", "green")) for e in entries]
            scenarios = tuple(
                ScenarioSpec(
                    m=int(d.get("m", 10)), K=int(d.get("K", 5)),
                    n_train=int(d.get("n_train", 5000)), n_test=int(d.get("n_test", 20000)),
                    proportions=props, shape_mode=smode, contamination_rate=rate, seed=seed,
                )
                for props, smode in parsed
            )
        reps_default = {"synthetic": 20, "real": 100, "timing": 20}.get(mode, 20)
        return ExperimentConfig(
            mode=mode,
            methods=methods,
            repetitions=int(d.get("repetitions", d.get("reps", reps_default))),
            seed=seed,
            fit_options=opts,
            output_dir=d.get("output_dir", d.get("out")),
            jobs=int(d.get("jobs", 1)),
            scenarios=scenarios,
            dataset=d.get("dataset"),
            data_paths=tuple(str(p) for p in _as_list(d.get("data_paths", d.get("data")))),
            train_fraction=float(d.get("train_fraction", d.get("split", 0.7))),
            contamination_schedule=tuple(float(r) for r in _as_list(d.get("contamination_schedule", [0.0]))),
            reshuffle_every=int(d.get("reshuffle_every", 10)),
            standardize=bool(d.get("standardize", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, overrides: Mapping | None = None) -> ExperimentConfig:
    """Read a TOML key/value file; ``overrides`` win over file values."""
    try:
        with open(path, "rb") as fh:
            d = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    d.update(overrides or {})
    return config_from_mapping(d)


# --------------------------------------------------------------------------
# report types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    scenario: str
    method: str
    repetition: int
    contamination_rate: float
    accuracy: float
    iterations: int
    converged: bool
    fit_time: float = float("nan")
    predict_time: float = float("nan")
    confusion: tuple = ()


@dataclass(frozen=True)
class MethodSummary:
    method: str
    mean_accuracy: float
    median_accuracy: float
    std_accuracy: float
    delta_vs_best: float
    confusion: list
    fit_time: float
    predict_time: float
    mean_iterations: float
    converged_fraction: float


@dataclass(frozen=True)
class ScenarioResult:
    scenario: str
    contamination_rate: float
    statistic: str
    best_method: str
    methods: tuple[MethodSummary, ...]

    def summary(self, method: str) -> MethodSummary:
        for s in self.methods:
            if s.method == method:
                return s
        raise KeyError(method)


@dataclass(frozen=True)
class BenchReport:
    records: tuple[RunRecord, ...]
    results: tuple[ScenarioResult, ...]
    metadata: dict

    def result(self, scenario: str, contamination_rate: float | None = None) -> ScenarioResult:
        for r in self.results:
            if r.scenario == scenario and (
                contamination_rate is None or math.isclose(r.contamination_rate, contamination_rate)
            ):
                return r
        raise KeyError((scenario, contamination_rate))


def _summarize(records: Sequence[RunRecord], methods: Sequence[Kind], statistic: str) -> list[ScenarioResult]:
    groups: dict[tuple[str, float], dict[str, list[RunRecord]]] = {}
    for rec in records:
        groups.setdefault((rec.scenario, rec.contamination_rate), {}).setdefault(rec.method, []).append(rec)
    out = []
    for (scenario, rate), by_method in groups.items():
        stats = {}
        for k in methods:
            recs = sorted(by_method.get(k.value, []), key=lambda r: r.repetition)
            if not recs:
                continue
            acc = [r.accuracy for r in recs]
            conf = np.sum([np.asarray(r.confusion) for r in recs], axis=0) if recs[0].confusion else []
            stats[k.value] = dict(
                mean_accuracy=float(np.mean(acc)),
                median_accuracy=float(np.median(acc)),
                std_accuracy=float(np.std(acc)),
                confusion=np.asarray(conf).tolist(),
                fit_time=float(np.median([r.fit_time for r in recs])),
                predict_time=float(np.median([r.predict_time for r in recs])),
                mean_iterations=float(np.mean([r.iterations for r in recs])),
                converged_fraction=float(np.mean([r.converged for r in recs])),
            )
        key = f"{statistic}_accuracy"
        # first method in configured order wins exact ties
        best = max(stats, key=lambda name: stats[name][key])
        top = stats[best][key]
        summaries = tuple(
            MethodSummary(method=name, delta_vs_best=(0.0 if name == best else s[key] - top), **s)
            for name, s in stats.items()
        )
        out.append(ScenarioResult(scenario, rate, statistic, best, summaries))
    return out


def _metadata(config: ExperimentConfig, **extra) -> dict:
    return {"config": config.to_dict(), "version": __version__, "seed": config.seed, **extra}


# --------------------------------------------------------------------------
# protocols
# --------------------------------------------------------------------------

def _fit_and_score(kind: Kind, train: LabeledDataset, test: LabeledDataset, opts: FitOptions, context: str):
    t0 = time.perf_counter()
    try:
        model = fit_model(kind, train.features, train.labels, opts, class_labels=train.label_names)
    except DegenerateClass as exc:
        raise DegenerateClass(f"{context}, method {kind.value}: {exc}") from exc
    t1 = time.perf_counter()
    pred = predict_labels(model, test.features)
    t2 = time.perf_counter()
    ev = evaluate(pred, test.labels, n_classes=test.n_classes)
    return ev, model, t1 - t0, t2 - t1


def _synthetic_task(args) -> list[RunRecord]:
    spec, rep, methods, opts = args
    train, test, _ = generate_scenario(spec, rep)
    rate = spec.contamination_rate
    if rate > 0:
        noise = default_noise_scatter(spec.m, substream(spec.seed, rep, "noise"))
        train = contaminate_synthetic(train, rate, noise, substream(spec.seed, rep, "contamination"))
    out = []
    for kind in methods:
        ev, model, tf, tp = _fit_and_score(kind, train, test, opts, f"scenario {spec.name}, repetition {rep}")
        out.append(RunRecord(
            spec.name, kind.value, rep, rate, ev.accuracy, model.iterations, model.converged,
            tf, tp, tuple(map(tuple, ev.confusion.tolist())),
        ))
    return out


def _run_tasks(fn, tasks, jobs: int) -> list[RunRecord]:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(fn, tasks))
    else:
        chunks = [fn(t) for t in tasks]
    return [rec for chunk in chunks for rec in chunk]


def run_synthetic(config: ExperimentConfig) -> BenchReport:
    """Fresh clusters and data per repetition; clean test sets; optional
    training contamination by ``N(0, Sigma_noise)``."""
    if config.mode != "synthetic":
        raise ConfigError("run_synthetic needs mode='synthetic'")
    tasks = [
        (spec, rep, config.methods, config.fit_options)
        for spec in config.scenarios
        for rep in range(config.repetitions)
    ]
    records = _run_tasks(_synthetic_task, tasks, config.jobs)
    results = _summarize(records, config.methods, "mean")
    return BenchReport(tuple(records), tuple(results), _metadata(config))


def _standardize(train: LabeledDataset, test: LabeledDataset):
    mu = train.features.mean(axis=0)
    sd = train.features.std(axis=0)
    sd[sd == 0] = 1.0
    return train.with_features((train.features - mu) / sd), test.with_features((test.features - mu) / sd)


def run_real(config: ExperimentConfig, dataset: LabeledDataset | None = None) -> BenchReport:
    """Real-data protocol.

    Repetition ``r`` uses split number ``r // reshuffle_every``; for every
    rate in the schedule the training part is contaminated with uniform
    box noise, every method is fitted and then evaluated on the clean test
    part.
    """
    if config.mode != "real":
        raise ConfigError("run_real needs mode='real'")
    schema = get_schema(config.dataset)
    if dataset is None:
        if not config.data_paths:
            raise ConfigError("real mode needs --data pointing at the dataset file(s)")
        dataset = load_dataset(list(config.data_paths), schema)
    low, high = schema.box()
    records = []
    for rep in range(config.repetitions):
        split_id = rep // config.reshuffle_every
        train0, test0 = shuffle_split(dataset, config.train_fraction, substream(config.seed, "split", split_id))
        for j, rate in enumerate(config.contamination_schedule):
            train = contaminate_real(train0, rate, low, high, substream(config.seed, "contamination", rep, j))
            test = test0
            if config.standardize:
                train, test = _standardize(train, test)
            for kind in config.methods:
                ev, model, tf, tp = _fit_and_score(
                    kind, train, test, config.fit_options,
                    f"dataset {schema.name}, repetition {rep}, contamination {rate:g}",
                )
                records.append(RunRecord(
                    schema.name, kind.value, rep, rate, ev.accuracy, model.iterations,
                    model.converged, tf, tp, tuple(map(tuple, ev.confusion.tolist())),
                ))
    results = _summarize(records, config.methods, "median")
    return BenchReport(tuple(records), tuple(results), _metadata(config, dataset_source=dataset.source))


def run_timing(config: ExperimentConfig) -> BenchReport:
    """Median wall-clock fit and predict time per method.

    Repetition ``r`` draws its own data; data generation is outside the
    timed region.
    """
    if config.mode != "timing":
        raise ConfigError("run_timing needs mode='timing'")
    spec = config.scenarios[0]
    records = []
    for rep in range(config.repetitions):
        train, test, _ = generate_scenario(spec, rep)
        for kind in config.methods:
            ev, model, tf, tp = _fit_and_score(kind, train, test, config.fit_options, f"timing repetition {rep}")
            records.append(RunRecord(
                spec.name, kind.value, rep, spec.contamination_rate, ev.accuracy,
                model.iterations, model.converged, tf, tp, tuple(map(tuple, ev.confusion.tolist())),
            ))
    results = _summarize(records, config.methods, "mean")
    return BenchReport(tuple(records), tuple(results), _metadata(config))


def run(config: ExperimentConfig) -> BenchReport:
    return {"synthetic": run_synthetic, "real": run_real, "timing": run_timing}[config.mode](config)


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------

RESULT_COLUMNS = ("scenario", "method", "repetition", "contamination_rate", "accuracy", "iterations", "converged")
TIMING_COLUMNS = ("scenario", "method", "repetition", "contamination_rate", "fit_time", "predict_time", "iterations")


def _csv_text(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (getattr(r, c) for c in columns)])
    return buf.getvalue()


def results_csv(report: BenchReport) -> str:
    """Tidy CSV, one row per (scenario, method, repetition, rate)."""
    return _csv_text(report.records, RESULT_COLUMNS)


def timings_csv(report: BenchReport) -> str:
    return _csv_text(report.records, TIMING_COLUMNS)


def markdown_table(report: BenchReport) -> str:
    """Best method as bold absolute accuracy (%), others as signed deltas."""
    if not report.results:
        return ""
    methods = [s.method for s in report.results[0].methods]
    stat = report.results[0].statistic
    lines = [
        f"Accuracy ({stat} over repetitions, %): best method in bold, others as difference to the best.",
        "",
        "| Scenario | Contamination | " + " | ".join(methods) + " |",
        "|" + "---|" * (len(methods) + 2),
    ]
    for res in report.results:
        cells = []
        for name in methods:
            s = res.summary(name)
            if name == res.best_method:
                cells.append(f"**{100 * getattr(s, stat + '_accuracy'):.2f}**")
            else:
                cells.append(f"{100 * s.delta_vs_best:+.2f}")
        lines.append(f"| {res.scenario} | {100 * res.contamination_rate:g}% | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def report_json(report: BenchReport) -> str:
    payload = {
        "metadata": report.metadata,
        "results": [
            {
                "scenario": r.scenario,
                "contamination_rate": r.contamination_rate,
                "statistic": r.statistic,
                "best_method": r.best_method,
                "methods": [asdict(s) for s in r.methods],
            }
            for r in report.results
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_report(report: BenchReport, format: str, out_dir) -> list[Path]:
    """Write ``results.csv`` + ``timings.csv`` (format ``"csv"``) or
    ``report.md`` (format ``"markdown"``) into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if format == "csv":
            files = {out / "results.csv": results_csv(report), out / "timings.csv": timings_csv(report)}
        elif format == "markdown":
            files = {out / "report.md": markdown_table(report)}
        else:
            raise ValueError(f"unknown report format {format!r}")
        for path, text in files.items():
            path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return list(files)


def write_report(report: BenchReport, out_dir) -> list[Path]:
    """All renderings plus ``report.json`` with the embedded configuration."""
    paths = render_report(report, "csv", out_dir) + render_report(report, "markdown", out_dir)
    path = Path(out_dir) / "report.json"
    path.write_text(report_json(report), encoding="utf-8")
    return paths + [path]
