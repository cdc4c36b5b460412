"""``femda-bench`` command line.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .bench import (
    STANDARD_SCENARIOS,
    config_from_mapping,
    load_config,
    markdown_table,
    run,
    run_real,
    write_report,
)
from .datasets import SCHEMAS, check_shape, get_schema, load_dataset
from .errors import ConfigError, DataError, FemdaError, NumericalError, ParseError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("femda")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML key/value file; command-line flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory for results.csv, timings.csv, report.md, report.json")
    p.add_argument("--methods", help="comma list, e.g. FEMDA,TQDA,QDA")
    p.add_argument("--reps", type=int, help="number of repetitions")
    p.add_argument("--jobs", type=int, help="worker processes for independent repetitions")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int, dest="max_iter")


def _synthetic_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", action="append", dest="scenarios",
                   help="e.g. 0.5GG-0.3T-0.2K, 1/3-1/3-1/3 or red:1-0-0 (repeatable)")
    p.add_argument("--mode", choices=("green", "red"), dest="shape_mode",
                   help="green: shapes shared per cluster, red: one shape per point")
    p.add_argument("--contamination", type=float, help="training contamination rate")
    p.add_argument("--m", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--n-train", type=int, dest="n_train")
    p.add_argument("--n-test", type=int, dest="n_test")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="femda-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthetic", help="scenario sweeps on generated heterogeneous data")
    _shared(p)
    _synthetic_flags(p)
    p.add_argument("--standard-table", action="store_true",
                   help="run the ten standard scenario rows")

    p = sub.add_parser("real", help="accuracy vs. training contamination on a UCI dataset")
    _shared(p)
    p.add_argument("--dataset", choices=sorted(SCHEMAS))
    p.add_argument("--data", action="append", help="dataset file (repeat to concatenate)")
    p.add_argument("--split", type=float, help="training fraction (default 0.7)")
    p.add_argument("--contamination-schedule", dest="contamination_schedule",
                   help="comma list of rates, e.g. 0,0.1,0.2")
    p.add_argument("--reshuffle-every", type=int, dest="reshuffle_every")
    p.add_argument("--standardize", action="store_true", default=None)

    p = sub.add_parser("timing", help="fit/predict wall-clock per method")
    _shared(p)
    _synthetic_flags(p)

    p = sub.add_parser("fetch-info", help="print dataset URLs and expected shapes")
    p.add_argument("--dataset", choices=sorted(SCHEMAS))
    p.add_argument("--data", action="append", help="verify this file's row/column counts")
    return parser


_NOT_CONFIG = {"command", "config", "verbose", "standard_table"}


def _overrides(args: argparse.Namespace) -> dict:
    d = {k: v for k, v in vars(args).items() if v is not None and k not in _NOT_CONFIG}
    if getattr(args, "standard_table", False):
        d["scenarios"] = list(STANDARD_SCENARIOS)
    d["mode"] = args.command
    return d


def _fetch_info(args) -> int:
    names = [args.dataset] if args.dataset else sorted(SCHEMAS)
    status = EXIT_OK
    for name in names:
        s = get_schema(name)
        print(f"{name}: {s.n_features} features, expected {s.expected_rows} rows x {s.n_tokens} columns")
        for url in s.urls:
            print(f"  {url}")
    if args.data:
        if not args.dataset:
            print("--data requires --dataset", file=sys.stderr)
            return EXIT_CONFIG
        try:
            info = check_shape(args.data, args.dataset)
        except OSError as exc:
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        verdict = "OK" if info["ok"] else "MISMATCH"
        print(f"  file check: {info['rows']} rows, column counts {info['columns']} -> {verdict}")
        if not info["ok"]:
            status = EXIT_DATA
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "fetch-info":
        return _fetch_info(args)

    try:
        overrides = _overrides(args)
        config = load_config(args.config, overrides) if args.config else config_from_mapping(overrides)
    except (ConfigError, ParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    dataset = None
    if config.mode == "real":
        if not config.data_paths:
            print("configuration error: real mode needs --data", file=sys.stderr)
            return EXIT_CONFIG
        try:
            dataset = load_dataset(list(config.data_paths), config.dataset)
        except (OSError, DataError, ParseError) as exc:
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA

    try:
        report = run_real(config, dataset) if dataset is not None else run(config)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FemdaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

    if config.output_dir:
        try:
            for path in write_report(report, config.output_dir):
                log.info("wrote %s", path)
        except OSError as exc:
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
    print(markdown_table(report), end="")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
