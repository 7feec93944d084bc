"""``cspool`` command line: forecast, bench, report and synth subcommands.

Exit codes: 0 success, 1 I/O or parse error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import yaml

from . import synth
from .core import SeedSpec, derive_rng
from .forecasters import METHODS, ForecastRequest, make_forecaster
from .harness import (
    Comparison,
    DatasetError,
    DuplicateRecordError,
    import_external_records,
    load_config,
    load_dataset,
    read_records,
    run_benchmark,
    write_jsonl,
    write_records,
)
from .report import write_summary

QUANTILE_TABLE_LEVELS = (0.025, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.975)


class UsageError(Exception):
    pass


def _method_choice(name: str) -> str:
    if name not in METHODS:
        raise UsageError(f"unknown method {name!r}; valid methods: {', '.join(sorted(METHODS))}")
    return name


def cmd_forecast(args) -> int:
    _method_choice(args.method)
    series = load_dataset(args.series, args.format, args.season)
    if args.series_id is not None:
        match = [s for s in series if s.id == args.series_id]
        if not match:
            raise DatasetError(f"series {args.series_id!r} not found in {args.series}")
        s = match[0]
    else:
        s = series[0]
    try:
        params = json.loads(args.params) if args.params else {}
        forecaster = make_forecaster(args.method, **params)
    except (json.JSONDecodeError, TypeError) as e:
        raise UsageError(f"bad --params: {e}") from None
    rng = derive_rng(SeedSpec(args.seed, args.method_seed), args.method, Path(args.series).stem, s.id, 0)
    S = forecaster(ForecastRequest(s, args.horizon, args.budget, rng))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "samples.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["h"] + [f"s{b}" for b in range(S.budget)])
        for h, row in enumerate(S.samples, 1):
            w.writerow([h] + [repr(float(v)) for v in row])
    q = S.quantiles(QUANTILE_TABLE_LEVELS)
    with open(out / "quantiles.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["h"] + [f"q{lvl:g}" for lvl in QUANTILE_TABLE_LEVELS])
        for h, row in enumerate(q, 1):
            w.writerow([h] + [repr(float(v)) for v in row])
    return 0


def cmd_bench(args) -> int:
    config = load_config(args.config)
    records = run_benchmark(config, workers=args.workers)
    out = Path(args.out) if args.out else Path(config.output_dir) / "records.csv"
    write_records(records, out)
    print(f"wrote {len(records)} records to {out}")
    if args.summary:
        write_summary(records, out.parent / "summary", config.comparisons, 1 - config.alpha)
    return 0


def _parse_comparison(text: str) -> Comparison:
    parts = text.split(":")
    if len(parts) not in (2, 3, 4):
        raise UsageError(f"bad comparison {text!r}; expected A:B[:metric[:alternative]]")
    return Comparison(*parts)


def cmd_report(args) -> int:
    records = read_records(args.records)
    if args.external:
        accepted, rejected = import_external_records(args.external, records)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "rejected_external.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["line", "reason"])
            w.writerows(rejected)
        if rejected:
            print(f"{len(rejected)} external rows rejected; see rejected_external.csv", file=sys.stderr)
        records = records + accepted
    comparisons = [_parse_comparison(c) for c in args.compare or ()]
    paths = write_summary(records, args.out, comparisons, 1 - args.alpha)
    print(f"wrote {len(paths)} summary tables to {args.out}")
    return 0


def cmd_synth(args) -> int:
    text = args.spec
    if Path(text).is_file():
        text = Path(text).read_text()
    try:
        spec = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise DatasetError(f"cannot parse generator spec: {e}") from None
    if not isinstance(spec, dict) or "family" not in spec:
        raise UsageError("generator spec must be a mapping with a 'family' key")
    spec = dict(spec)
    family = spec.pop("family")
    try:
        series = synth.generate(family, **spec)
    except (synth.UnknownGeneratorError, TypeError) as e:
        raise UsageError(str(e)) from None
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(series, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cspool", description="Training-free probabilistic forecasting benchmark")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forecast", help="sample a predictive matrix for one series")
    f.add_argument("series", help="JSONL or CSV dataset file")
    f.add_argument("--method", required=True, help=f"one of: {', '.join(sorted(METHODS))}")
    f.add_argument("--horizon", type=int, required=True)
    f.add_argument("--budget", type=int, default=100)
    f.add_argument("--seed", type=int, default=0, help="driver seed")
    f.add_argument("--method-seed", type=int, default=42)
    f.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    f.add_argument("--season", type=int, default=None, help="override the seasonal period")
    f.add_argument("--series-id", default=None, help="series to forecast (default: first)")
    f.add_argument("--params", default=None, help="method parameters as a JSON object")
    f.add_argument("--out", required=True, help="output directory")
    f.set_defaults(func=cmd_forecast)

    b = sub.add_parser("bench", help="run a rolling-origin benchmark from a config file")
    b.add_argument("--config", required=True)
    b.add_argument("--workers", type=int, default=None, help="process count (0 = all CPUs)")
    b.add_argument("--out", default=None, help="records CSV path (default: <output_dir>/records.csv)")
    b.add_argument("--summary", action="store_true", help="also write summary tables")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("report", help="summary tables from a records CSV")
    r.add_argument("--records", required=True)
    r.add_argument("--external", default=None, help="comparator records CSV to merge")
    r.add_argument("--out", required=True)
    r.add_argument("--alpha", type=float, default=0.05)
    r.add_argument("--compare", action="append", metavar="A:B[:METRIC[:ALT]]",
                   help="paired Wilcoxon comparison (repeatable)")
    r.set_defaults(func=cmd_report)

    s = sub.add_parser("synth", help="write a synthetic JSONL dataset")
    s.add_argument("--spec", required=True, help="generator spec: YAML/JSON file or inline mapping")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"cspool: error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, TypeError, DuplicateRecordError, yaml.YAMLError) as e:
        print(f"cspool: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
