"""Rolling-origin benchmark orchestration and result persistence."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from . import synth
from .core import SeedSpec, TimeSeries, derive_rng
from .forecasters import ForecastRequest, make_forecaster
from .scoring import DEFAULT_LEVELS, score_window

__all__ = [
    "RECORD_FIELDS",
    "BenchmarkConfig",
    "Comparison",
    "DatasetError",
    "DatasetSpec",
    "DuplicateRecordError",
    "ForecastRecord",
    "MethodSpec",
    "Window",
    "expected_record_count",
    "import_external_records",
    "load_config",
    "load_dataset",
    "load_dataset_spec",
    "read_records",
    "rolling_windows",
    "run_benchmark",
    "write_records",
]

log = logging.getLogger(__name__)

RECORD_FIELDS = (
    "dataset", "series_id", "window", "method", "crps", "mql_norm",
    "coverage95", "width95", "wall_ms", "driver_seed", "method_seed", "flags",
)
_METRICS = ("crps", "mql_norm", "coverage95", "width95")


class DatasetError(ValueError):
    """A dataset file could not be parsed into series."""


class DuplicateRecordError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class DatasetSpec:
    name: str
    horizon: int
    path: str | None = None
    format: str = "jsonl"
    season: int | None = None
    series_cap: int = 10
    windows: int = 5
    min_history: int | None = None
    synth: dict | None = None  # {"family": ..., **generator params} instead of a file

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"dataset {self.name}: horizon must be >= 1")
        if self.windows < 1:
            raise ValueError(f"dataset {self.name}: window count must be >= 1")
        if (self.path is None) == (self.synth is None):
            raise ValueError(f"dataset {self.name}: give exactly one of 'path' or 'synth'")

    @property
    def required_history(self) -> int:
        return self.horizon + 10 if self.min_history is None else self.min_history


@dataclass(frozen=True)
class MethodSpec:
    name: str
    kind: str | None = None
    params: dict = field(default_factory=dict)

    @property
    def registry_name(self) -> str:
        return self.kind or self.name


@dataclass(frozen=True)
class Comparison:
    a: str
    b: str
    metric: str = "crps"  # crps | mql | coverage | coverage_gap
    alternative: str = "less"


@dataclass(frozen=True)
class BenchmarkConfig:
    datasets: tuple[DatasetSpec, ...]
    methods: tuple[MethodSpec, ...]
    seed: SeedSpec = SeedSpec()
    budget: int = 100
    quantile_levels: tuple[float, ...] = DEFAULT_LEVELS
    alpha: float = 0.05
    output_dir: str = "results"
    workers: int = 1
    comparisons: tuple[Comparison, ...] = ()

    def __post_init__(self):
        if self.budget < 2:
            raise ValueError("budget must be >= 2")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ValueError(f"method names must be unique, got {names}")
        ds = [d.name for d in self.datasets]
        if len(set(ds)) != len(ds):
            raise ValueError(f"dataset names must be unique, got {ds}")


def _resolve(base: Path, p: str | None) -> str | None:
    if p is None:
        return None
    q = Path(p)
    return str(q if q.is_absolute() else base / q)


def config_from_dict(doc: dict, base_dir: str | Path = ".") -> BenchmarkConfig:
    """Build a :class:`BenchmarkConfig` from a parsed YAML/JSON document."""
    base = Path(base_dir)
    datasets = tuple(
        DatasetSpec(**{**d, "path": _resolve(base, d.get("path"))}) for d in doc["datasets"]
    )
    methods = tuple(
        MethodSpec(m) if isinstance(m, str) else MethodSpec(**m) for m in doc["methods"]
    )
    comparisons = tuple(
        Comparison(*c) if isinstance(c, (list, tuple)) else Comparison(**c)
        for c in doc.get("comparisons", ())
    )
    opts = {k: doc[k] for k in ("budget", "alpha", "workers") if k in doc}
    if "quantile_levels" in doc:
        opts["quantile_levels"] = tuple(float(q) for q in doc["quantile_levels"])
    return BenchmarkConfig(
        datasets=datasets,
        methods=methods,
        seed=SeedSpec(**doc.get("seed", {})),
        output_dir=_resolve(base, doc.get("output_dir", "results")),
        comparisons=comparisons,
        **opts,
    )


def load_config(path: str | Path) -> BenchmarkConfig:
    """Read a YAML (or JSON) benchmark config; relative paths resolve against its folder."""
    path = Path(path)
    with open(path) as f:
        doc = yaml.safe_load(f)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return config_from_dict(doc, path.parent)


# ---------------------------------------------------------------------------
# datasets

def _finite(values, where: str) -> list[float]:
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError) as e:
        raise DatasetError(f"{where}: non-numeric value ({e})") from None
    if not all(math.isfinite(v) for v in out):
        raise DatasetError(f"{where}: non-finite value")
    return out


def _load_jsonl(path: Path, season: int | None) -> list[TimeSeries]:
    series = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                start, freq, target = obj["start"], obj["freq"], obj["target"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise DatasetError(f"{path}:{lineno}: malformed line ({e})") from None
            values = _finite(target, f"{path}:{lineno}")
            if not values:
                raise DatasetError(f"{path}:{lineno}: empty target")
            sid = str(obj.get("item_id", len(series)))
            series.append(TimeSeries(sid, values, str(start), str(freq), season))
    return series


def _load_csv(path: Path, season: int | None, freq: str) -> list[TimeSeries]:
    groups: dict[str, list[tuple[datetime, str, float]]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = {"item_id", "timestamp", "value"} - set(reader.fieldnames or ())
        if missing:
            raise DatasetError(f"{path}: missing columns {sorted(missing)}")
        for rowno, row in enumerate(reader, 2):
            try:
                ts = datetime.fromisoformat(row["timestamp"])
            except (TypeError, ValueError):
                raise DatasetError(f"{path}:{rowno}: bad timestamp {row['timestamp']!r}") from None
            (value,) = _finite([row["value"]], f"{path}:{rowno}")
            rows = groups.setdefault(row["item_id"], [])
            if rows and ts <= rows[-1][0]:
                raise DatasetError(f"{path}:{rowno}: unsorted series {row['item_id']!r}")
            rows.append((ts, row["timestamp"], value))
    return [
        TimeSeries(sid, [r[2] for r in rows], rows[0][1], freq, season)
        for sid, rows in groups.items()
    ]


def load_dataset(
    path: str | Path, format: str = "jsonl", season: int | None = None, freq: str = "H"
) -> list[TimeSeries]:
    """Read univariate series from JSON-lines or long-format CSV.

    JSON-lines objects carry ``start``, ``freq``, ``target`` and optionally
    ``item_id``. CSV files have columns ``item_id,timestamp,value`` with
    rows in chronological order within each series; CSV has no frequency
    column, so ``freq`` applies to every series. ``season`` overrides the
    frequency-derived period.
    """
    path = Path(path)
    if format == "jsonl":
        series = _load_jsonl(path, season)
    elif format == "csv":
        series = _load_csv(path, season, freq)
    else:
        raise DatasetError(f"unknown dataset format {format!r}")
    if not series:
        raise DatasetError(f"{path}: no series")
    return series


def write_jsonl(series: Iterable[TimeSeries], path: str | Path) -> None:
    with open(path, "w") as f:
        for s in series:
            obj = {"item_id": s.id, "start": s.start, "freq": s.freq, "target": s.values.tolist()}
            f.write(json.dumps(obj) + "\n")


def load_dataset_spec(spec: DatasetSpec) -> list[TimeSeries]:
    """Series for one configured dataset, season override applied, capped to ``series_cap``."""
    if spec.synth is not None:
        params = dict(spec.synth)
        series = synth.generate(params.pop("family"), **params)
    else:
        series = load_dataset(spec.path, spec.format, spec.season)
    if spec.season is not None:
        series = [TimeSeries(s.id, s.values, s.start, s.freq, spec.season) for s in series]
    return series[: spec.series_cap]


# ---------------------------------------------------------------------------
# windows

@dataclass(frozen=True)
class Window:
    index: int  # 0 = most recent
    history_end: int  # history is y_1..y_{history_end}
    targets: tuple[int, int]  # 1-based inclusive range

    @property
    def history_length(self) -> int:
        return self.history_end


def rolling_windows(series: TimeSeries, horizon: int, n: int, min_history: int | None = None):
    """Non-overlapping rolling-origin windows with stride ``horizon``, oldest first.

    Window ``k`` forecasts ``y_{T-(k+1)H+1} .. y_{T-kH}`` from the history
    before it. Windows with less than ``min_history`` (default ``H + 10``)
    history are dropped.
    """
    if n < 1:
        raise ValueError("window count must be >= 1")
    if min_history is None:
        min_history = horizon + 10
    T = len(series)
    out = []
    for k in range(n):
        end = T - (k + 1) * horizon
        if end >= max(min_history, 1):
            out.append(Window(k, end, (end + 1, end + horizon)))
    if not out:
        log.info("series %s skipped: no window with history >= %d", series.id, min_history)
    return out[::-1]


# ---------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class ForecastRecord:
    dataset: str
    series_id: str
    window: int
    method: str
    crps: float
    mql_norm: float
    coverage95: float
    width95: float
    wall_ms: float
    driver_seed: int
    method_seed: int
    flags: tuple[str, ...] = ()

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.dataset, self.series_id, self.window)

    @property
    def failed(self) -> bool:
        return any(f.startswith("failed") for f in self.flags)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records(records: Sequence[ForecastRecord], path: str | Path) -> None:
    """Records CSV with a stable column order; floats use round-trip ``repr``."""
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            row = [getattr(r, k) for k in RECORD_FIELDS[:-1]] + [";".join(r.flags)]
            w.writerow([_fmt(v) for v in row])


def _parse_record(row: dict, where: str) -> ForecastRecord:
    try:
        return ForecastRecord(
            dataset=row["dataset"],
            series_id=row["series_id"],
            window=int(row["window"]),
            method=row["method"],
            crps=float(row["crps"]),
            mql_norm=float(row["mql_norm"]),
            coverage95=float(row["coverage95"]),
            width95=float(row["width95"]),
            wall_ms=float(row["wall_ms"]) if row.get("wall_ms") not in (None, "") else float("nan"),
            driver_seed=int(row["driver_seed"]) if row.get("driver_seed") else 0,
            method_seed=int(row["method_seed"]) if row.get("method_seed") else 0,
            flags=tuple(f for f in (row.get("flags") or "").split(";") if f),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"{where}: malformed record ({e})") from None


def read_records(path: str | Path) -> list[ForecastRecord]:
    with open(path, newline="") as f:
        return [_parse_record(row, f"{path}:{i}") for i, row in enumerate(csv.DictReader(f), 2)]


def import_external_records(
    path: str | Path, internal: Sequence[ForecastRecord]
) -> tuple[list[ForecastRecord], list[tuple[int, str]]]:
    """Validate comparator records produced elsewhere against the internal run.

    Returns the accepted records and a rejection report of ``(line, reason)``.
    Rows are rejected for an unknown dataset, a ``(dataset, series, window)``
    key absent from the internal records, or non-finite metrics without a
    flag. A repeated ``(key, method)`` pair, or a method name already used
    internally, raises :class:`DuplicateRecordError`.
    """
    keys = {r.key for r in internal}
    datasets = {r.dataset for r in internal}
    internal_methods = {r.method for r in internal}
    accepted, rejected, seen = [], [], set()
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = set(RECORD_FIELDS[:8]) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, 2):
            rec = _parse_record(row, f"{path}:{lineno}")
            if rec.method in internal_methods:
                raise DuplicateRecordError(
                    f"{path}:{lineno}: duplicate record (method {rec.method!r} exists internally)"
                )
            if (rec.key, rec.method) in seen:
                raise DuplicateRecordError(f"{path}:{lineno}: duplicate record {rec.key + (rec.method,)}")
            seen.add((rec.key, rec.method))
            if rec.dataset not in datasets:
                rejected.append((lineno, f"unknown dataset {rec.dataset!r}"))
            elif rec.key not in keys:
                rejected.append((lineno, f"no internal record for key {rec.key}"))
            elif not rec.flags and not all(math.isfinite(getattr(rec, m)) for m in _METRICS):
                rejected.append((lineno, "non-finite metric without flag"))
            else:
                accepted.append(rec)
    return accepted, rejected


# ---------------------------------------------------------------------------
# benchmark

@dataclass(frozen=True)
class _SeriesTask:
    dataset: DatasetSpec
    series: TimeSeries
    windows: tuple[Window, ...]
    methods: tuple[MethodSpec, ...]
    seed: SeedSpec
    budget: int
    levels: tuple[float, ...]
    alpha: float


def _evaluate_series(task: _SeriesTask) -> list[ForecastRecord]:
    H = task.dataset.horizon
    y = task.series.values
    forecasters = [make_forecaster(m.registry_name, **m.params) for m in task.methods]
    nan = float("nan")
    out = []
    for win in task.windows:
        history = task.series.head(win.history_end)
        target = y[win.history_end:win.history_end + H]
        for spec, forecaster in zip(task.methods, forecasters):
            rng = derive_rng(task.seed, spec.name, task.dataset.name, task.series.id, win.index)
            base = dict(
                dataset=task.dataset.name, series_id=task.series.id, window=win.index,
                method=spec.name, driver_seed=task.seed.driver_seed,
                method_seed=task.seed.method_seed,
            )
            t0 = time.perf_counter_ns()
            try:
                S = forecaster(ForecastRequest(history, H, task.budget, rng))
            except Exception as e:  # a failing method must not abort the run
                wall = (time.perf_counter_ns() - t0) / 1e6
                reason = f"failed:{type(e).__name__}:{e}".replace(";", ",").replace("\n", " ")
                out.append(ForecastRecord(crps=nan, mql_norm=nan, coverage95=nan, width95=nan,
                                          wall_ms=wall, flags=(reason,), **base))
                continue
            wall = (time.perf_counter_ns() - t0) / 1e6
            sc = score_window(S, target, task.levels, task.alpha)
            out.append(ForecastRecord(
                crps=sc.crps, mql_norm=sc.mql_norm, coverage95=sc.coverage95, width95=sc.width95,
                wall_ms=wall, flags=("zero-scale",) if sc.zero_scale else (), **base,
            ))
    return out


def _tasks(config: BenchmarkConfig) -> list[_SeriesTask]:
    tasks = []
    for ds in config.datasets:
        for s in load_dataset_spec(ds):
            windows = rolling_windows(s, ds.horizon, ds.windows, ds.required_history)
            if windows:
                tasks.append(_SeriesTask(ds, s, tuple(windows), config.methods, config.seed,
                                         config.budget, config.quantile_levels, config.alpha))
    return tasks


def expected_record_count(config: BenchmarkConfig) -> int:
    """Surviving (series x windows) summed over datasets, times the method count."""
    return sum(len(t.windows) for t in _tasks(config)) * len(config.methods)


def run_benchmark(config: BenchmarkConfig, workers: int | None = None) -> list[ForecastRecord]:
    """Evaluate every configured method on every surviving window.

    Work is split per series; ``workers > 1`` uses a process pool. Records
    come back in (dataset, series, window, method) configuration order, and
    apart from ``wall_ms`` they do not depend on the worker count.
    """
    for m in config.methods:
        make_forecaster(m.registry_name, **m.params)  # fail fast on bad method config
    tasks = _tasks(config)
    n = config.workers if workers is None else workers
    if n is None or n <= 0:
        n = os.cpu_count() or 1
    if n == 1 or len(tasks) <= 1:
        chunks = [_evaluate_series(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            chunks = list(pool.map(_evaluate_series, tasks))
    records = [r for chunk in chunks for r in chunk]
    log.info("benchmark produced %d records from %d series", len(records), len(tasks))
    return records
