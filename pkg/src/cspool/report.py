"""Summary tables computed from forecast records.

Only windows where every method has a usable score enter cross-method
aggregates (ranks, normalised scores, paired tests); anything else is
counted in the data-quality table instead of being dropped silently.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .harness import Comparison, ForecastRecord
from .stats import (
    BANDS,
    NonNormalizableWindow,
    head_to_head,
    normalize_by_window_median,
    per_window_ranks,
    rank_distribution,
    wilcoxon_signed_rank,
)

__all__ = [
    "SUMMARY_FILES",
    "absolute_score_table",
    "accuracy_table",
    "complete_windows",
    "coverage_distribution",
    "data_quality_table",
    "default_comparisons",
    "head_to_head_table",
    "method_order",
    "paired_values",
    "per_dataset_means",
    "rank_band_table",
    "wall_time_table",
    "wilcoxon_battery",
    "write_summary",
]

log = logging.getLogger(__name__)

SUMMARY_FILES = (
    "accuracy.csv",
    "rank_bands.csv",
    "head_to_head.csv",
    "absolute_scores.csv",
    "wilcoxon.csv",
    "wall_time.csv",
    "coverage_windows.csv",
    "data_quality.csv",
)

_FIELD = {"crps": "crps", "mql": "mql_norm", "coverage": "coverage95", "width": "width95"}
Key = tuple  # (dataset, series_id, window)


def method_order(records: Sequence[ForecastRecord]) -> list[str]:
    """Methods in order of first appearance."""
    return list(dict.fromkeys(r.method for r in records))


def _usable(r: ForecastRecord, field: str) -> bool:
    return not r.failed and math.isfinite(getattr(r, field))


def complete_windows(records: Sequence[ForecastRecord], metric: str) -> dict[Key, dict[str, float]]:
    """``key -> {method: value}`` for windows where all methods have a finite ``metric``."""
    field = _FIELD[metric]
    methods = method_order(records)
    table: dict[Key, dict[str, float]] = defaultdict(dict)
    for r in records:
        if _usable(r, field):
            table[r.key][r.method] = getattr(r, field)
    return {k: v for k, v in table.items() if len(v) == len(methods)}


def _normalized(windows: dict[Key, dict[str, float]]) -> dict[Key, dict[str, float]]:
    out, skipped = {}, 0
    for k, scores in windows.items():
        try:
            out[k] = normalize_by_window_median(scores)
        except NonNormalizableWindow:
            skipped += 1
    if skipped:
        log.warning("%d windows excluded from normalised aggregates (median <= 0)", skipped)
    return out


def _mean(xs) -> float:
    xs = list(xs)
    return float(np.mean(xs)) if xs else float("nan")


def _std(xs) -> float:
    xs = list(xs)
    return float(np.std(xs, ddof=1)) if len(xs) > 1 else float("nan")


def _ranks(records, metric):
    return {k: per_window_ranks(v) for k, v in complete_windows(records, metric).items()}


def _dataset_rank1_wins(ranks: dict[Key, dict[str, float]], methods) -> dict[str, int]:
    by_ds: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for (ds, _, _), rk in ranks.items():
        for m, r in rk.items():
            by_ds[ds][m].append(r)
    wins = dict.fromkeys(methods, 0)
    for per_method in by_ds.values():
        means = {m: np.mean(v) for m, v in per_method.items()}
        best = min(means.values())
        for m, v in means.items():
            if v == best:
                wins[m] += 1
    return wins


def accuracy_table(records: Sequence[ForecastRecord]) -> list[dict]:
    """Mean per-window ranks, dataset rank-1 wins, coverage and wall minutes."""
    methods = method_order(records)
    crps_ranks, mql_ranks = _ranks(records, "crps"), _ranks(records, "mql")
    crps_wins = _dataset_rank1_wins(crps_ranks, methods)
    mql_wins = _dataset_rank1_wins(mql_ranks, methods)
    rows = []
    for m in methods:
        mine = [r for r in records if r.method == m]
        cov = [r.coverage95 for r in mine if _usable(r, "coverage95")]
        rows.append({
            "method": m,
            "crps_rank": _mean(rk[m] for rk in crps_ranks.values()),
            "crps_wins": crps_wins[m],
            "mql_rank": _mean(rk[m] for rk in mql_ranks.values()),
            "mql_wins": mql_wins[m],
            "coverage_mean": _mean(cov),
            "coverage_std": _std(cov),
            "wall_minutes": float(np.nansum([r.wall_ms for r in mine]) / 60000.0),
            "records": len(mine),
        })
    return sorted(rows, key=lambda row: (row["crps_rank"], row["method"]))


def rank_band_table(records: Sequence[ForecastRecord]) -> list[dict]:
    """Per-window rank-band counts for CRPS and MQL; each row sums to its window count."""
    methods = method_order(records)
    rows = []
    for metric in ("crps", "mql"):
        ranks = _ranks(records, metric)
        dist = rank_distribution(ranks.values())
        for m in methods:
            counts = dist.get(m, dict.fromkeys(BANDS, 0.0))
            rows.append({"metric": metric, "method": m, **counts, "windows": len(ranks)})
    return rows


def per_dataset_means(records: Sequence[ForecastRecord], metric: str = "crps"):
    acc: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for (ds, _, _), scores in complete_windows(records, metric).items():
        for m, v in scores.items():
            acc[ds][m].append(v)
    return {ds: {m: float(np.mean(v)) for m, v in per.items()} for ds, per in acc.items()}


def head_to_head_table(records: Sequence[ForecastRecord], metric: str = "crps") -> list[dict]:
    """Rows ``method`` with one ``vs <other>`` column holding ``wins/datasets``."""
    means = per_dataset_means(records, metric)
    wins = head_to_head(means)
    methods = method_order(records)
    n = len(means)
    rows = []
    for a in methods:
        row = {"method": a}
        for b in methods:
            row[f"vs {b}"] = "-" if b == a else f"{wins.get(a, {}).get(b, 0)}/{n}"
        rows.append(row)
    return rows


def absolute_score_table(records: Sequence[ForecastRecord]) -> list[dict]:
    """Window-median-normalised CRPS, normalised MQL and coverage per method."""
    rel = _normalized(complete_windows(records, "crps"))
    methods = method_order(records)
    rows = []
    for m in methods:
        mine = [r for r in records if r.method == m]
        mql = [r.mql_norm for r in mine if _usable(r, "mql_norm")]
        cov = [r.coverage95 for r in mine if _usable(r, "coverage95")]
        crel = [v[m] for v in rel.values()]
        rows.append({
            "method": m,
            "crps_rel_mean": _mean(crel),
            "crps_rel_std": _std(crel),
            "mql_mean": _mean(mql),
            "mql_std": _std(mql),
            "coverage_mean": _mean(cov),
        })
    return rows


def default_comparisons(methods: Sequence[str]) -> list[Comparison]:
    """First method against every other on CRPS, MQL (less) and coverage (greater)."""
    if len(methods) < 2:
        return []
    ref, others = methods[0], methods[1:]
    out = [Comparison(ref, b, "crps", "less") for b in others]
    out += [Comparison(ref, b, "mql", "less") for b in others]
    out += [Comparison(ref, b, "coverage", "greater") for b in others]
    return out


def paired_values(records, metric: str, nominal: float = 0.95) -> dict[Key, dict[str, float]]:
    """Per-window values as tested: CRPS/MQL median-normalised, coverage raw or as gap to nominal."""
    if metric in ("crps", "mql"):
        return _normalized(complete_windows(records, metric))
    if metric == "coverage":
        return complete_windows(records, "coverage")
    if metric == "coverage_gap":
        return {k: {m: abs(v - nominal) for m, v in s.items()}
                for k, s in complete_windows(records, "coverage").items()}
    raise ValueError(f"unknown comparison metric {metric!r}")


def wilcoxon_battery(
    records: Sequence[ForecastRecord], comparisons: Sequence[Comparison], nominal: float = 0.95
) -> list[dict]:
    """Per-window paired Wilcoxon tests on ``A - B`` for each comparison."""
    cache: dict[str, dict] = {}
    rows = []
    for c in comparisons:
        if c.metric not in cache:
            cache[c.metric] = paired_values(records, c.metric, nominal)
        vals = cache[c.metric]
        diffs = [v[c.a] - v[c.b] for v in vals.values() if c.a in v and c.b in v]
        row = {"a": c.a, "b": c.b, "metric": c.metric, "alternative": c.alternative,
               "pairs": len(diffs)}
        try:
            res = wilcoxon_signed_rank(diffs, c.alternative)
            row.update(n=res.n, w_plus=res.statistic, pvalue=res.pvalue, mode=res.method)
        except ValueError:
            row.update(n=0, w_plus=float("nan"), pvalue=float("nan"), mode="no-signed-information")
        rows.append(row)
    return rows


def wall_time_table(records: Sequence[ForecastRecord]) -> list[dict]:
    """Total forecast wall time per method with slowdown against the fastest."""
    rows = []
    for m in method_order(records):
        mine = [r for r in records if r.method == m]
        total_ms = float(np.nansum([r.wall_ms for r in mine]))
        rows.append({
            "method": m,
            "wall_minutes": total_ms / 60000.0,
            "rows": len(mine),
            "sec_per_row": total_ms / 1000.0 / len(mine),
            "datasets": len({r.dataset for r in mine}),
        })
    fastest = min(r["sec_per_row"] for r in rows)
    for r in rows:
        r["slowdown"] = r["sec_per_row"] / fastest if fastest > 0 else float("nan")
    return sorted(rows, key=lambda r: (r["sec_per_row"], r["method"]))


def coverage_distribution(records: Sequence[ForecastRecord]) -> list[dict]:
    """One row per usable record, ready for violin or histogram plots."""
    return [
        {"method": r.method, "dataset": r.dataset, "series_id": r.series_id,
         "window": r.window, "coverage": r.coverage95}
        for r in records if _usable(r, "coverage95")
    ]


def data_quality_table(records: Sequence[ForecastRecord]) -> list[dict]:
    crps_complete = complete_windows(records, "crps")
    all_keys = {r.key for r in records}
    rows = []
    for m in method_order(records):
        mine = [r for r in records if r.method == m]
        rows.append({
            "method": m,
            "records": len(mine),
            "failed": sum(r.failed for r in mine),
            "zero_scale": sum("zero-scale" in r.flags for r in mine),
            "windows_total": len(all_keys),
            "windows_in_crps_aggregates": len(crps_complete),
        })
    return rows


def _write(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as f:
        if not rows:
            return
        w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def write_summary(
    records: Sequence[ForecastRecord],
    out_dir: str | Path,
    comparisons: Sequence[Comparison] | None = None,
    nominal: float = 0.95,
) -> dict[str, Path]:
    """Write every summary table as CSV into ``out_dir``; returns name -> path."""
    if not records:
        raise ValueError("no records to summarise")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not comparisons:
        comparisons = default_comparisons(method_order(records))
    tables = {
        "accuracy.csv": accuracy_table(records),
        "rank_bands.csv": rank_band_table(records),
        "head_to_head.csv": head_to_head_table(records),
        "absolute_scores.csv": absolute_score_table(records),
        "wilcoxon.csv": wilcoxon_battery(records, comparisons, nominal),
        "wall_time.csv": wall_time_table(records),
        "coverage_windows.csv": coverage_distribution(records),
        "data_quality.csv": data_quality_table(records),
    }
    paths = {}
    for name, rows in tables.items():
        paths[name] = out / name
        _write(rows, paths[name])
    return paths
