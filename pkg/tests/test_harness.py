import json
import math

import numpy as np
import pytest

from cspool.core import SeedSpec, TimeSeries
from cspool.harness import (
    RECORD_FIELDS,
    DatasetError,
    DatasetSpec,
    DuplicateRecordError,
    MethodSpec,
    expected_record_count,
    import_external_records,
    load_config,
    load_dataset,
    read_records,
    rolling_windows,
    run_benchmark,
    write_jsonl,
    write_records,
)

from conftest import SYNTHETIC_CONFIG, small_config


# --- windows --------------------------------------------------------------

def _series(T):
    return TimeSeries("s", np.arange(T, dtype=float))


def test_rolling_windows_drops_short_histories():
    ws = rolling_windows(_series(100), 24, 3, 34)
    assert [w.history_end for w in ws] == [52, 76]
    assert [w.index for w in ws] == [1, 0]
    assert ws[-1].targets == (77, 100)


def test_rolling_windows_skip_series():
    assert rolling_windows(_series(48), 24, 1, 34) == []


def test_rolling_windows_disjoint_targets():
    ws = rolling_windows(_series(500), 24, 7)
    spans = [set(range(a, b + 1)) for a, b in (w.targets for w in ws)]
    for i in range(len(spans)):
        for j in range(i + 1, len(spans)):
            assert not spans[i] & spans[j]
    assert len(ws) == 7 and all(len(s) == 24 for s in spans)


def test_rolling_windows_default_min_history():
    # H + 10 = 34: the third window would keep only 28 points
    assert len(rolling_windows(_series(100), 24, 3)) == 2


# --- datasets -------------------------------------------------------------

def test_load_jsonl(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text(json.dumps({"item_id": "a", "start": "2012-01-01T00:00:00", "freq": "H",
                             "target": [1, 2, 3, 4, 5]}) + "\n")
    (s,) = load_dataset(p)
    assert len(s) == 5 and s.id == "a" and s.season == 24
    (s,) = load_dataset(p, season=6)
    assert s.season == 6


def test_jsonl_roundtrip(tmp_path):
    series = [TimeSeries("x", [1.5, 2.0], "2020-01-01T00:00:00", "D"),
              TimeSeries("y", [3.0], "2020-01-02T00:00:00", "D")]
    write_jsonl(series, tmp_path / "d.jsonl")
    back = load_dataset(tmp_path / "d.jsonl")
    assert [(s.id, s.values.tolist(), s.freq, s.season) for s in back] == [
        ("x", [1.5, 2.0], "D", 7), ("y", [3.0], "D", 7)]


def test_load_jsonl_errors(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"start": "2012-01-01", "freq": "H", "target": [1]}\n{"start": oops}\n')
    with pytest.raises(DatasetError, match=":2: malformed"):
        load_dataset(p)
    p.write_text('{"start": "2012-01-01", "freq": "H", "target": [1, NaN]}\n')
    with pytest.raises(DatasetError, match="non-finite"):
        load_dataset(p)
    p.write_text("")
    with pytest.raises(DatasetError, match="no series"):
        load_dataset(p)


def test_load_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("item_id,timestamp,value\n"
                 "a,2020-01-01T00:00:00,1\nb,2020-01-01T00:00:00,9\n"
                 "a,2020-01-01T01:00:00,2\na,2020-01-01T02:00:00,3\n")
    a, b = load_dataset(p, "csv")
    assert a.values.tolist() == [1, 2, 3] and b.values.tolist() == [9]
    assert a.start == "2020-01-01T00:00:00"


def test_load_csv_unsorted(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("item_id,timestamp,value\na,2020-01-02,1\na,2020-01-01,2\n")
    with pytest.raises(DatasetError, match="unsorted series"):
        load_dataset(p, "csv")
    p.write_text("item_id,timestamp,value\na,2020-01-01,inf\n")
    with pytest.raises(DatasetError, match="3|non-finite"):
        load_dataset(p, "csv")


# --- config ---------------------------------------------------------------

def test_load_bundled_config():
    cfg = load_config(SYNTHETIC_CONFIG)
    assert cfg.seed == SeedSpec(0, 42)
    assert cfg.budget == 100 and len(cfg.datasets) == 4
    assert [m.name for m in cfg.methods][:2] == ["csp-adaptive", "csp-fixed"]
    assert cfg.comparisons[0].metric == "crps"


def test_config_rejects_duplicates():
    with pytest.raises(ValueError, match="unique"):
        small_config(methods=(MethodSpec("npts"), MethodSpec("npts")))
    with pytest.raises(ValueError):
        DatasetSpec("x", horizon=0, path="a")


# --- benchmark ------------------------------------------------------------

def test_record_count_and_pairing(small_records):
    assert len(small_records) == 48 == expected_record_count(small_config())
    keys = {}
    for r in small_records:
        keys.setdefault(r.key, []).append(r.method)
    assert len(keys) == 12
    assert all(sorted(v) == sorted(small_config().methods[i].name for i in range(4)) for v in keys.values())
    assert all(not r.flags and math.isfinite(r.crps) for r in small_records)


def test_rerun_identical(small_records, tmp_path):
    again = run_benchmark(small_config())
    strip = lambda rs: [r.__class__(**{**r.__dict__, "wall_ms": 0.0}) for r in rs]
    assert strip(again) == strip(small_records)


def test_parallel_matches_serial(small_records):
    par = run_benchmark(small_config(), workers=2)
    strip = lambda rs: [(r.key, r.method, r.crps, r.mql_norm, r.coverage95, r.width95) for r in rs]
    assert strip(par) == strip(small_records)


def test_failures_are_flagged_not_raised(tmp_path):
    p = tmp_path / "tiny.jsonl"
    write_jsonl([TimeSeries("t", [1.0, 2.0, 3.0], freq="H", season=1),
                 TimeSeries("z", [0.0] * 20, freq="H", season=1)], p)
    cfg = small_config(datasets=(DatasetSpec("tiny", horizon=2, path=str(p), windows=1, min_history=1),))
    recs = run_benchmark(cfg)
    failed = [r for r in recs if r.failed]
    assert failed and all(r.series_id == "t" and "DegeneratePoolError" in r.flags[0] for r in failed)
    zero = [r for r in recs if r.series_id == "z"]
    assert all(r.flags == ("zero-scale",) and math.isnan(r.mql_norm) and r.crps == 0 for r in zero)


# --- records I/O ----------------------------------------------------------

def test_records_csv_roundtrip(small_records, tmp_path):
    p = tmp_path / "records.csv"
    write_records(small_records, p)
    assert p.read_text().splitlines()[0] == ",".join(RECORD_FIELDS)
    back = read_records(p)
    assert back == small_records
    q = tmp_path / "again.csv"
    write_records(back, q)
    assert q.read_bytes() == p.read_bytes()


def _external_csv(path, rows):
    lines = [",".join(RECORD_FIELDS)]
    for ds, sid, w, method, crps in rows:
        lines.append(f"{ds},{sid},{w},{method},{crps},0.1,0.5,3.0,,,,")
    path.write_text("\n".join(lines) + "\n")


def test_import_external(small_records, tmp_path):
    keys = sorted({r.key for r in small_records})
    p = tmp_path / "ext.csv"
    rows = [(*k, "deepnpts", 1.0 + i) for i, k in enumerate(keys)]
    rows.append(("alpha", "nope", 0, "deepnpts", 1.0))
    rows.append(("gamma", "x", 0, "deepnpts", 1.0))
    _external_csv(p, rows)
    accepted, rejected = import_external_records(p, small_records)
    assert len(accepted) == len(keys)
    assert [line for line, _ in rejected] == [len(keys) + 2, len(keys) + 3]
    assert "no internal record" in rejected[0][1] and "unknown dataset" in rejected[1][1]


def test_import_external_duplicates(small_records, tmp_path):
    k = small_records[0].key
    p = tmp_path / "ext.csv"
    _external_csv(p, [(*k, "deepnpts", 1.0), (*k, "deepnpts", 2.0)])
    with pytest.raises(DuplicateRecordError, match="duplicate record"):
        import_external_records(p, small_records)
    _external_csv(p, [(*k, "npts", 1.0)])
    with pytest.raises(DuplicateRecordError):
        import_external_records(p, small_records)
