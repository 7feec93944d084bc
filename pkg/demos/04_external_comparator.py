"""Merge scores from an outside model into the same paired analysis.

A comparator that cannot run inside the harness (say, a trained network)
only needs to write records CSV rows with matching dataset, series_id and
window keys. Rows without an internal counterpart are rejected and listed.

Run: python3 demos/04_external_comparator.py
"""

import tempfile
from pathlib import Path

import numpy as np

from cspool.harness import (
    BenchmarkConfig,
    Comparison,
    DatasetSpec,
    ForecastRecord,
    MethodSpec,
    import_external_records,
    run_benchmark,
    write_records,
)
from cspool.report import head_to_head_table, wilcoxon_battery

config = BenchmarkConfig(
    datasets=(DatasetSpec("walk", horizon=24, windows=6, synth={"family": "seasonal_walk", "seed": 9}),),
    methods=(MethodSpec("csp-adaptive"), MethodSpec("npts")),
)
internal = run_benchmark(config)

# Stand-in for a trained model: npts scores with multiplicative noise.
rng = np.random.default_rng(0)
fake = [ForecastRecord(*r.key, "outside-model", r.crps * rng.uniform(0.7, 1.2), r.mql_norm,
                       r.coverage95, r.width95, float("nan"), 0, 0)
        for r in internal if r.method == "npts"]
fake.append(ForecastRecord("walk", "no-such-series", 0, "outside-model", 1.0, 1.0, 1.0, 1.0,
                           float("nan"), 0, 0))

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "outside.csv"
    write_records(fake, path)
    accepted, rejected = import_external_records(path, internal)
print(f"accepted {len(accepted)} external rows, rejected {len(rejected)}: {rejected}")

merged = internal + accepted
for row in head_to_head_table(merged):
    print(row)
for row in wilcoxon_battery(merged, [Comparison("csp-adaptive", "outside-model", "crps", "less")]):
    print(f"{row['a']} < {row['b']} on normalised CRPS: n={row['n']}, p={row['pvalue']:.3g}")
