"""Run the bundled synthetic benchmark and print the headline tables.

Run: python3 demos/03_synthetic_benchmark.py [--workers N]
Writes records and summary CSVs under results/synthetic/.
"""

import argparse
import csv
import time
from pathlib import Path

from cspool.harness import load_config, run_benchmark, write_records
from cspool.report import write_summary

ROOT = Path(__file__).resolve().parents[1]

ap = argparse.ArgumentParser()
ap.add_argument("--workers", type=int, default=1)
args = ap.parse_args()

config = load_config(ROOT / "configs" / "synthetic.yaml")
t0 = time.perf_counter()
records = run_benchmark(config, workers=args.workers)
print(f"{len(records)} records in {time.perf_counter() - t0:.1f}s")

out = Path(config.output_dir).resolve()
write_records(records, out / "records.csv")
paths = write_summary(records, out / "summary", config.comparisons, 1 - config.alpha)


def show(name, cols):
    with open(paths[name]) as f:
        rows = list(csv.DictReader(f))
    print(f"\n{name}")
    print("  ".join(f"{c:>14}" for c in cols))
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            try:
                cells.append(f"{float(v):>14.4g}")
            except ValueError:
                cells.append(f"{v:>14}")
        print("  ".join(cells))


show("accuracy.csv", ["method", "crps_rank", "crps_wins", "mql_rank", "coverage_mean"])
show("absolute_scores.csv", ["method", "crps_rel_mean", "mql_mean", "coverage_mean"])
show("wilcoxon.csv", ["a", "b", "metric", "alternative", "n", "pvalue"])
print(f"\nall tables in {out / 'summary'}")
