from pathlib import Path

import pytest

from cspool.harness import BenchmarkConfig, DatasetSpec, MethodSpec

REPO = Path(__file__).resolve().parents[1]
SYNTHETIC_CONFIG = REPO / "configs" / "synthetic.yaml"

FOUR_METHODS = ("csp-adaptive", "csp-fixed", "npts", "seasonal-npts")


def small_config(**overrides) -> BenchmarkConfig:
    """2 datasets x 3 series x 2 windows x 4 methods = 48 records."""
    datasets = tuple(
        DatasetSpec(name, horizon=12, windows=2, series_cap=3,
                    synth={"family": fam, "n_series": 5, "length": 120, "period": 12, "seed": i})
        for i, (name, fam) in enumerate([("alpha", "sinusoid"), ("beta", "level_shift")])
    )
    kw = dict(datasets=datasets, methods=tuple(MethodSpec(m) for m in FOUR_METHODS), budget=50)
    kw.update(overrides)
    return BenchmarkConfig(**kw)


# hand-worked fixture: methods A, B, C over 4 windows, 2 per dataset
HAND_CRPS = {
    ("d1", "s", 0): {"A": 1.0, "B": 2.0, "C": 4.0},
    ("d1", "s", 1): {"A": 2.0, "B": 2.0, "C": 3.0},
    ("d2", "s", 0): {"A": 3.0, "B": 1.0, "C": 2.0},
    ("d2", "s", 1): {"A": 1.0, "B": 4.0, "C": 2.0},
}


def hand_records():
    from cspool.harness import ForecastRecord

    out = []
    for (ds, sid, w), scores in HAND_CRPS.items():
        for m, v in scores.items():
            # MQL mirrors CRPS; wall time makes C the fastest at 1 ms/row
            out.append(ForecastRecord(ds, sid, w, m, v, v / 10, 0.9, 2.0,
                                      {"A": 2.0, "B": 4.0, "C": 1.0}[m], 0, 42))
    return out


@pytest.fixture(scope="session")
def small_records():
    from cspool.harness import run_benchmark

    return run_benchmark(small_config())


# --- acceptance reporting -------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
