import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import rankdata

from cspool.stats import (
    NonNormalizableWindow,
    head_to_head,
    normalize_by_window_median,
    per_window_ranks,
    rank_distribution,
    wilcoxon_signed_rank,
)


def brute_wilcoxon(diffs, alternative):
    """Enumerate all 2^n sign assignments over the tie-averaged ranks."""
    d = np.asarray(diffs, float)
    d = d[d != 0]
    ranks = rankdata(np.abs(d))
    observed = ranks[d > 0].sum()
    ge = le = 0
    for signs in itertools.product((0, 1), repeat=d.size):
        w = sum(r for r, s in zip(ranks, signs) if s)
        ge += w >= observed - 1e-9
        le += w <= observed + 1e-9
    total = 2 ** d.size
    if alternative == "greater":
        return ge / total
    if alternative == "less":
        return le / total
    return min(1.0, 2 * min(ge, le) / total)


# --- normalisation --------------------------------------------------------

def test_normalize_examples():
    assert normalize_by_window_median({"A": 1, "B": 2, "C": 3}) == {"A": 0.5, "B": 1.0, "C": 1.5}
    assert normalize_by_window_median({"A": 4, "B": 4}) == {"A": 1.0, "B": 1.0}
    out = normalize_by_window_median({k: v for k, v in zip("ABCDEF", range(1, 7))})
    np.testing.assert_allclose(list(out.values()), np.arange(1, 7) / 3.5)


def test_normalize_errors():
    with pytest.raises(NonNormalizableWindow):
        normalize_by_window_median({"A": 0.0, "B": 0.0, "C": 1.0})
    with pytest.raises(ValueError):
        normalize_by_window_median({"A": 1.0})


@given(st.lists(st.floats(0.01, 1e4), min_size=2, max_size=8))
def test_normalize_preserves_rank_order(vals):
    scores = {f"m{i}": v for i, v in enumerate(vals)}
    assert per_window_ranks(normalize_by_window_median(scores)) == per_window_ranks(scores)


# --- ranks ----------------------------------------------------------------

def test_ranks_examples():
    assert per_window_ranks({"A": 1.0, "B": 2.0, "C": 2.0}) == {"A": 1.0, "B": 2.5, "C": 2.5}
    assert sorted(per_window_ranks({"A": 3.0, "B": 1.0, "C": 2.0}).values()) == [1.0, 2.0, 3.0]
    assert set(per_window_ranks({k: 5.0 for k in "ABCD"}).values()) == {2.5}


@given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=7))
def test_ranks_invariant_under_monotone_map(vals):
    scores = {f"m{i}": float(v) for i, v in enumerate(vals)}
    mapped = {k: 2.0 * v**3 + 7.0 for k, v in scores.items()}
    assert per_window_ranks(mapped) == per_window_ranks(scores)


def test_rank_distribution_examples():
    assert rank_distribution([{"A": 1.0, "B": 2.0}]) == {
        "A": {"R1": 1.0, "R2": 0.0, "R3": 0.0, "R4": 0.0, "R5-6": 0.0},
        "B": {"R1": 0.0, "R2": 1.0, "R3": 0.0, "R4": 0.0, "R5-6": 0.0},
    }
    ranks = per_window_ranks({"A": 1, "B": 2, "C": 3, "D": 4, "E": 4, "F": 6})
    assert ranks["D"] == 4.5
    assert rank_distribution([ranks])["D"] == {"R1": 0, "R2": 0, "R3": 0, "R4": 0.5, "R5-6": 0.5}


def test_rank_distribution_three_way_tie():
    dist = rank_distribution([per_window_ranks({"A": 1.0, "B": 1.0, "C": 1.0})])
    for m in "ABC":
        assert dist[m]["R1"] == pytest.approx(1 / 3)
        assert dist[m]["R3"] == pytest.approx(1 / 3)


@given(st.lists(st.lists(st.integers(0, 4), min_size=6, max_size=6), min_size=1, max_size=20))
def test_rank_distribution_rows_sum_to_window_count(windows):
    ranks = [per_window_ranks({f"m{i}": v for i, v in enumerate(w)}) for w in windows]
    dist = rank_distribution(ranks)
    for row in dist.values():
        assert sum(row.values()) == pytest.approx(len(windows))
    for band in ("R1", "R2", "R3", "R4"):
        assert sum(row[band] for row in dist.values()) == pytest.approx(len(windows))


# --- head to head ---------------------------------------------------------

def test_head_to_head_examples():
    means = {f"d{i}": {"A": 1.0, "B": 2.0} for i in range(6)}
    assert head_to_head(means)["A"]["B"] == 6
    same = {f"d{i}": {"A": 1.0, "B": 1.0} for i in range(6)}
    w = head_to_head(same)
    assert w["A"]["B"] == 0 and w["B"]["A"] == 0
    mixed = {f"d{i}": {"A": float(i < 3), "B": 0.5} for i in range(6)}
    assert head_to_head(mixed)["B"]["A"] == 3 and head_to_head(mixed)["A"]["B"] == 3


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=10))
def test_head_to_head_partition(pairs):
    means = {f"d{i}": {"A": float(a), "B": float(b)} for i, (a, b) in enumerate(pairs)}
    w = head_to_head(means)
    ties = sum(a == b for a, b in pairs)
    assert w["A"]["B"] + w["B"]["A"] + ties == len(pairs)


# --- Wilcoxon -------------------------------------------------------------

def test_wilcoxon_examples():
    assert wilcoxon_signed_rank([1, 2, 3, 4, 5], "greater").pvalue == 0.03125
    assert wilcoxon_signed_rank([0.7], "greater").pvalue == 0.5
    assert wilcoxon_signed_rank([2.0, -2.0], "greater").pvalue == 0.75
    with pytest.raises(ValueError, match="no signed information"):
        wilcoxon_signed_rank([0.0, 0.0])


def test_wilcoxon_exact_matches_brute_force():
    rng = np.random.default_rng(12345)
    for i in range(200):
        n = int(rng.integers(1, 11))
        # integer grid gives ties and zeros
        d = rng.integers(-4, 5, size=n).astype(float)
        if not np.any(d):
            d[0] = 1.0
        for alt in ("less", "greater", "two-sided"):
            got = wilcoxon_signed_rank(d, alt, method="exact").pvalue
            assert got == pytest.approx(brute_wilcoxon(d, alt), abs=1e-12), (d, alt)


def test_wilcoxon_exact_matches_scipy_tie_free():
    from scipy.stats import wilcoxon

    rng = np.random.default_rng(3)
    for _ in range(30):
        d = rng.normal(0.3, 1, size=int(rng.integers(5, 20)))
        ref = wilcoxon(d, alternative="greater", method="exact").pvalue
        assert wilcoxon_signed_rank(d, "greater").pvalue == pytest.approx(ref, rel=1e-10)


def test_wilcoxon_normal_approx_close_to_exact_at_25():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        d = rng.normal(rng.uniform(-0.5, 0.5), 1, size=25)
        for alt in ("less", "greater", "two-sided"):
            exact = wilcoxon_signed_rank(d, alt, method="exact").pvalue
            approx = wilcoxon_signed_rank(d, alt, method="approx").pvalue
            worst = max(worst, abs(exact - approx))
    assert worst < 0.01


def test_wilcoxon_auto_switch():
    assert wilcoxon_signed_rank(np.arange(1, 26), "greater").method == "exact"
    assert wilcoxon_signed_rank(np.arange(1, 27), "greater").method == "approx"


def test_wilcoxon_approx_matches_scipy_with_ties():
    from scipy.stats import wilcoxon

    d = np.random.default_rng(5).integers(-6, 7, size=120).astype(float)
    ref = wilcoxon(d, alternative="less", method="approx", correction=True, zero_method="wilcox")
    assert wilcoxon_signed_rank(d, "less").pvalue == pytest.approx(ref.pvalue, rel=1e-9)
