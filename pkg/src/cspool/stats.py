"""Paired analysis of per-window scores: normalisation, ranks, wins, Wilcoxon."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata

__all__ = [
    "BANDS",
    "NonNormalizableWindow",
    "PairedSample",
    "WilcoxonResult",
    "head_to_head",
    "normalize_by_window_median",
    "per_window_ranks",
    "rank_distribution",
    "signed_rank_null",
    "wilcoxon_signed_rank",
]

BANDS = ("R1", "R2", "R3", "R4", "R5-6")
EXACT_MAX_N = 25

Alternative = Literal["less", "greater", "two-sided"]


class NonNormalizableWindow(ValueError):
    """The cross-method median of a window is not positive."""


def normalize_by_window_median(scores: Mapping[str, float]) -> dict[str, float]:
    """Divide every method's score by the cross-method median of the window.

    >>> normalize_by_window_median({"A": 1.0, "B": 2.0, "C": 3.0})
    {'A': 0.5, 'B': 1.0, 'C': 1.5}
    """
    if len(scores) < 2:
        raise ValueError("need at least two methods to normalise")
    med = float(np.median(list(scores.values())))
    if not med > 0:
        raise NonNormalizableWindow(f"window median {med} is not positive")
    return {k: float(v) / med for k, v in scores.items()}


def per_window_ranks(scores: Mapping[str, float]) -> dict[str, float]:
    """Ascending ranks within one window (1 = lowest score), ties averaged."""
    names = list(scores)
    ranks = rankdata([scores[k] for k in names], method="average")
    return {k: float(r) for k, r in zip(names, ranks)}


def _band(position: int) -> str:
    return BANDS[min(position, len(BANDS)) - 1]


def rank_distribution(windows: Iterable[Mapping[str, float]]) -> dict[str, dict[str, float]]:
    """Count, per method, the windows landing in each rank band.

    A tie group spanning positions ``a..b`` (average rank ``(a+b)/2``)
    spreads one unit of mass evenly over those positions, so a rank of 4.5
    puts 0.5 in R4 and 0.5 in R5-6 and every method's row sums to the
    number of windows it was ranked in. The group size is recovered from
    how many methods share the same average rank.
    """
    counts: dict[str, dict[str, float]] = defaultdict(lambda: dict.fromkeys(BANDS, 0.0))
    for ranks in windows:
        group_size: dict[float, int] = defaultdict(int)
        for r in ranks.values():
            group_size[r] += 1
        for method, r in ranks.items():
            g = group_size[r]
            first = int(round(r - (g - 1) / 2))
            for pos in range(first, first + g):
                counts[method][_band(pos)] += 1.0 / g
    return {k: dict(v) for k, v in counts.items()}


def head_to_head(per_dataset_means: Mapping[str, Mapping[str, float]]) -> dict[str, dict[str, int]]:
    """``wins[a][b]``: datasets where ``a`` has a strictly lower mean than ``b``."""
    methods = sorted({m for d in per_dataset_means.values() for m in d})
    wins = {a: {b: 0 for b in methods if b != a} for a in methods}
    for means in per_dataset_means.values():
        for a in means:
            for b in means:
                if a != b and means[a] < means[b]:
                    wins[a][b] += 1
    return wins


@dataclass(frozen=True)
class PairedSample:
    labels: tuple[str, str]
    diffs: np.ndarray  # A - B per window


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W+, sum of ranks of positive differences
    pvalue: float
    n: int  # non-zero differences
    method: Literal["exact", "approx"]


def signed_rank_null(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Null distribution of ``2 W+`` as counts over ``0..sum(doubled_ranks)``.

    Each rank independently enters the positive sum or not, so the count
    vector is the product of the polynomials ``1 + z^r``. Ranks are passed
    doubled to keep tied half-ranks integral.
    """
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    reach = 0
    for r in doubled_ranks:
        r = int(r)
        counts[r:reach + r + 1] += counts[:reach + 1].copy()
        reach += r
    return counts


def wilcoxon_signed_rank(
    diffs: Sequence[float], alternative: Alternative = "two-sided", method: str = "auto"
) -> WilcoxonResult:
    """One-sample Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped. For ``n <= 25`` the p-value comes from
    the exact distribution of ``W+`` over all ``2^n`` sign assignments,
    honouring tied average ranks. Larger samples use the normal
    approximation with tie-corrected variance and a 0.5 continuity
    correction. ``"greater"`` tests for positive location of ``diffs``.
    """
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise ValueError("no signed information")
    if alternative not in ("less", "greater", "two-sided"):
        raise ValueError(f"unknown alternative {alternative!r}")
    ranks = rankdata(np.abs(d), method="average")
    w_plus = float(ranks[d > 0].sum())
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "approx"

    if method == "exact":
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = signed_rank_null(doubled)
        probs = counts / counts.sum()
        k = int(round(2 * w_plus))
        p_greater = float(probs[k:].sum())
        p_less = float(probs[:k + 1].sum())
    elif method == "approx":
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
        sd = math.sqrt(var)
        if sd == 0:
            p_greater = p_less = 1.0
        else:
            p_greater = float(norm.sf((w_plus - mean - 0.5) / sd))
            p_less = float(norm.cdf((w_plus - mean + 0.5) / sd))
    else:
        raise ValueError(f"unknown method {method!r}")

    if alternative == "greater":
        p = p_greater
    elif alternative == "less":
        p = p_less
    else:
        p = 2.0 * min(p_greater, p_less)
    return WilcoxonResult(w_plus, min(p, 1.0), n, method)
