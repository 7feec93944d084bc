"""Sample-based scores: CRPS, pinball loss, normalised MQL, coverage, width."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SampleMatrix, row_quantiles

__all__ = [
    "DEFAULT_LEVELS",
    "WindowScores",
    "ZeroScaleError",
    "coverage",
    "crps_empirical",
    "crps_rows",
    "interval_bounds",
    "interval_width",
    "mql_normalized",
    "pinball",
    "score_window",
]

DEFAULT_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


class ZeroScaleError(ValueError):
    """The target window sums to zero in absolute value."""


def _matrix(S) -> np.ndarray:
    return S.samples if isinstance(S, SampleMatrix) else np.atleast_2d(np.asarray(S, dtype=np.float64))


def crps_rows(samples: np.ndarray, y: np.ndarray, fair: bool = False) -> np.ndarray:
    """Energy-form CRPS of each row of ``samples`` against the matching ``y``.

    Uses the sorted identity
    ``sum_ij |x_i - x_j| = 2 * sum_i (2i - B - 1) x_(i)``, so each row costs
    ``O(B log B)``. ``fair=True`` swaps the ``2 B^2`` spread divisor for
    ``2 B (B - 1)``.
    """
    x = np.sort(np.atleast_2d(np.asarray(samples, dtype=np.float64)), axis=1)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    B = x.shape[1]
    if B == 0:
        raise ValueError("empty sample")
    accuracy = np.abs(x - y).mean(axis=1)
    coef = 2.0 * np.arange(1, B + 1) - B - 1
    pair_sum = 2.0 * (x @ coef)
    if fair:
        if B < 2:
            raise ValueError("fair CRPS needs at least 2 samples")
        spread = pair_sum / (2.0 * B * (B - 1))
    else:
        spread = pair_sum / (2.0 * B * B)
    return accuracy - spread


def crps_empirical(samples: Sequence[float], y: float, fair: bool = False) -> float:
    """Empirical CRPS of one predictive sample against a scalar outcome.

    >>> crps_empirical([0.0, 1.0], 0.0)
    0.25
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.size == 0:
        raise ValueError("empty sample")
    return float(crps_rows(s.reshape(1, -1), np.array([y]), fair)[0])


def pinball(y, yhat, q: float):
    """Quantile loss ``q (y - yhat)`` above the quantile, ``(1 - q)(yhat - y)`` below."""
    diff = np.asarray(y, dtype=np.float64) - np.asarray(yhat, dtype=np.float64)
    loss = np.where(diff >= 0, q * diff, (q - 1.0) * diff)
    return float(loss) if loss.ndim == 0 else loss


def mql_normalized(S, y, levels: Sequence[float] = DEFAULT_LEVELS) -> float:
    """Weighted quantile loss: ``sum_h sum_q 2*pinball / (|levels| * sum_h |y_h|)``."""
    x = _matrix(S)
    y = np.asarray(y, dtype=np.float64)
    if len(levels) == 0:
        raise ValueError("need at least one quantile level")
    scale = np.abs(y).sum()
    if scale == 0:
        raise ZeroScaleError("zero-scale window")
    qhat = row_quantiles(x, levels)
    total = 0.0
    for k, q in enumerate(levels):
        total += np.sum(2.0 * pinball(y, qhat[:, k], q))
    return float(total / (len(levels) * scale))


def interval_bounds(S, alpha: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Central ``1 - alpha`` interval endpoints per row."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    b = row_quantiles(_matrix(S), [alpha / 2, 1 - alpha / 2])
    return b[:, 0], b[:, 1]


def coverage(S, y, alpha: float = 0.05) -> float:
    """Fraction of horizon steps whose target lies in the closed central interval."""
    lo, hi = interval_bounds(S, alpha)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean((lo <= y) & (y <= hi)))


def interval_width(S, alpha: float = 0.05) -> float:
    lo, hi = interval_bounds(S, alpha)
    return float(np.mean(hi - lo))


@dataclass(frozen=True)
class WindowScores:
    crps: float
    mql_norm: float  # NaN for a zero-scale window
    coverage95: float
    width95: float
    crps_h: np.ndarray
    covered_h: np.ndarray
    width_h: np.ndarray
    zero_scale: bool = False


def score_window(
    S, y, levels: Sequence[float] = DEFAULT_LEVELS, alpha: float = 0.05, fair: bool = False
) -> WindowScores:
    """All window metrics at once; a zero-scale target leaves ``mql_norm`` as NaN."""
    x = _matrix(S)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] != y.size:
        raise ValueError(f"horizon mismatch: {x.shape[0]} sample rows vs {y.size} targets")
    crps_h = crps_rows(x, y, fair)
    lo, hi = interval_bounds(x, alpha)
    covered = (lo <= y) & (y <= hi)
    try:
        mql = mql_normalized(x, y, levels)
        zero = False
    except ZeroScaleError:
        mql, zero = float("nan"), True
    return WindowScores(
        crps=float(crps_h.mean()),
        mql_norm=mql,
        coverage95=float(covered.mean()),
        width95=float((hi - lo).mean()),
        crps_h=crps_h,
        covered_h=covered,
        width_h=hi - lo,
        zero_scale=zero,
    )
