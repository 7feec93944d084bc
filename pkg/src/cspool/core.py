"""Shared data types, seeding, empirical quantiles and seasonal indexing.

Time indices follow the 1-based convention ``y_1 .. y_T`` in every public
function that takes a time index ``t``. Arrays are stored 0-based, so
``values[t - 1]`` holds ``y_t``.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "FREQ_SEASON",
    "DegeneratePoolError",
    "SampleMatrix",
    "SeedSpec",
    "TimeSeries",
    "derive_rng",
    "empirical_quantile",
    "row_quantiles",
    "season_for_freq",
    "seasonal_phase",
    "window_seed_sequence",
]

FREQ_SEASON = {"H": 24, "D": 7, "W": 52, "M": 12}


class DegeneratePoolError(ValueError):
    """Raised when a sampler has no values left to draw from."""


def season_for_freq(freq: str) -> int:
    """Default seasonal period for a frequency code.

    Multiples and anchors are stripped first, so ``"1H"`` and ``"W-SUN"``
    resolve like ``"H"`` and ``"W"``. Unknown codes get period 1.
    """
    code = re.sub(r"^\d+", "", freq.strip()).split("-")[0]
    if code in ("h", "H"):
        return FREQ_SEASON["H"]
    return FREQ_SEASON.get(code.upper() if len(code) == 1 else code, 1)


@dataclass(frozen=True)
class TimeSeries:
    """A univariate series with its start timestamp, frequency and period.

    ``season`` defaults to :func:`season_for_freq` when not given.
    """

    id: str
    values: np.ndarray
    start: str = "1970-01-01T00:00:00"
    freq: str = "H"
    season: int | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"series {self.id!r}: values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"series {self.id!r}: non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        season = season_for_freq(self.freq) if self.season is None else int(self.season)
        if season < 1:
            raise ValueError(f"series {self.id!r}: season must be >= 1, got {season}")
        object.__setattr__(self, "season", season)

    def __len__(self) -> int:
        return self.values.size

    def head(self, n: int) -> "TimeSeries":
        """The first ``n`` observations as a new series (same metadata)."""
        return TimeSeries(self.id, self.values[:n], self.start, self.freq, self.season)


@dataclass(frozen=True)
class SampleMatrix:
    """Empirical predictive sample, one row of ``budget`` draws per horizon step.

    Rows are independent multisets; columns are not trajectories.
    """

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] < 1:
            raise ValueError(f"sample matrix must be 2-d with H >= 1, got shape {s.shape}")
        if s.shape[1] < 2:
            raise ValueError(f"sample matrix needs B >= 2 columns, got {s.shape[1]}")
        if not np.all(np.isfinite(s)):
            raise ValueError("sample matrix contains non-finite entries")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def horizon(self) -> int:
        return self.samples.shape[0]

    @property
    def budget(self) -> int:
        return self.samples.shape[1]

    def quantiles(self, levels: Sequence[float]) -> np.ndarray:
        """``(H, len(levels))`` array of per-row empirical quantiles."""
        return row_quantiles(self.samples, levels)


@dataclass(frozen=True)
class SeedSpec:
    """Experiment-driver seed plus the internal sampler seed."""

    driver_seed: int = 0
    method_seed: int = 42

    def __post_init__(self):
        for name in ("driver_seed", "method_seed"):
            v = getattr(self, name)
            if not 0 <= int(v) < 2**64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")


def empirical_quantile(sorted_samples: Sequence[float], q: float) -> float:
    """Linearly interpolated order statistic (type 7).

    With ``n`` ascending samples ``x[0..n-1]`` the fractional rank is
    ``h = (n - 1) * q``; the result is ``x[j] + (h - j) * (x[j+1] - x[j])``
    with ``j = floor(h)`` and ``x[n] := x[n-1]``.

    Examples
    --------
    >>> empirical_quantile([10, 20, 30, 40], 0.25)
    17.5
    """
    n = len(sorted_samples)
    if n == 0:
        raise ValueError("empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    h = (n - 1) * q
    j = math.floor(h)
    lo = float(sorted_samples[j])
    hi = float(sorted_samples[min(j + 1, n - 1)])
    return lo + (h - j) * (hi - lo)


def row_quantiles(samples: np.ndarray, levels: Sequence[float]) -> np.ndarray:
    """Vectorised :func:`empirical_quantile` over the rows of a 2-d array."""
    x = np.sort(np.asarray(samples, dtype=np.float64), axis=1)
    n = x.shape[1]
    if n == 0:
        raise ValueError("empty sample")
    q = np.asarray(levels, dtype=np.float64)
    if np.any((q < 0) | (q > 1)):
        raise ValueError("quantile levels must lie in [0, 1]")
    h = (n - 1) * q
    j = np.floor(h).astype(np.intp)
    frac = h - j
    lo = x[:, j]
    hi = x[:, np.minimum(j + 1, n - 1)]
    return lo + frac * (hi - lo)


def seasonal_phase(t: int, m: int) -> int:
    """Phase of 1-based time index ``t`` in a cycle of length ``m`` (``t mod m``)."""
    if t < 1 or m < 1:
        raise ValueError(f"need t >= 1 and m >= 1, got t={t}, m={m}")
    return t % m


def _word(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def window_seed_sequence(
    seed: SeedSpec, dataset: str, series_id: str, window: int
) -> np.random.SeedSequence:
    """Method-independent seed material for one evaluation window."""
    return np.random.SeedSequence(
        entropy=[int(seed.driver_seed), int(seed.method_seed)],
        spawn_key=(_word(dataset), _word(series_id), int(window)),
    )


def derive_rng(
    seed: SeedSpec, method: str, dataset: str, series_id: str, window: int
) -> np.random.Generator:
    """Deterministic PCG64 stream for one (method, dataset, series, window) task.

    The window-level :class:`~numpy.random.SeedSequence` is shared by all
    methods; the method name is appended to its spawn key so each method
    draws from its own child stream. String fields are hashed with 64-bit
    BLAKE2b, so the stream is identical across platforms and runs.
    """
    parent = window_seed_sequence(seed, dataset, series_id, window)
    child = np.random.SeedSequence(
        entropy=parent.entropy, spawn_key=parent.spawn_key + (_word(method),)
    )
    return np.random.Generator(np.random.PCG64(child))
