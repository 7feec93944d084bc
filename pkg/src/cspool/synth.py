"""Seeded synthetic series generators.

All families share one additive model::

    y_t = level + amplitude * sin(2 pi (t + phase) / period)
          + slope * t + level shifts + random walk + N(0, noise^2)

and differ only in which components are switched on by default.
"""

from __future__ import annotations

from datetime import datetime, timedelta

import numpy as np

from .core import TimeSeries

__all__ = ["FAMILIES", "generate", "UnknownGeneratorError"]

_BASE = dict(
    n_series=10,
    length=480,
    period=24,
    amplitude=10.0,
    noise=1.0,
    level=50.0,
    slope=0.0,
    shift_rate=0.0,
    shift_scale=0.0,
    walk_scale=0.0,
    random_phase=True,
    freq="H",
    start="2020-01-01T00:00:00",
    seed=0,
)

FAMILIES = {
    "sinusoid": {},
    "level_shift": dict(shift_rate=0.01, shift_scale=8.0),
    "trend": dict(slope=0.05),
    "seasonal_walk": dict(walk_scale=0.3),
    "white_noise": dict(amplitude=0.0, noise=5.0),
}

_STEP = {"H": timedelta(hours=1), "D": timedelta(days=1), "W": timedelta(weeks=1)}


class UnknownGeneratorError(ValueError):
    pass


def _shifts(rng: np.random.Generator, n: int, rate: float, scale: float) -> np.ndarray:
    if rate <= 0 or scale <= 0:
        return np.zeros(n)
    jumps = np.where(rng.random(n) < rate, rng.choice([-1.0, 1.0], size=n) * scale, 0.0)
    return np.cumsum(jumps)


def generate(family: str, **params) -> list[TimeSeries]:
    """Generate ``n_series`` series of one family; fully determined by ``seed``.

    >>> [len(s) for s in generate("sinusoid", n_series=2, length=48)]
    [48, 48]
    """
    if family not in FAMILIES:
        raise UnknownGeneratorError(
            f"unknown generator {family!r}; choose from {', '.join(sorted(FAMILIES))}"
        )
    p = {**_BASE, **FAMILIES[family]}
    unknown = set(params) - set(p)
    if unknown:
        raise TypeError(f"unknown generator parameters {sorted(unknown)}")
    p.update(params)
    n, period = int(p["length"]), int(p["period"])
    t = np.arange(1, n + 1, dtype=np.float64)
    out = []
    for i in range(int(p["n_series"])):
        rng = np.random.default_rng(np.random.SeedSequence([int(p["seed"]), i]))
        phase = rng.integers(0, period) if p["random_phase"] else 0
        y = p["level"] + p["amplitude"] * np.sin(2 * np.pi * (t + phase) / period)
        y = y + p["slope"] * t
        y = y + _shifts(rng, n, p["shift_rate"], p["shift_scale"])
        if p["walk_scale"] > 0:
            y = y + np.cumsum(rng.normal(0.0, p["walk_scale"], n))
        if p["noise"] > 0:
            y = y + rng.normal(0.0, p["noise"], n)
        out.append(
            TimeSeries(f"{family}_{i:03d}", y, p["start"], p["freq"], period)
        )
    return out


def timestamps(start: str, freq: str, n: int) -> list[str]:
    """ISO timestamps for ``n`` regular steps; unknown frequencies use hours."""
    t0 = datetime.fromisoformat(start)
    step = _STEP.get(freq.upper(), timedelta(hours=1))
    return [(t0 + k * step).isoformat() for k in range(n)]
