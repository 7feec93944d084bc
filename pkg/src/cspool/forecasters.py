"""Training-free predictive samplers.

Every forecaster maps a :class:`ForecastRequest` to a
:class:`~cspool.core.SampleMatrix` and is a pure function of the request,
its parameters and the request's random stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal

import numpy as np

from .core import DegeneratePoolError, SampleMatrix, TimeSeries

__all__ = [
    "CspParams",
    "ForecastRequest",
    "ResidualPool",
    "SeasonalPool",
    "METHODS",
    "build_residual_pool",
    "build_seasonal_pool",
    "csp_weight",
    "detect_period_acf",
    "forecast_adaptive_window_mci",
    "forecast_csp",
    "forecast_empirical_pool",
    "forecast_npts",
    "forecast_residual",
    "forecast_seasonal_npts",
    "make_forecaster",
    "recency_weights",
    "sample_autocorrelation",
    "seasonal_naive",
]

MIN_RESIDUALS = 5


@dataclass(frozen=True)
class ForecastRequest:
    history: TimeSeries
    horizon: int
    budget: int
    rng: np.random.Generator

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.budget < 2:
            raise ValueError(f"budget must be >= 2, got {self.budget}")


@dataclass(frozen=True)
class CspParams:
    """Conformal Seasonal Pools settings.

    Parameters
    ----------
    variant : {"adaptive", "fixed"}
        ``"fixed"`` always uses ``full_weight`` for the seasonal branch.
    calib_fraction : float
        Share of the most recent history used for the residual pool.
    recency_rate : float
        Exponential decay rate of the seasonal-pool weights.
    min_pool : int
        Seasonal pools smaller than this are "thin".
    thin_weight, full_weight : float
        Seasonal-branch weight for thin and regular pools.
    age_units : {"steps", "normalized"}
        Age ``T - t`` in raw steps, or divided by ``T``.
    """

    variant: Literal["adaptive", "fixed"] = "adaptive"
    calib_fraction: float = 0.5
    recency_rate: float = 0.01
    min_pool: int = 3
    thin_weight: float = 0.3
    full_weight: float = 0.5
    age_units: Literal["steps", "normalized"] = "steps"

    def __post_init__(self):
        if self.variant not in ("adaptive", "fixed"):
            raise ValueError(f"unknown CSP variant {self.variant!r}")
        if not 0.0 < self.calib_fraction <= 1.0:
            raise ValueError("calib_fraction must lie in (0, 1]")
        if self.recency_rate < 0:
            raise ValueError("recency_rate must be >= 0")
        for w in (self.thin_weight, self.full_weight):
            if not 0.0 <= w <= 1.0:
                raise ValueError("mixture weights must lie in [0, 1]")
        if self.age_units not in ("steps", "normalized"):
            raise ValueError(f"unknown age_units {self.age_units!r}")


@dataclass(frozen=True)
class ResidualPool:
    residuals: np.ndarray
    lag: int
    source_window: tuple[int, int]  # 1-based inclusive range of t


@dataclass(frozen=True)
class SeasonalPool:
    values: np.ndarray
    weights: np.ndarray
    phase: int

    def __len__(self) -> int:
        return self.values.size


def seasonal_naive(history: TimeSeries, horizon: int) -> np.ndarray:
    """Seasonal naive point forecast ``mu_h = y_{T+h-m}``.

    Indices past ``T`` step back by ``m`` to the latest same-phase
    observation; indices before the start fall back to ``y_T``.
    """
    y = history.values
    T, m = y.size, history.season
    mu = np.empty(horizon)
    for h in range(1, horizon + 1):
        idx = T + h - m
        if idx > T:
            idx -= m * math.ceil((idx - T) / m)
        mu[h - 1] = y[idx - 1] if idx >= 1 else y[-1]
    return mu


def _lagged_diffs(y: np.ndarray, lag: int, first: int) -> np.ndarray:
    # y_t - y_{t-lag} for 1-based t in [first, T], t > lag
    start = max(first, lag + 1)
    if start > y.size:
        return np.empty(0)
    return y[start - 1:] - y[start - 1 - lag:y.size - lag]


def build_residual_pool(history: TimeSeries, params: CspParams = CspParams()) -> ResidualPool:
    """Signed lag-``m`` residuals over the most recent ``floor(rho*T)`` steps.

    Fewer than five residuals widens the window to the whole history; if
    lag ``m`` still yields nothing, first differences are used instead.
    """
    y = history.values
    T = y.size
    lag = max(history.season, 1)
    first = T - math.floor(params.calib_fraction * T) + 1
    r = _lagged_diffs(y, lag, first)
    if r.size < MIN_RESIDUALS:
        first = 1
        r = _lagged_diffs(y, lag, first)
    if r.size == 0:
        lag = 1
        r = _lagged_diffs(y, lag, first)
    if r.size == 0:
        raise DegeneratePoolError("degenerate pool")
    return ResidualPool(r, lag, (max(first, lag + 1), T))


def recency_weights(ages: np.ndarray, rate: float) -> np.ndarray:
    """Normalised ``exp(-rate * age)`` weights; the youngest point wins as rate grows."""
    ages = np.asarray(ages, dtype=np.float64)
    if ages.size == 0:
        return ages
    if math.isinf(rate):
        w = (ages == ages.min()).astype(np.float64)
    else:
        # shift by the minimum age for numerical range; cancels on normalising
        w = np.exp(-rate * (ages - ages.min()))
    return w / w.sum()


def _ages(T: int, t: np.ndarray, units: str) -> np.ndarray:
    age = (T - t).astype(np.float64)
    return age / T if units == "normalized" else age


def build_seasonal_pool(
    history: TimeSeries, h: int, recency_rate: float = 0.01, age_units: str = "steps"
) -> SeasonalPool:
    """Same-phase observations for target ``T+h`` with exponential recency weights."""
    y = history.values
    T, m = y.size, history.season
    phase = (T + h) % m
    t = np.arange(1, T + 1)
    t = t[t % m == phase]
    return SeasonalPool(y[t - 1], recency_weights(_ages(T, t, age_units), recency_rate), phase)


def csp_weight(m: int, pool_size: int, params: CspParams = CspParams()) -> float:
    """Seasonal-branch mixture weight for one horizon step."""
    if params.variant == "fixed":
        return params.full_weight
    if m <= 1:
        return 0.0
    if pool_size < params.min_pool:
        return params.thin_weight
    return params.full_weight


def _weighted_draw(values: np.ndarray, weights: np.ndarray, n: int, rng: np.random.Generator):
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return values[np.searchsorted(cdf, rng.random(n), side="right")]


def forecast_csp(req: ForecastRequest, params: CspParams = CspParams()) -> SampleMatrix:
    """Conformal Seasonal Pools: seasonal-pool draws mixed with ``mu_h + r`` draws.

    Per step ``h`` a uniform variate picks the branch: below ``w_h`` a
    recency-weighted draw from the same-phase pool, otherwise the seasonal
    naive value plus a residual drawn uniformly from the calibration pool.
    An empty seasonal pool forces ``w_h = 0``. With ``w_h = 0`` no branch
    variates are consumed, so the output coincides with
    :func:`forecast_residual` on the same stream.
    """
    hist, H, B, rng = req.history, req.horizon, req.budget, req.rng
    mu = seasonal_naive(hist, H)
    resid = build_residual_pool(hist, params).residuals
    out = np.empty((H, B))
    for h in range(1, H + 1):
        pool = build_seasonal_pool(hist, h, params.recency_rate, params.age_units)
        w = csp_weight(hist.season, len(pool), params) if len(pool) else 0.0
        if w <= 0.0:
            out[h - 1] = mu[h - 1] + resid[rng.integers(0, resid.size, size=B)]
            continue
        take_season = rng.random(B) < w
        k = int(take_season.sum())
        row = np.empty(B)
        row[take_season] = _weighted_draw(pool.values, pool.weights, k, rng)
        row[~take_season] = mu[h - 1] + resid[rng.integers(0, resid.size, size=B - k)]
        out[h - 1] = row
    return SampleMatrix(out)


def forecast_residual(req: ForecastRequest, params: CspParams = CspParams()) -> SampleMatrix:
    """Residual-only conformal sampler: ``mu_h + r`` with ``r`` uniform over the pool."""
    mu = seasonal_naive(req.history, req.horizon)
    resid = build_residual_pool(req.history, params).residuals
    out = np.empty((req.horizon, req.budget))
    for h in range(req.horizon):
        out[h] = mu[h] + resid[req.rng.integers(0, resid.size, size=req.budget)]
    return SampleMatrix(out)


def forecast_npts(req: ForecastRequest, recency_rate: float = 0.01) -> SampleMatrix:
    """Recency-weighted resampling of the whole history, i.i.d. per cell."""
    y = req.history.values
    T = y.size
    w = recency_weights(T - np.arange(1, T + 1), recency_rate)
    draws = _weighted_draw(y, w, req.horizon * req.budget, req.rng)
    return SampleMatrix(draws.reshape(req.horizon, req.budget))


def forecast_seasonal_npts(req: ForecastRequest, recency_rate: float = 0.01) -> SampleMatrix:
    """NPTS restricted to observations sharing the target's seasonal phase.

    An empty phase set falls back to the whole history.
    """
    y = req.history.values
    T, m = y.size, req.history.season
    t_all = np.arange(1, T + 1)
    out = np.empty((req.horizon, req.budget))
    for h in range(1, req.horizon + 1):
        t = t_all[t_all % m == (T + h) % m]
        if t.size == 0:
            t = t_all
        out[h - 1] = _weighted_draw(y[t - 1], recency_weights(T - t, recency_rate), req.budget, req.rng)
    return SampleMatrix(out)


def sample_autocorrelation(y: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample ACF at lags ``0..max_lag`` (biased estimator, common denominator).

    Returns all zeros past lag 0 for a constant series.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    d = y - y.mean()
    denom = float(d @ d)
    acf = np.zeros(max_lag + 1)
    acf[0] = 1.0
    if denom <= 0.0:
        return acf
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(d, nfft)
    full = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1]
    acf[1:] = full[1:] / denom
    return acf


def detect_period_acf(
    history: TimeSeries | np.ndarray, threshold: float = 0.3, max_lag: int | None = None
) -> int | None:
    """Lag in ``2..max_lag`` with the largest ACF, if it exceeds ``threshold``.

    ``max_lag`` defaults to ``min(T // 2, 400)``. Ties go to the smallest lag.
    """
    y = history.values if isinstance(history, TimeSeries) else np.asarray(history, dtype=np.float64)
    T = y.size
    if T < 4:
        raise ValueError("period detection needs at least 4 observations")
    if max_lag is None:
        max_lag = min(T // 2, 400)
    max_lag = min(max_lag, T - 1)
    if max_lag < 2 or np.ptp(y) == 0.0:
        return None
    acf = sample_autocorrelation(y, max_lag)[2:]
    # FFT round-off can break exact ties between equal lags
    best = acf.max()
    lag = int(np.flatnonzero(acf >= best - 1e-12)[0]) + 2
    return lag if best > threshold else None


def forecast_adaptive_window_mci(req: ForecastRequest, threshold: float = 0.3) -> SampleMatrix:
    """``y_T`` plus h-step differences drawn from a data-dependent recent window.

    The window spans ``min(3p, T)`` steps when the ACF detector finds a
    period ``p``, else ``max(2H, ceil(T/4))`` steps (capped at ``T``).
    """
    y = req.history.values
    T, H = y.size, req.horizon
    p = detect_period_acf(y, threshold) if T >= 4 else None
    W = min(3 * p, T) if p else min(max(2 * H, math.ceil(T / 4)), T)
    win = y[T - W:]
    pools: list[np.ndarray] = []
    last = None
    for h in range(1, H + 1):
        d = win[h:] - win[:-h] if h < W else np.empty(0)
        if d.size == 0:
            if last is None:
                d = np.diff(y)
                if d.size == 0:
                    raise DegeneratePoolError("degenerate pool")
            else:
                d = last
        pools.append(d)
        last = d
    out = np.empty((H, req.budget))
    for h, d in enumerate(pools):
        out[h] = y[-1] + d[req.rng.integers(0, d.size, size=req.budget)]
    return SampleMatrix(out)


def forecast_empirical_pool(
    req: ForecastRequest, mode: Literal["full", "rolling", "seasonal"] = "full", window: int = 1
) -> SampleMatrix:
    """Uniform resampling from the full history, its last ``window`` points, or the target phase."""
    y = req.history.values
    T, m = y.size, req.history.season
    H, B, rng = req.horizon, req.budget, req.rng
    if mode == "full":
        return SampleMatrix(y[rng.integers(0, T, size=(H, B))])
    if mode == "rolling":
        if window < 1:
            raise ValueError("rolling window must be >= 1")
        pool = y[max(T - window, 0):]
        return SampleMatrix(pool[rng.integers(0, pool.size, size=(H, B))])
    if mode != "seasonal":
        raise ValueError(f"unknown empirical pool mode {mode!r}")
    t_all = np.arange(1, T + 1)
    out = np.empty((H, B))
    for h in range(1, H + 1):
        pool = y[t_all % m == (T + h) % m]
        if pool.size == 0:
            pool = y
        out[h - 1] = pool[rng.integers(0, pool.size, size=B)]
    return SampleMatrix(out)


Forecaster = Callable[[ForecastRequest], SampleMatrix]

_CSP_KEYS = {f for f in CspParams.__dataclass_fields__}


def _csp(variant: str, residual_only: bool = False):
    def build(**kw) -> Forecaster:
        params = replace(CspParams(), variant=variant, **{k: v for k, v in kw.items() if k in _CSP_KEYS})
        extra = set(kw) - _CSP_KEYS
        if extra:
            raise TypeError(f"unknown parameters {sorted(extra)}")
        fn = forecast_residual if residual_only else forecast_csp
        return lambda req: fn(req, params)
    return build


def _simple(fn, **defaults):
    def build(**kw) -> Forecaster:
        extra = set(kw) - set(defaults)
        if extra:
            raise TypeError(f"unknown parameters {sorted(extra)}")
        opts = {**defaults, **kw}
        return lambda req: fn(req, **opts)
    return build


METHODS: dict[str, Callable[..., Forecaster]] = {
    "csp-adaptive": _csp("adaptive"),
    "csp-fixed": _csp("fixed"),
    "seasonal-residual": _csp("adaptive", residual_only=True),
    "npts": _simple(forecast_npts, recency_rate=0.01),
    "seasonal-npts": _simple(forecast_seasonal_npts, recency_rate=0.01),
    "adaptive-window-mci": _simple(forecast_adaptive_window_mci, threshold=0.3),
    "empirical-full": _simple(forecast_empirical_pool, mode="full", window=1),
    "empirical-rolling": _simple(forecast_empirical_pool, mode="rolling", window=48),
    "empirical-seasonal": _simple(forecast_empirical_pool, mode="seasonal", window=1),
}


def make_forecaster(kind: str, **params) -> Forecaster:
    """Build a forecaster callable by registry name, e.g. ``make_forecaster("npts", recency_rate=0.1)``."""
    try:
        factory = METHODS[kind]
    except KeyError:
        raise KeyError(f"unknown method {kind!r}; valid methods: {', '.join(sorted(METHODS))}") from None
    return factory(**params)
