"""Forecast one seasonal series with CSP and look inside the mixture.

Run: python3 demos/01_forecast_one_series.py
"""

import numpy as np

from cspool import TimeSeries
from cspool.core import SeedSpec, derive_rng
from cspool.forecasters import (
    CspParams,
    ForecastRequest,
    build_residual_pool,
    build_seasonal_pool,
    csp_weight,
    forecast_csp,
    seasonal_naive,
)
from cspool.scoring import score_window

# Hourly series with a daily cycle and a level shift two thirds of the way in.
t = np.arange(24 * 20)
rng = np.random.default_rng(5)
y = 50 + 10 * np.sin(2 * np.pi * t / 24) + rng.normal(0, 1, t.size)
y[320:] += 8
series = TimeSeries("demo", y, start="2024-01-01T00:00:00", freq="H")
history, future = series.head(t.size - 24), y[-24:]
print(f"history T={len(history)}, season m={history.season}")

# The two pools behind the forecast.
params = CspParams("adaptive")
resid = build_residual_pool(history, params)
print(f"residual pool: {resid.residuals.size} lag-{resid.lag} differences, "
      f"median {np.median(resid.residuals):+.2f}")
pool = build_seasonal_pool(history, 1, params.recency_rate, params.age_units)
print(f"seasonal pool for h=1: {len(pool)} same-phase values, weight w={csp_weight(24, len(pool), params)}")
print("seasonal naive, first 4 steps:", np.round(seasonal_naive(history, 4), 2))

# A seeded forecast is reproducible from (seeds, method, dataset, series, window).
seeds = SeedSpec(driver_seed=0, method_seed=42)
req = ForecastRequest(history, 24, 100, derive_rng(seeds, "csp-adaptive", "demo", "demo", 0))
S = forecast_csp(req, params)
lo, med, hi = S.quantiles([0.025, 0.5, 0.975])[:6].T
for h in range(6):
    print(f"h={h + 1:2d}  [{lo[h]:6.2f}, {hi[h]:6.2f}]  median {med[h]:6.2f}  actual {future[h]:6.2f}")

sc = score_window(S, future)
print(f"CRPS {sc.crps:.3f}  normalised MQL {sc.mql_norm:.4f}  "
      f"95% coverage {sc.coverage95:.2f}  width {sc.width95:.2f}")
