"""Training-free probabilistic forecasting with Conformal Seasonal Pools.

The package provides empirical and conformal samplers that return an
``H x B`` predictive sample matrix, sample-based scores, paired
statistics, and a rolling-origin benchmark harness.
"""

from .core import (
    DegeneratePoolError,
    SampleMatrix,
    SeedSpec,
    TimeSeries,
    derive_rng,
    empirical_quantile,
    seasonal_phase,
)
from .forecasters import (
    CspParams,
    ForecastRequest,
    METHODS,
    forecast_adaptive_window_mci,
    forecast_csp,
    forecast_empirical_pool,
    forecast_npts,
    forecast_residual,
    forecast_seasonal_npts,
    make_forecaster,
    seasonal_naive,
)
from .scoring import coverage, crps_empirical, interval_width, mql_normalized, pinball, score_window
from .stats import wilcoxon_signed_rank

__version__ = "0.1.0"
