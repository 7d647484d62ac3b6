"""Profit landscapes of threshold trading strategies on daily prices."""

from .fractal_scaling import ScalingFit, ScalingSeries, fit_exponent, measure_scaling
from .gbm import GbmParams, fit_gbm, simulate_replica, simulate_replicas
from .landscape import (
    GridSpec,
    LandscapeGrid,
    MaximaResult,
    Neighborhood,
    find_local_maxima,
    max_profit_strategy,
    sweep,
)
from .market_data import (
    AlignmentPolicy,
    DataError,
    PriceSeries,
    Universe,
    load_series,
    load_universe,
    synthesize_series,
)
from .stability import (
    optimize_on_window,
    rolling_interval_test,
    spatial_stability_test,
    stability_report,
    temporal_stability_test,
)
from .strategy_engine import (
    BacktestResult,
    StrategyKind,
    StrategyParams,
    buy_and_hold_profit,
    run_backtest,
    signal,
)

__version__ = "0.1.0"
