"""Geometric Brownian motion null model: moment fit and seeded replicas.

Replicas use the exact log-normal step with dt = 1 trading day::

    x(t+1) = x(t) * exp((mu - sigma**2 / 2) + sigma * Z_t)

Gaussian draws come from a Philox4x64 counter-based generator keyed by
``(seed, index)``, so replica ``index`` is reproducible on its own. Each raw
64-bit output is mapped to the open interval (0, 1) via its top 53 bits plus
half an ulp, then through the inverse normal CDF (``scipy.special.ndtri``).
Both steps are fixed: archived seeds reproduce series bit-for-bit.
"""

from __future__ import annotations

import datetime as dt
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .market_data import PriceSeries, _trading_days, save_series

__all__ = [
    "GbmParams",
    "ReplicaSet",
    "fit_gbm",
    "gaussian_draws",
    "simulate_replica",
    "simulate_replicas",
    "write_replicas",
]

DEFAULT_REPLICAS = 10
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class GbmParams:
    """Daily drift ``mu``, daily volatility ``sigma``, start price and length."""

    mu: float
    sigma: float
    x0: float = 100.0
    T: int = 5301

    def __post_init__(self) -> None:
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not self.x0 > 0:
            raise ValueError(f"x0 must be > 0, got {self.x0}")
        if int(self.T) != self.T or self.T < 2:
            raise ValueError(f"T must be an integer >= 2, got {self.T}")
        object.__setattr__(self, "T", int(self.T))


@dataclass(frozen=True)
class ReplicaSet:
    params: GbmParams
    seed: int
    count: int
    series: tuple[PriceSeries, ...]


def fit_gbm(series: PriceSeries) -> GbmParams:
    """Moment fit on daily log returns.

    sigma is the sample standard deviation (ddof=1) of the T-1 log returns and
    mu = mean + sigma**2 / 2, undoing the Ito correction of the log drift.
    """
    if series.T < 3:
        raise ValueError(f"{series.ticker}: need T >= 3 to fit GBM, got {series.T}")
    r = np.diff(np.log(series.prices))
    sigma = float(np.std(r, ddof=1))
    mu = float(np.mean(r)) + sigma**2 / 2
    return GbmParams(mu=mu, sigma=sigma, x0=float(series.prices[0]), T=series.T)


def gaussian_draws(seed: int, index: int, n: int) -> np.ndarray:
    """``n`` standard normal draws determined by ``(seed, index)`` alone."""
    if not (0 <= seed <= _SEED_MASK and 0 <= index <= _SEED_MASK):
        raise ValueError("seed and index must be unsigned 64-bit integers")
    bitgen = np.random.Philox(key=np.array([seed, index], dtype=np.uint64))
    raw = bitgen.random_raw(n)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def simulate_replica(
    params: GbmParams,
    seed: int,
    index: int,
    *,
    ticker: str | None = None,
    dates: Sequence[dt.date] | None = None,
) -> PriceSeries:
    """One GBM path of length ``params.T`` starting at ``params.x0``.

    ``dates`` lets a replica share the calendar of the series it was fitted
    to; by default consecutive weekdays from 2000-01-03 are used.
    """
    z = gaussian_draws(seed, index, params.T - 1)
    steps = (params.mu - params.sigma**2 / 2) + params.sigma * z
    log_path = np.concatenate(([0.0], np.cumsum(steps)))
    prices = params.x0 * np.exp(log_path)
    prices[0] = params.x0
    if not np.all(prices > 0):
        raise FloatingPointError("GBM path underflowed to a non-positive price")
    if dates is None:
        dates = _trading_days(params.T, dt.date(2000, 1, 3))
    elif len(dates) != params.T:
        raise ValueError(f"got {len(dates)} dates for T={params.T}")
    return PriceSeries(ticker or f"gbm_{seed}_{index:04d}", dates, prices)


def simulate_replicas(
    params: GbmParams,
    seed: int,
    count: int = DEFAULT_REPLICAS,
    *,
    prefix: str = "gbm",
    dates: Sequence[dt.date] | None = None,
    workers: int = 1,
) -> ReplicaSet:
    if count < 1:
        raise ValueError(f"replica count must be >= 1, got {count}")

    def one(i: int) -> PriceSeries:
        return simulate_replica(params, seed, i, ticker=f"{prefix}{i:04d}", dates=dates)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            series = list(pool.map(one, range(count)))
    else:
        series = [one(i) for i in range(count)]
    return ReplicaSet(params, seed, count, tuple(series))


def write_replicas(replicas: ReplicaSet, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for s in replicas.series:
        path = out_dir / f"{s.ticker}.csv"
        save_series(s, path)
        paths.append(path)
    return paths
