"""Threshold trading strategies on a single stock with a cash/shares portfolio.

S1 (contrarian) sells after the d-day log return rises above ``p`` and buys
after it falls below ``-q``; S2 (trend following) does the opposite. S0 is
buy-and-hold, evaluated in closed form.

The inner loop is compiled with numba and releases the GIL, so the landscape
sweep can run many backtests on threads over the same read-only price array.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numba
import numpy as np

from .market_data import PriceSeries

__all__ = [
    "BacktestResult",
    "Side",
    "Signal",
    "StrategyKind",
    "StrategyParams",
    "Trade",
    "buy_and_hold_profit",
    "log_returns",
    "run_backtest",
    "signal",
    "write_trades_csv",
]


class StrategyKind(enum.Enum):
    S0_BUY_AND_HOLD = "s0"
    S1_CONTRARIAN = "s1"
    S2_TREND_FOLLOWING = "s2"


class Signal(enum.Enum):
    BUY = "buy"
    SELL = "sell"
    HOLD = "hold"


class Side(enum.Enum):
    BUY = "buy"
    SELL = "sell"


# Integer codes shared with the compiled kernels.
_KIND_CODE = {StrategyKind.S1_CONTRARIAN: 1, StrategyKind.S2_TREND_FOLLOWING: 2}
_BUY, _SELL = 1, -1


@dataclass(frozen=True)
class StrategyParams:
    """Full specification of one trading rule S(p, q; f_b, f_s, d)."""

    kind: StrategyKind = StrategyKind.S1_CONTRARIAN
    p: float = 0.0
    q: float = 0.0
    f_b: float = 0.5
    f_s: float = 0.5
    d: int = 1
    fee: float = 0.001
    min_volume: int = 1
    initial_cash: float = 1e6

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        checks = [
            (self.p >= 0, "p must be >= 0"),
            (self.q >= 0, "q must be >= 0"),
            (0 <= self.f_b <= 1, "f_b must lie in [0, 1]"),
            (0 <= self.f_s <= 1, "f_s must lie in [0, 1]"),
            (int(self.d) == self.d and self.d >= 1, "d must be an integer >= 1"),
            (self.fee >= 0, "fee must be >= 0"),
            (
                int(self.min_volume) == self.min_volume and self.min_volume >= 1,
                "min_volume must be an integer >= 1",
            ),
            (self.initial_cash > 0, "initial_cash must be > 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(f"{message} ({self})")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "min_volume", int(self.min_volume))

    def with_thresholds(self, p: float, q: float) -> StrategyParams:
        return replace(self, p=p, q=q)


@dataclass(frozen=True)
class Trade:
    t: int
    side: Side
    volume: int
    price: float
    cash_after: float
    shares_after: int


@dataclass(frozen=True)
class BacktestResult:
    profit: float
    final_cash: float
    final_shares: int
    trades: tuple[Trade, ...]
    portfolio_value_series: np.ndarray | None = None


def signal(kind: StrategyKind, R: float, p: float, q: float) -> Signal:
    """Trade decision for one log return; both thresholds are strict."""
    kind = StrategyKind(kind)
    if kind is StrategyKind.S1_CONTRARIAN:
        if R > p:
            return Signal.SELL
        if R < -q:
            return Signal.BUY
    elif kind is StrategyKind.S2_TREND_FOLLOWING:
        if R > p:
            return Signal.BUY
        if R < -q:
            return Signal.SELL
    else:
        raise ValueError("signal() is defined for S1 and S2 only")
    return Signal.HOLD


@numba.njit(cache=True, nogil=True)
def _log_returns(prices, d):
    out = np.zeros(prices.shape[0])
    for i in range(d, prices.shape[0]):
        out[i] = math.log(prices[i] / prices[i - d])
    return out


def log_returns(prices: np.ndarray, d: int) -> np.ndarray:
    """R(t, t-d) = ln(x(t)/x(t-d)) at 0-based index t-1; zero for t <= d."""
    return _log_returns(np.ascontiguousarray(prices, dtype=np.float64), int(d))


@numba.njit(cache=True, nogil=True)
def _simulate(
    prices, R, d, kind, p, q, f_b, f_s, fee, min_volume, cash0,
    record, tr_t, tr_side, tr_vol, tr_price, tr_cash, tr_shares,
):
    cash = cash0
    shares = 0
    n_trades = 0
    buy_factor = 1.0 + fee
    sell_factor = 1.0 - fee
    for i in range(d, prices.shape[0]):
        r = R[i]
        if r > p:
            action = _SELL if kind == 1 else _BUY
        elif r < -q:
            action = _BUY if kind == 1 else _SELL
        else:
            continue
        x = prices[i]
        if action == _BUY:
            budget = f_b * cash
            volume = math.floor(budget / (x * buy_factor))
            # The rounded quotient can land on an integer just above the true one.
            if volume > 0 and volume * x * buy_factor > budget:
                volume -= 1
            if volume < min_volume:
                continue
            shares += volume
            cash -= volume * x * buy_factor
        else:
            volume = math.floor(f_s * shares)
            if volume < min_volume:
                continue
            shares -= volume
            cash += volume * x * sell_factor
        if cash < 0.0 or shares < 0:
            raise RuntimeError("portfolio constraint violated")
        if record:
            tr_t[n_trades] = i + 1
            tr_side[n_trades] = action
            tr_vol[n_trades] = volume
            tr_price[n_trades] = x
            tr_cash[n_trades] = cash
            tr_shares[n_trades] = shares
        n_trades += 1
    profit = (cash + shares * prices[prices.shape[0] - 1] - cash0) / cash0
    return profit, cash, shares, n_trades


_NO_LOG_I = np.zeros(0, dtype=np.int64)
_NO_LOG_F = np.zeros(0, dtype=np.float64)


def _check_length(series: PriceSeries, params: StrategyParams) -> None:
    if params.kind is not StrategyKind.S0_BUY_AND_HOLD and series.T <= params.d:
        raise ValueError(
            f"{series.ticker}: series of length {series.T} too short for delay d={params.d}"
        )


def _profit_only(prices: np.ndarray, R: np.ndarray, params: StrategyParams) -> float:
    profit, _, _, _ = _simulate(
        prices, R, params.d, _KIND_CODE[params.kind], float(params.p), float(params.q),
        float(params.f_b), float(params.f_s), float(params.fee), params.min_volume,
        float(params.initial_cash), False,
        _NO_LOG_I, _NO_LOG_I, _NO_LOG_I, _NO_LOG_F, _NO_LOG_F, _NO_LOG_I,
    )
    return profit


def buy_and_hold_profit(series: PriceSeries) -> float:
    x = series.prices
    return float((x[-1] - x[0]) / x[0])


def run_backtest(
    series: PriceSeries, params: StrategyParams, *, with_values: bool = False
) -> BacktestResult:
    """Simulate ``params`` over ``series`` from t = d+1 to T.

    Buys spend at most ``f_b`` of cash including the fee, sells release
    ``floor(f_s * shares)`` shares, and any order below ``min_volume`` is
    dropped. S0 returns the closed-form buy-and-hold profit with no trades;
    its final cash is the value of a fractional all-in position.
    """
    _check_length(series, params)
    x = series.prices

    if params.kind is StrategyKind.S0_BUY_AND_HOLD:
        profit = buy_and_hold_profit(series)
        values = params.initial_cash * x / x[0] if with_values else None
        return BacktestResult(
            profit, float(params.initial_cash * x[-1] / x[0]), 0, (), values
        )

    T = series.T
    R = log_returns(x, params.d)
    tr_t = np.empty(T, dtype=np.int64)
    tr_side = np.empty(T, dtype=np.int64)
    tr_vol = np.empty(T, dtype=np.int64)
    tr_price = np.empty(T)
    tr_cash = np.empty(T)
    tr_shares = np.empty(T, dtype=np.int64)
    profit, cash, shares, n = _simulate(
        x, R, params.d, _KIND_CODE[params.kind], float(params.p), float(params.q),
        float(params.f_b), float(params.f_s), float(params.fee), params.min_volume,
        float(params.initial_cash), True,
        tr_t, tr_side, tr_vol, tr_price, tr_cash, tr_shares,
    )
    trades = tuple(
        Trade(
            int(tr_t[j]),
            Side.BUY if tr_side[j] == _BUY else Side.SELL,
            int(tr_vol[j]),
            float(tr_price[j]),
            float(tr_cash[j]),
            int(tr_shares[j]),
        )
        for j in range(n)
    )

    values = None
    if with_values:
        cash_path = np.full(T, float(params.initial_cash))
        shares_path = np.zeros(T, dtype=np.int64)
        for tr in trades:
            cash_path[tr.t - 1 :] = tr.cash_after
            shares_path[tr.t - 1 :] = tr.shares_after
        values = cash_path + shares_path * x

    return BacktestResult(float(profit), float(cash), int(shares), trades, values)


def write_trades_csv(trades: tuple[Trade, ...] | list[Trade], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "side", "volume", "price", "cash_after", "shares_after"])
        for tr in trades:
            writer.writerow(
                [
                    tr.t,
                    tr.side.value,
                    tr.volume,
                    format(tr.price, ".17g"),
                    format(tr.cash_after, ".17g"),
                    tr.shares_after,
                ]
            )
