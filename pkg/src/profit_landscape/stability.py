"""Out-of-sample checks for grid-optimized thresholds.

Spatial: thresholds averaged across stocks are re-applied to every stock.
Temporal: thresholds optimized on the first half of a series are applied to
the second half. Rolling: the series is cut into consecutive intervals and
the thresholds of interval tau are applied to every later interval.

Every evaluation window is self-contained: prices outside it are never read
and the portfolio restarts at the initial cash with no shares.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .landscape import GridSpec, find_local_maxima, sweep
from .market_data import PriceSeries, Universe
from .strategy_engine import StrategyParams, buy_and_hold_profit, run_backtest

__all__ = [
    "OptimizedStrategy",
    "RollingResult",
    "StabilityReport",
    "StockRow",
    "interval_bounds",
    "optimize_on_window",
    "rolling_interval_test",
    "spatial_stability_test",
    "stability_report",
    "temporal_stability_test",
    "write_rolling_csv",
    "write_stock_rows_csv",
    "write_summary_csv",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizedStrategy:
    ticker: str
    p_star: float
    q_star: float
    profit_at_opt: float
    window: tuple[int, int]
    spec: GridSpec
    cell: tuple[int, int] = (1, 1)

    def __post_init__(self) -> None:
        if not self.window[0] < self.window[1]:
            raise ValueError(f"empty optimization window {self.window}")


@dataclass
class StockRow:
    ticker: str
    buy_hold: float | None = None
    p_star: float | None = None
    q_star: float | None = None
    profit_opt: float | None = None
    profit_spatial: float | None = None
    p_star_half: float | None = None
    q_star_half: float | None = None
    profit_temporal: float | None = None


@dataclass(frozen=True)
class RollingResult:
    """Mean out-of-sample profit for every (tau, tau') pair with tau' > tau.

    ``matrix[tau - 1, tau' - 1]`` is NaN on and below the diagonal. ``best``
    holds, per stock and optimization interval tau < intervals, the later
    interval with the largest profit and the buy-and-hold profit there.
    """

    intervals: int
    windows: tuple[tuple[int, int], ...]
    matrix: np.ndarray
    buy_hold: np.ndarray
    per_stock: dict[str, np.ndarray]
    best: list[dict]


@dataclass
class StabilityReport:
    mean_buy_hold: float | None = None
    mean_opt: float | None = None
    mean_spatial: float | None = None
    mean_temporal: float | None = None
    p_star_mean: float | None = None
    q_star_mean: float | None = None
    per_stock_rows: list[StockRow] = field(default_factory=list)
    interval_matrix: RollingResult | None = None

    def merge(self, other: StabilityReport) -> StabilityReport:
        """Fill unset fields of ``self`` from ``other``, joining stock rows by ticker."""
        for name in (
            "mean_buy_hold", "mean_opt", "mean_spatial", "mean_temporal",
            "p_star_mean", "q_star_mean", "interval_matrix",
        ):
            if getattr(self, name) is None:
                setattr(self, name, getattr(other, name))
        rows = {r.ticker: r for r in self.per_stock_rows}
        for r in other.per_stock_rows:
            if r.ticker not in rows:
                rows[r.ticker] = r
                self.per_stock_rows.append(r)
                continue
            mine = rows[r.ticker]
            for name, value in vars(r).items():
                if getattr(mine, name) is None:
                    setattr(mine, name, value)
        return self


def optimize_on_window(
    series: PriceSeries,
    base_params: StrategyParams,
    spec: GridSpec,
    window: tuple[int, int] | None = None,
    *,
    workers: int = 1,
) -> OptimizedStrategy:
    """Grid-optimize (p, q) using only rows ``window`` (1-based, inclusive)."""
    t_start, t_end = window if window is not None else (1, series.T)
    if t_end - t_start + 1 <= base_params.d + 1:
        raise ValueError(
            f"{series.ticker}: window {t_start}..{t_end} too short for d={base_params.d}"
        )
    sub = series if (t_start, t_end) == (1, series.T) else series.window(t_start, t_end)
    result = find_local_maxima(sweep(sub, base_params, spec, workers=workers))
    p_star, q_star = result.global_argmax
    return OptimizedStrategy(
        series.ticker, p_star, q_star, result.global_max_value, (t_start, t_end), spec,
        result.global_argmax_cell,
    )


def _evaluate(series: PriceSeries, params: StrategyParams, window: tuple[int, int]) -> float:
    t_start, t_end = window
    sub = series if (t_start, t_end) == (1, series.T) else series.window(t_start, t_end)
    return run_backtest(sub, params).profit


def spatial_stability_test(
    universe: Universe,
    base_params: StrategyParams,
    spec: GridSpec,
    *,
    workers: int = 1,
) -> StabilityReport:
    """Full-period optimum per stock, then every stock at the mean (p*, q*)."""
    stocks = list(universe.series)
    opts = [optimize_on_window(s, base_params, spec, workers=workers) for s in stocks]
    p_mean = float(np.mean([o.p_star for o in opts]))
    q_mean = float(np.mean([o.q_star for o in opts]))
    shared = base_params.with_thresholds(p_mean, q_mean)

    rows = []
    for s, o in zip(stocks, opts):
        rows.append(
            StockRow(
                s.ticker,
                buy_hold=buy_and_hold_profit(s),
                p_star=o.p_star,
                q_star=o.q_star,
                profit_opt=o.profit_at_opt,
                profit_spatial=run_backtest(s, shared).profit,
            )
        )
        logger.info("%s p*=%g q*=%g profit=%g", s.ticker, o.p_star, o.q_star, o.profit_at_opt)
    return StabilityReport(
        mean_buy_hold=float(np.mean([r.buy_hold for r in rows])),
        mean_opt=float(np.mean([r.profit_opt for r in rows])),
        mean_spatial=float(np.mean([r.profit_spatial for r in rows])),
        p_star_mean=p_mean,
        q_star_mean=q_mean,
        per_stock_rows=rows,
    )


def temporal_stability_test(
    universe: Universe,
    base_params: StrategyParams,
    spec: GridSpec,
    *,
    workers: int = 1,
) -> StabilityReport:
    """Optimize on t = 1..floor(T/2), evaluate on floor(T/2)+1..T."""
    rows = []
    for s in universe.series:
        if s.T < 2 * (base_params.d + 2):
            raise ValueError(f"{s.ticker}: T={s.T} too short to split for d={base_params.d}")
        half = s.T // 2
        o = optimize_on_window(s, base_params, spec, (1, half), workers=workers)
        profit = _evaluate(s, base_params.with_thresholds(o.p_star, o.q_star), (half + 1, s.T))
        rows.append(
            StockRow(
                s.ticker, p_star_half=o.p_star, q_star_half=o.q_star, profit_temporal=profit
            )
        )
    return StabilityReport(
        mean_temporal=float(np.mean([r.profit_temporal for r in rows])),
        per_stock_rows=rows,
    )


def interval_bounds(T: int, intervals: int) -> list[tuple[int, int]]:
    """Contiguous near-equal 1-based windows; the first T % intervals get an extra day."""
    base, extra = divmod(T, intervals)
    bounds = []
    start = 1
    for i in range(intervals):
        length = base + (1 if i < extra else 0)
        bounds.append((start, start + length - 1))
        start += length
    return bounds


def rolling_interval_test(
    universe: Universe,
    base_params: StrategyParams,
    spec: GridSpec,
    intervals: int = 20,
    *,
    workers: int = 1,
) -> RollingResult:
    if intervals < 2:
        raise ValueError(f"need at least 2 intervals, got {intervals}")
    per_stock: dict[str, np.ndarray] = {}
    buy_hold = []
    best = []
    windows: list[tuple[int, int]] = []
    for s in universe.series:
        if s.T < intervals * (base_params.d + 2):
            raise ValueError(
                f"{s.ticker}: T={s.T} too short for {intervals} intervals at d={base_params.d}"
            )
        windows = interval_bounds(s.T, intervals)
        bh = np.array([buy_and_hold_profit(s.window(a, b)) for a, b in windows])
        matrix = np.full((intervals, intervals), np.nan)
        for tau, win in enumerate(windows[:-1]):
            o = optimize_on_window(s, base_params, spec, win, workers=workers)
            params = base_params.with_thresholds(o.p_star, o.q_star)
            for tau2 in range(tau + 1, intervals):
                matrix[tau, tau2] = _evaluate(s, params, windows[tau2])
            j = tau + 1 + int(np.argmax(matrix[tau, tau + 1 :]))
            best.append(
                {
                    "ticker": s.ticker,
                    "tau": tau + 1,
                    "p_star": o.p_star,
                    "q_star": o.q_star,
                    "best_tau_prime": j + 1,
                    "max_profit": float(matrix[tau, j]),
                    "buy_hold_at_best": float(bh[j]),
                }
            )
        per_stock[s.ticker] = matrix
        buy_hold.append(bh)

    stacked = np.stack(list(per_stock.values()))
    mean_matrix = np.full((intervals, intervals), np.nan)
    upper = np.triu_indices(intervals, k=1)
    mean_matrix[upper] = stacked[:, upper[0], upper[1]].mean(axis=0)
    return RollingResult(
        intervals,
        tuple(windows),
        mean_matrix,
        np.mean(np.array(buy_hold), axis=0),
        per_stock,
        best,
    )


def stability_report(
    universe: Universe,
    base_params: StrategyParams,
    spec: GridSpec,
    *,
    intervals: int | None = None,
    workers: int = 1,
) -> StabilityReport:
    """All four averaged profits, plus the rolling matrix when ``intervals`` is set."""
    report = spatial_stability_test(universe, base_params, spec, workers=workers)
    report.merge(temporal_stability_test(universe, base_params, spec, workers=workers))
    if intervals:
        report.interval_matrix = rolling_interval_test(
            universe, base_params, spec, intervals, workers=workers
        )
    return report


def _fmt(value: float | None) -> str:
    return "" if value is None else format(float(value), ".17g")


SUMMARY_FIELDS = ("mean_buy_hold", "mean_opt", "mean_spatial", "mean_temporal")


def write_summary_csv(report: StabilityReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        writer.writerow([_fmt(getattr(report, name)) for name in SUMMARY_FIELDS])


def write_stock_rows_csv(rows: list[StockRow], path: str | Path) -> None:
    names = list(vars(StockRow("")).keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for r in rows:
            writer.writerow([r.ticker] + [_fmt(getattr(r, n)) for n in names[1:]])


def write_rolling_csv(result: RollingResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tau", "tau_prime", "profit"])
        for tau in range(result.intervals):
            for tau2 in range(tau + 1, result.intervals):
                writer.writerow([tau + 1, tau2 + 1, _fmt(result.matrix[tau, tau2])])


def write_rolling_best_csv(result: RollingResult, path: str | Path) -> None:
    cols = ["ticker", "tau", "p_star", "q_star", "best_tau_prime", "max_profit", "buy_hold_at_best"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in result.best:
            writer.writerow(
                [_fmt(row[c]) if isinstance(row[c], float) else row[c] for c in cols]
            )
