"""Daily closing-price series: loading, validation and synthetic fixtures.

Simulation time is the integer trading-day index t = 1..T; calendar dates are
carried along for bookkeeping only, so gaps (weekends, holidays, missing rows)
are invisible to the strategy engine.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "AlignmentPolicy",
    "DataError",
    "PriceSeries",
    "SynthKind",
    "Universe",
    "load_series",
    "load_universe",
    "save_series",
    "series_from_prices",
    "synthesize_series",
]


class DataError(ValueError):
    """Raised when price data is malformed or violates a series invariant."""


class AlignmentPolicy(enum.Enum):
    REQUIRE_EQUAL_LENGTH = "require-equal-length"
    TRUNCATE_TO_COMMON = "truncate-to-common"


class SynthKind(enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    GEOMETRIC = "geometric"
    SINUSOID = "sinusoid"


@dataclass(frozen=True)
class PriceSeries:
    """One stock's daily closes, indexed by trading day.

    ``prices`` is stored as a read-only float64 array so a series can be shared
    between parallel workers without copying or locking.
    """

    ticker: str
    dates: tuple[dt.date, ...]
    prices: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        prices = np.array(self.prices, dtype=np.float64)
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "dates", tuple(self.dates))

        if prices.ndim != 1:
            raise DataError(f"{self.ticker}: prices must be one-dimensional")
        if len(self.dates) != len(prices):
            raise DataError(
                f"{self.ticker}: {len(self.dates)} dates but {len(prices)} prices"
            )
        if len(prices) < 2:
            raise DataError(f"{self.ticker}: need at least 2 trading days, got {len(prices)}")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            bad = int(np.flatnonzero(~(prices > 0) | ~np.isfinite(prices))[0])
            raise DataError(
                f"{self.ticker}: non-positive price {prices[bad]!r} at t={bad + 1}"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise DataError(f"{self.ticker}: dates not strictly increasing at {b}")

    @property
    def T(self) -> int:
        return len(self.prices)

    def window(self, t_start: int, t_end: int) -> PriceSeries:
        """Rows t_start..t_end (1-based, inclusive) as a new, re-indexed series."""
        if not 1 <= t_start < t_end <= self.T:
            raise DataError(
                f"{self.ticker}: window ({t_start}, {t_end}) outside 1..{self.T}"
            )
        return PriceSeries(
            self.ticker,
            self.dates[t_start - 1 : t_end],
            self.prices[t_start - 1 : t_end],
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.ticker == other.ticker
            and self.dates == other.dates
            and np.array_equal(self.prices, other.prices)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Universe:
    series: tuple[PriceSeries, ...]
    alignment_policy: AlignmentPolicy = AlignmentPolicy.REQUIRE_EQUAL_LENGTH

    def __post_init__(self) -> None:
        object.__setattr__(self, "series", tuple(self.series))
        if not self.series:
            raise DataError("universe is empty")
        tickers = [s.ticker for s in self.series]
        if len(set(tickers)) != len(tickers):
            raise DataError(f"duplicate tickers in universe: {sorted(tickers)}")
        if self.alignment_policy is AlignmentPolicy.REQUIRE_EQUAL_LENGTH:
            lengths = {s.ticker: s.T for s in self.series}
            if len(set(lengths.values())) > 1:
                raise DataError(f"series lengths differ: {lengths}")

    def __len__(self) -> int:
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    @property
    def tickers(self) -> list[str]:
        return [s.ticker for s in self.series]


def _parse_rows(path: Path) -> tuple[list[dt.date], list[float]]:
    dates: list[dt.date] = []
    prices: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "close"]:
            raise DataError(f"{path}: expected header 'date,close', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: malformed row {row!r}")
            try:
                day = dt.date.fromisoformat(row[0].strip())
                price = float(row[1].strip())
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: malformed row {row!r}") from exc
            if not math.isfinite(price):
                raise DataError(f"{path}:{lineno}: malformed row {row!r}")
            if price <= 0:
                raise DataError(f"{path}:{lineno}: non-positive price {price!r}")
            dates.append(day)
            prices.append(price)
    return dates, prices


def load_series(path: str | Path, ticker: str | None = None) -> PriceSeries:
    """Read a ``date,close`` CSV into a validated series sorted by date.

    Raises:
        DataError: on a malformed row, a non-positive price or a duplicate date.
    """
    path = Path(path)
    dates, prices = _parse_rows(path)
    order = sorted(range(len(dates)), key=dates.__getitem__)
    dates = [dates[i] for i in order]
    prices = [prices[i] for i in order]
    for a, b in zip(dates, dates[1:]):
        if a == b:
            raise DataError(f"{path}: duplicate date {a}")
    return PriceSeries(ticker if ticker is not None else path.stem, dates, prices)


def save_series(series: PriceSeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "close"])
        for day, price in zip(series.dates, series.prices):
            writer.writerow([day.isoformat(), repr(float(price))])


def load_universe(
    directory: str | Path,
    policy: AlignmentPolicy = AlignmentPolicy.REQUIRE_EQUAL_LENGTH,
) -> Universe:
    """Load every ``*.csv`` in ``directory``; tickers come from filename stems."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no such directory: {directory}")
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise DataError(f"{directory}: no CSV files found")
    series = [load_series(f) for f in files]

    if policy is AlignmentPolicy.TRUNCATE_TO_COMMON:
        common = set(series[0].dates)
        for s in series[1:]:
            common &= set(s.dates)
        if len(common) < 2:
            raise DataError(f"{directory}: fewer than 2 common dates across files")
        cut = []
        for s in series:
            keep = [i for i, day in enumerate(s.dates) if day in common]
            cut.append(PriceSeries(s.ticker, [s.dates[i] for i in keep], s.prices[keep]))
        series = cut
    return Universe(series, policy)


def _trading_days(T: int, start: dt.date) -> list[dt.date]:
    days = []
    day = start
    while len(days) < T:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return days


def synthesize_series(
    kind: SynthKind | str,
    T: int,
    *,
    ticker: str | None = None,
    start: dt.date = dt.date(2000, 1, 3),
    c: float = 100.0,
    x0: float = 100.0,
    slope: float = 1.0,
    g: float = 1.0,
    A: float = 0.0,
    P: float = 20.0,
) -> PriceSeries:
    """Deterministic fixture series of length ``T`` on weekday dates.

    Constant: ``c``. Linear: ``x0 + slope*(t-1)``. Geometric: ``x0*g**(t-1)``.
    Sinusoid: ``c + A*sin(2*pi*t/P)`` with ``c > A >= 0``.
    """
    kind = SynthKind(kind)
    if T < 2:
        raise DataError(f"T must be >= 2, got {T}")
    t = np.arange(1, T + 1, dtype=np.float64)
    if kind is SynthKind.CONSTANT:
        prices = np.full(T, float(c))
    elif kind is SynthKind.LINEAR:
        prices = x0 + slope * (t - 1)
    elif kind is SynthKind.GEOMETRIC:
        prices = x0 * float(g) ** (t - 1)
    else:
        if not c > A >= 0:
            raise DataError(f"sinusoid needs c > A >= 0, got c={c}, A={A}")
        prices = c + A * np.sin(2 * np.pi * t / P)
    if not np.all(prices > 0):
        raise DataError(f"{kind.value} parameters yield non-positive prices")
    return PriceSeries(ticker or kind.value, _trading_days(T, start), prices)


def series_from_prices(
    prices: Sequence[float], ticker: str = "X", start: dt.date = dt.date(2000, 1, 3)
) -> PriceSeries:
    """Wrap a bare price list in a series with consecutive weekday dates."""
    return PriceSeries(ticker, _trading_days(len(prices), start), prices)
