"""How the number of local profit maxima M grows with grid resolution N.

For a landscape whose maxima are spread evenly over the plane M ~ N**2; a
smaller exponent means the maxima cluster on a fractal set.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .landscape import GridSpec, Neighborhood, find_local_maxima, sweep
from .market_data import PriceSeries, Universe
from .strategy_engine import StrategyParams

__all__ = [
    "DEFAULT_RESOLUTIONS",
    "ScalingFit",
    "ScalingSeries",
    "fit_exponent",
    "fit_per_stock",
    "measure_scaling",
    "read_scaling_csv",
    "write_scaling_csv",
]

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTIONS = (16, 32, 64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class ScalingSeries:
    resolutions: tuple[int, ...]
    counts: tuple[float, ...]
    label: str = ""
    per_stock: dict[str, tuple[int, ...]] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "resolutions", tuple(int(n) for n in self.resolutions))
        object.__setattr__(self, "counts", tuple(float(m) for m in self.counts))
        if len(self.resolutions) != len(self.counts):
            raise ValueError("resolutions and counts differ in length")
        if any(b <= a for a, b in zip(self.resolutions, self.resolutions[1:])):
            raise ValueError(f"resolutions must be strictly increasing: {self.resolutions}")
        if any(m < 0 for m in self.counts):
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float
    points_used: int


def measure_scaling(
    data: PriceSeries | Universe,
    base_params: StrategyParams,
    resolutions: Sequence[int] = DEFAULT_RESOLUTIONS,
    *,
    range_p: float = 1.0,
    range_q: float = 1.0,
    neighborhood: Neighborhood = Neighborhood.FOUR,
    workers: int = 1,
    label: str = "",
) -> ScalingSeries:
    """Local-maxima count at each resolution, averaged over stocks."""
    stocks = [data] if isinstance(data, PriceSeries) else list(data.series)
    if any(int(n) < 4 for n in resolutions):
        raise ValueError(f"all resolutions must be >= 4, got {list(resolutions)}")

    per_stock: dict[str, tuple[int, ...]] = {}
    for s in stocks:
        row = []
        for N in resolutions:
            spec = GridSpec(int(N), range_p, range_q, neighborhood)
            row.append(find_local_maxima(sweep(s, base_params, spec, workers=workers)).count)
            logger.debug("%s N=%d M=%d", s.ticker, N, row[-1])
        per_stock[s.ticker] = tuple(row)

    counts = np.mean(np.array(list(per_stock.values()), dtype=np.float64), axis=0)
    return ScalingSeries(tuple(resolutions), tuple(counts), label, per_stock)


def fit_exponent(s: ScalingSeries) -> ScalingFit:
    """Unweighted least squares of ln M on ln N; zero counts are dropped."""
    pairs = [(n, m) for n, m in zip(s.resolutions, s.counts) if m > 0]
    dropped = len(s.resolutions) - len(pairs)
    if dropped:
        warnings.warn(
            f"excluding {dropped} zero-count point(s) from the exponent fit",
            RuntimeWarning,
            stacklevel=2,
        )
    if len(pairs) < 2:
        raise ValueError("need at least 2 resolutions with M > 0 to fit an exponent")

    x = np.log(np.array([n for n, _ in pairs], dtype=np.float64))
    y = np.log(np.array([m for _, m in pairs], dtype=np.float64))
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(dy @ dy)
    ss_res = float(np.sum((dy - slope * dx) ** 2))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ScalingFit(slope, intercept, min(max(r_squared, 0.0), 1.0), len(pairs))


def fit_per_stock(s: ScalingSeries) -> dict[str, ScalingFit]:
    """Diagnostic mode: one exponent per stock instead of one for the mean."""
    if not s.per_stock:
        raise ValueError("scaling series carries no per-stock counts")
    fits = {}
    for ticker, counts in s.per_stock.items():
        if sum(1 for m in counts if m > 0) < 2:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fits[ticker] = fit_exponent(ScalingSeries(s.resolutions, counts, ticker))
    return fits


def write_scaling_csv(s: ScalingSeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "M_mean"])
        for n, m in zip(s.resolutions, s.counts):
            writer.writerow([n, format(m, ".17g")])


def read_scaling_csv(path: str | Path, label: str = "") -> ScalingSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"N", "M_mean"} <= set(rows[0]):
        raise ValueError(f"{path}: expected columns N,M_mean")
    return ScalingSeries(
        tuple(int(r["N"]) for r in rows), tuple(float(r["M_mean"]) for r in rows), label
    )


def max_interior_count(N: int) -> int:
    """Upper bound on M for a FourNeighbor grid: only interior cells qualify."""
    return max(N - 2, 0) ** 2
