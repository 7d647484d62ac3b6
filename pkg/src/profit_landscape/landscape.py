"""Profit landscape over the (p, q) threshold plane.

The plane [0, range_p] x [0, range_q] is cut into N x N cells and a full
backtest is run at every cell center. Rows of the matrix index p, columns
index q; grid coordinates (k, l) are 1-based as in the exported CSVs.
"""

from __future__ import annotations

import csv
import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .market_data import PriceSeries
from .strategy_engine import (
    _KIND_CODE,
    _NO_LOG_F,
    _NO_LOG_I,
    StrategyKind,
    StrategyParams,
    _check_length,
    _simulate,
    log_returns,
)

__all__ = [
    "GridSpec",
    "LandscapeGrid",
    "MaximaResult",
    "Neighborhood",
    "cell_centers",
    "find_local_maxima",
    "max_profit_strategy",
    "sweep",
    "write_landscape_long_csv",
    "write_landscape_matrix_csv",
    "write_maxima_csv",
]



class Neighborhood(enum.Enum):
    FOUR = "four"
    EIGHT = "eight"


@dataclass(frozen=True)
class GridSpec:
    N: int
    range_p: float = 1.0
    range_q: float = 1.0
    neighborhood: Neighborhood = Neighborhood.FOUR

    def __post_init__(self) -> None:
        object.__setattr__(self, "neighborhood", Neighborhood(self.neighborhood))
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"grid resolution N must be an integer >= 2, got {self.N}")
        if not (self.range_p > 0 and self.range_q > 0):
            raise ValueError("grid ranges must be positive")
        object.__setattr__(self, "N", int(self.N))

    @property
    def p_centers(self) -> np.ndarray:
        return cell_centers(self.N, self.range_p)

    @property
    def q_centers(self) -> np.ndarray:
        return cell_centers(self.N, self.range_q)


def cell_centers(N: int, upper: float) -> np.ndarray:
    """Centers (k - 1/2) * upper / N for k = 1..N."""
    k = np.arange(1, N + 1, dtype=np.float64)
    return (k - 0.5) * upper / N


@dataclass(frozen=True)
class LandscapeGrid:
    spec: GridSpec
    base_params: StrategyParams
    profits: np.ndarray

    def __post_init__(self) -> None:
        N = self.spec.N
        if self.profits.shape != (N, N):
            raise ValueError(f"profits shape {self.profits.shape} != ({N}, {N})")
        if not np.all(np.isfinite(self.profits)):
            raise ValueError("landscape contains non-finite profits")

    def params_at(self, k: int, l: int) -> StrategyParams:
        """Strategy evaluated at 1-based cell (k, l)."""
        return self.base_params.with_thresholds(
            float(self.spec.p_centers[k - 1]), float(self.spec.q_centers[l - 1])
        )


@dataclass(frozen=True)
class MaximaResult:
    count: int
    locations: list[tuple[int, int]]
    global_max_value: float
    global_argmax: tuple[float, float]
    global_argmax_cell: tuple[int, int]


@numba.njit(cache=True, nogil=True)
def _sweep_rows(
    prices, R, d, kind, p_vals, q_vals, f_b, f_s, fee, min_volume, cash0,
    out, row_start, row_stop, no_i, no_f,
):
    for a in range(row_start, row_stop):
        p = p_vals[a]
        for b in range(q_vals.shape[0]):
            profit, _, _, _ = _simulate(
                prices, R, d, kind, p, q_vals[b], f_b, f_s, fee, min_volume, cash0,
                False, no_i, no_i, no_i, no_f, no_f, no_i,
            )
            out[a, b] = profit


def sweep(
    series: PriceSeries,
    base_params: StrategyParams,
    spec: GridSpec,
    *,
    workers: int = 1,
) -> LandscapeGrid:
    """Backtest every cell center of ``spec``; ``base_params.p/q`` are ignored.

    Rows are split into contiguous blocks across ``workers`` threads. Each
    entry is written only by the thread owning its row, so the matrix is
    identical for any worker count.
    """
    _check_length(series, base_params)
    N = spec.N
    p_vals = spec.p_centers
    q_vals = spec.q_centers
    out = np.empty((N, N), dtype=np.float64)

    if base_params.kind is StrategyKind.S0_BUY_AND_HOLD:
        x = series.prices
        out.fill((x[-1] - x[0]) / x[0])
        return LandscapeGrid(spec, base_params, out)

    x = series.prices
    R = log_returns(x, base_params.d)
    args = (
        x, R, base_params.d, _KIND_CODE[base_params.kind], p_vals, q_vals,
        float(base_params.f_b), float(base_params.f_s), float(base_params.fee),
        base_params.min_volume, float(base_params.initial_cash), out,
    )

    workers = max(1, min(int(workers), N))
    if workers == 1:
        _sweep_rows(*args, 0, N, _NO_LOG_I, _NO_LOG_F)
    else:
        bounds = np.linspace(0, N, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_sweep_rows, *args, int(lo), int(hi), _NO_LOG_I, _NO_LOG_F)
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                fut.result()
    return LandscapeGrid(spec, base_params, out)


def _interior_maxima_mask(P: np.ndarray, neighborhood: Neighborhood) -> np.ndarray:
    c = P[1:-1, 1:-1]
    mask = (c > P[:-2, 1:-1]) & (c > P[2:, 1:-1]) & (c > P[1:-1, :-2]) & (c > P[1:-1, 2:])
    if neighborhood is Neighborhood.EIGHT:
        mask &= (c > P[:-2, :-2]) & (c > P[:-2, 2:]) & (c > P[2:, :-2]) & (c > P[2:, 2:])
    return mask


def find_local_maxima(grid: LandscapeGrid) -> MaximaResult:
    """Strict local maxima among interior cells plus the global maximum.

    Boundary cells lack a full neighbor set and are never counted. The
    global argmax is the first maximal entry in row-major order, i.e. the
    smallest k and then the smallest l.
    """
    P = grid.profits
    mask = _interior_maxima_mask(P, grid.spec.neighborhood)
    ks, ls = np.nonzero(mask)
    locations = [(int(k) + 2, int(l) + 2) for k, l in zip(ks, ls)]

    flat = int(np.argmax(P))
    k0, l0 = divmod(flat, P.shape[1])
    return MaximaResult(
        count=len(locations),
        locations=locations,
        global_max_value=float(P[k0, l0]),
        global_argmax=(float(grid.spec.p_centers[k0]), float(grid.spec.q_centers[l0])),
        global_argmax_cell=(k0 + 1, l0 + 1),
    )


def max_profit_strategy(
    series: PriceSeries,
    base_params: StrategyParams,
    spec: GridSpec,
    *,
    workers: int = 1,
) -> tuple[float, float, float]:
    """(p*, q*, max profit) over the cell centers of ``spec``."""
    result = find_local_maxima(sweep(series, base_params, spec, workers=workers))
    p_star, q_star = result.global_argmax
    return p_star, q_star, result.global_max_value


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_landscape_matrix_csv(grid: LandscapeGrid, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["p\\q"] + [_fmt(q) for q in grid.spec.q_centers])
        for p, row in zip(grid.spec.p_centers, grid.profits):
            writer.writerow([_fmt(p)] + [_fmt(v) for v in row])


def write_landscape_long_csv(grid: LandscapeGrid, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["p", "q", "profit"])
        q_text = [_fmt(q) for q in grid.spec.q_centers]
        for p, row in zip(grid.spec.p_centers, grid.profits):
            p_text = _fmt(p)
            for q, v in zip(q_text, row):
                writer.writerow([p_text, q, _fmt(v)])


def read_landscape_matrix_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_landscape_matrix_csv`: (p_centers, q_centers, profits)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    q = np.array([float(v) for v in rows[0][1:]])
    p = np.array([float(r[0]) for r in rows[1:]])
    profits = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return p, q, profits


def write_maxima_csv(grid: LandscapeGrid, result: MaximaResult, path: str | Path) -> None:
    p_c, q_c = grid.spec.p_centers, grid.spec.q_centers
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "l", "p", "q", "profit"])
        for k, l in result.locations:
            writer.writerow(
                [k, l, _fmt(p_c[k - 1]), _fmt(q_c[l - 1]), _fmt(grid.profits[k - 1, l - 1])]
            )
