"""Command-line entry point: ``profit-landscape <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure (bad data, numerical trouble),
2 usage error (bad flags, missing input, invalid parameter values).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fractal_scaling, gbm, landscape, stability, strategy_engine
from .landscape import GridSpec, Neighborhood
from .market_data import AlignmentPolicy, DataError, load_series, load_universe
from .strategy_engine import StrategyKind, StrategyParams

logger = logging.getLogger("profit_landscape")


class UsageError(Exception):
    pass


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _emit(args: argparse.Namespace, summary: dict) -> None:
    """Print a summary as a header+row CSV, or one JSON object with --json."""
    if args.json:
        print(json.dumps(summary, sort_keys=False))
        return
    print(",".join(summary))
    print(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in summary.values()))


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"input not found: {path}")
    return p


def _strategy(args: argparse.Namespace, default_kind: str = "s1") -> StrategyParams:
    try:
        return StrategyParams(
            kind=StrategyKind(getattr(args, "strategy", None) or default_kind),
            p=args.p,
            q=args.q,
            f_b=args.fb,
            f_s=args.fs,
            d=args.d,
            fee=args.fee,
            min_volume=args.min_volume,
            initial_cash=args.initial_cash,
        )
    except ValueError as exc:
        raise UsageError(f"invalid strategy parameter: {exc}") from exc


def _grid(args: argparse.Namespace, N: int | None = None) -> GridSpec:
    try:
        return GridSpec(
            N if N is not None else args.N,
            args.range_p,
            args.range_q,
            Neighborhood(args.neighborhood),
        )
    except ValueError as exc:
        raise UsageError(f"invalid grid parameter: {exc}") from exc


def _data(args: argparse.Namespace):
    policy = (
        AlignmentPolicy.TRUNCATE_TO_COMMON
        if args.align == "truncate"
        else AlignmentPolicy.REQUIRE_EQUAL_LENGTH
    )
    if getattr(args, "data_dir", None):
        return load_universe(_existing(args.data_dir), policy)
    if getattr(args, "csv", None):
        return load_series(_existing(args.csv))
    raise UsageError("one of --csv or --data-dir is required")


def _add_strategy_flags(p: argparse.ArgumentParser, with_kind: bool = True) -> None:
    g = p.add_argument_group("strategy S(p, q; fb, fs, d)")
    if with_kind:
        g.add_argument("--strategy", choices=["s0", "s1", "s2"], default="s1")
    g.add_argument("--p", type=float, default=0.0, help="sell/buy threshold on rises")
    g.add_argument("--q", type=float, default=0.0, help="threshold on falls")
    g.add_argument("--fb", type=float, default=0.5, help="fraction of cash per buy")
    g.add_argument("--fs", type=float, default=0.5, help="fraction of shares per sell")
    g.add_argument("--d", type=int, default=1, help="log-return delay in trading days")
    g.add_argument("--fee", type=float, default=0.001)
    g.add_argument("--min-volume", type=int, default=1)
    g.add_argument("--initial-cash", type=float, default=1e6)


def _add_grid_flags(p: argparse.ArgumentParser, with_n: bool = True) -> None:
    g = p.add_argument_group("grid")
    if with_n:
        g.add_argument("--N", type=int, default=64)
    g.add_argument("--range-p", type=float, default=1.0)
    g.add_argument("--range-q", type=float, default=1.0)
    g.add_argument("--neighborhood", choices=["four", "eight"], default="four")


def _add_input_flags(p: argparse.ArgumentParser, universe: bool = True) -> None:
    p.add_argument("--csv", help="single price CSV (date,close)")
    if universe:
        p.add_argument("--data-dir", help="directory with one CSV per ticker")
    p.add_argument("--align", choices=["equal", "truncate"], default="equal")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="profit-landscape",
        description="Threshold-strategy profit landscapes, maxima scaling and stability tests.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=1, help="parallel sweep threads")
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--json", action="store_true", help="emit summaries as JSON")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("backtest", help="run one strategy over one series")
    _add_input_flags(p, universe=False)
    _add_strategy_flags(p)
    p.add_argument("--trades-out", help="write the trade log CSV here")

    p = sub.add_parser("sweep", help="profit landscape on an N x N grid")
    _add_input_flags(p, universe=False)
    _add_strategy_flags(p)
    _add_grid_flags(p)
    p.add_argument("--out", required=True, help="matrix CSV path")
    p.add_argument("--long-out", help="also write p,q,profit long format")

    p = sub.add_parser("maxima", help="local maxima of a landscape")
    _add_input_flags(p, universe=False)
    p.add_argument("--matrix", help="read a landscape matrix CSV instead of sweeping")
    _add_strategy_flags(p)
    _add_grid_flags(p)
    p.add_argument("--out", help="maxima CSV path (k,l,p,q,profit)")

    p = sub.add_parser("scaling", help="maxima count M versus resolution N")
    _add_input_flags(p)
    _add_strategy_flags(p, with_kind=True)
    _add_grid_flags(p, with_n=False)
    p.add_argument(
        "--resolutions",
        default=",".join(str(n) for n in fractal_scaling.DEFAULT_RESOLUTIONS),
    )
    p.add_argument("--out", help="N,M_mean CSV path")

    p = sub.add_parser("fit", help="fit the exponent of an N,M_mean CSV")
    p.add_argument("scaling_csv")

    p = sub.add_parser("gbm-fit", help="fit GBM drift and volatility to a series")
    p.add_argument("csv_path")

    p = sub.add_parser("gbm-sim", help="write seeded GBM replicas as price CSVs")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--x0", type=float, default=100.0)
    p.add_argument("--T", type=int, default=5301)
    p.add_argument("--count", type=int, default=gbm.DEFAULT_REPLICAS)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--prefix", default="gbm")

    p = sub.add_parser("stability", help="spatial/temporal/rolling stability tests")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--align", choices=["equal", "truncate"], default="equal")
    p.add_argument("--mode", choices=["spatial", "temporal", "rolling", "all"], default="all")
    p.add_argument("--intervals", type=int, default=20)
    _add_strategy_flags(p)
    _add_grid_flags(p)
    p.add_argument("--out-summary", help="summary CSV of the four means")
    p.add_argument("--out-detail", help="per-stock detail CSV")
    p.add_argument("--out-rolling", help="tau,tau_prime,profit CSV (rolling mode)")
    return parser


def _cmd_backtest(args) -> None:
    series = _data(args)
    params = _strategy(args)
    result = strategy_engine.run_backtest(series, params)
    if args.trades_out:
        strategy_engine.write_trades_csv(result.trades, args.trades_out)
    _emit(
        args,
        {
            "ticker": series.ticker,
            "strategy": params.kind.value,
            "profit": result.profit,
            "final_cash": result.final_cash,
            "final_shares": result.final_shares,
            "trades": len(result.trades),
        },
    )


def _cmd_sweep(args) -> None:
    series = _data(args)
    grid = landscape.sweep(series, _strategy(args), _grid(args), workers=args.workers)
    landscape.write_landscape_matrix_csv(grid, args.out)
    if args.long_out:
        landscape.write_landscape_long_csv(grid, args.long_out)
    m = landscape.find_local_maxima(grid)
    _emit(args, {"N": grid.spec.N, "p_star": m.global_argmax[0], "q_star": m.global_argmax[1],
                 "profit_max": m.global_max_value})


def _cmd_maxima(args) -> None:
    if args.matrix:
        p_c, q_c, profits = landscape.read_landscape_matrix_csv(_existing(args.matrix))
        N = len(p_c)
        spec = _grid(args, N)
        if not (np.allclose(p_c, spec.p_centers) and np.allclose(q_c, spec.q_centers)):
            # Ranges follow from the first centers, which sit half a cell in.
            args.range_p, args.range_q = 2 * N * p_c[0], 2 * N * q_c[0]
            spec = _grid(args, N)
        if not (np.allclose(p_c, spec.p_centers) and np.allclose(q_c, spec.q_centers)):
            raise UsageError("matrix centers are not a uniform cell-centered grid")
        grid = landscape.LandscapeGrid(spec, _strategy(args), profits)
    else:
        grid = landscape.sweep(_data(args), _strategy(args), _grid(args), workers=args.workers)
    m = landscape.find_local_maxima(grid)
    if args.out:
        landscape.write_maxima_csv(grid, m, args.out)
    _emit(args, {"N": grid.spec.N, "M": m.count, "p_star": m.global_argmax[0],
                 "q_star": m.global_argmax[1], "profit_max": m.global_max_value})


def _fit_summary(fit: fractal_scaling.ScalingFit) -> dict:
    return {"exponent": fit.exponent, "intercept": fit.intercept,
            "r_squared": fit.r_squared, "points_used": fit.points_used}


def _cmd_scaling(args) -> None:
    try:
        resolutions = [int(v) for v in args.resolutions.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --resolutions: {args.resolutions}") from exc
    data = _data(args)
    try:
        s = fractal_scaling.measure_scaling(
            data, _strategy(args), resolutions,
            range_p=args.range_p, range_q=args.range_q,
            neighborhood=Neighborhood(args.neighborhood), workers=args.workers,
        )
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise UsageError(str(exc)) from exc
    if args.out:
        fractal_scaling.write_scaling_csv(s, args.out)
    else:
        print("N,M_mean")
        for n, m in zip(s.resolutions, s.counts):
            print(f"{n},{_fmt(m)}")
    _emit(args, _fit_summary(fractal_scaling.fit_exponent(s)))


def _cmd_fit(args) -> None:
    s = fractal_scaling.read_scaling_csv(_existing(args.scaling_csv))
    _emit(args, _fit_summary(fractal_scaling.fit_exponent(s)))


def _cmd_gbm_fit(args) -> None:
    params = gbm.fit_gbm(load_series(_existing(args.csv_path)))
    _emit(args, {"mu": params.mu, "sigma": params.sigma, "x0": params.x0, "T": params.T})


def _cmd_gbm_sim(args) -> None:
    try:
        params = gbm.GbmParams(args.mu, args.sigma, args.x0, args.T)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    replicas = gbm.simulate_replicas(
        params, args.seed, args.count, prefix=args.prefix, workers=args.workers
    )
    paths = gbm.write_replicas(replicas, args.out_dir)
    _emit(args, {"count": len(paths), "seed": args.seed, "out_dir": str(args.out_dir)})


def _cmd_stability(args) -> None:
    universe = _data(args)
    params = _strategy(args)
    spec = _grid(args)
    w = args.workers
    report = stability.StabilityReport()
    if args.mode in ("spatial", "all"):
        report.merge(stability.spatial_stability_test(universe, params, spec, workers=w))
    if args.mode in ("temporal", "all"):
        report.merge(stability.temporal_stability_test(universe, params, spec, workers=w))
    if args.mode in ("rolling", "all"):
        report.interval_matrix = stability.rolling_interval_test(
            universe, params, spec, args.intervals, workers=w
        )
        if args.out_rolling:
            stability.write_rolling_csv(report.interval_matrix, args.out_rolling)
    if args.out_summary:
        stability.write_summary_csv(report, args.out_summary)
    if args.out_detail:
        stability.write_stock_rows_csv(report.per_stock_rows, args.out_detail)
    _emit(args, {name: getattr(report, name) if getattr(report, name) is not None else ""
                 for name in stability.SUMMARY_FIELDS})


_COMMANDS = {
    "backtest": _cmd_backtest,
    "sweep": _cmd_sweep,
    "maxima": _cmd_maxima,
    "scaling": _cmd_scaling,
    "fit": _cmd_fit,
    "gbm-fit": _cmd_gbm_fit,
    "gbm-sim": _cmd_gbm_sim,
    "stability": _cmd_stability,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.workers < 1:
        print("profit-landscape: error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"profit-landscape: error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"profit-landscape: bad input data: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"profit-landscape: error: input not found: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"profit-landscape: runtime failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
