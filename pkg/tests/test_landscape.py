import numpy as np
import pytest

from oracles import maxima_oracle
from profit_landscape.landscape import (
    GridSpec,
    LandscapeGrid,
    Neighborhood,
    cell_centers,
    find_local_maxima,
    max_profit_strategy,
    read_landscape_matrix_csv,
    sweep,
    write_landscape_long_csv,
    write_landscape_matrix_csv,
    write_maxima_csv,
)
from profit_landscape.market_data import synthesize_series
from profit_landscape.strategy_engine import StrategyKind, StrategyParams, run_backtest

BASE = StrategyParams(StrategyKind.S1_CONTRARIAN, f_b=0.5, f_s=0.5, d=1)


def grid_of(P, neighborhood=Neighborhood.FOUR):
    return LandscapeGrid(GridSpec(P.shape[0], neighborhood=neighborhood), BASE, np.asarray(P, float))


def test_cell_centers():
    np.testing.assert_array_equal(cell_centers(2, 1.0), [0.25, 0.75])
    np.testing.assert_array_equal(cell_centers(4, 2.0), [0.25, 0.75, 1.25, 1.75])


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(1)
    with pytest.raises(ValueError):
        GridSpec(8, range_p=0)


def test_constant_series_landscape_is_zero():
    s = synthesize_series("constant", 30)
    g = sweep(s, BASE, GridSpec(8))
    assert np.all(g.profits == 0.0)
    m = find_local_maxima(g)
    assert m.count == 0
    assert m.global_argmax == (1 / 16, 1 / 16)
    assert max_profit_strategy(s, BASE, GridSpec(8)) == (1 / 16, 1 / 16, 0.0)


def test_n2_sweep_unrolls(fixture_series):
    spec = GridSpec(2, range_p=0.2, range_q=0.2)
    g = sweep(fixture_series, BASE, spec)
    for k, p in enumerate([0.05, 0.15]):
        for l, q in enumerate([0.05, 0.15]):
            assert g.profits[k, l] == run_backtest(fixture_series, BASE.with_thresholds(p, q)).profit


def test_spot_check_cells_against_direct_backtests(fixture_series):
    rng = np.random.default_rng(11)
    for N in (17, 32):
        g = sweep(fixture_series, BASE, GridSpec(N, range_p=0.3, range_q=0.3))
        for _ in range(50):
            k, l = rng.integers(1, N + 1, size=2)
            assert g.profits[k - 1, l - 1] == run_backtest(fixture_series, g.params_at(k, l)).profit


def test_serial_and_threaded_sweeps_identical(fixture_series):
    spec = GridSpec(64)
    serial = sweep(fixture_series, BASE, spec, workers=1)
    for w in (2, 3, 8):
        assert np.array_equal(sweep(fixture_series, BASE, spec, workers=w).profits, serial.profits)


def test_s0_landscape_is_flat(fixture_series):
    g = sweep(fixture_series, StrategyParams(StrategyKind.S0_BUY_AND_HOLD), GridSpec(4))
    assert np.all(g.profits == g.profits[0, 0])


def test_single_peak():
    P = np.zeros((5, 5))
    P[2, 3] = 1.0
    m = find_local_maxima(grid_of(P))
    assert (m.count, m.locations) == (1, [(3, 4)])
    assert m.global_argmax_cell == (3, 4)


def test_boundary_peak_not_counted():
    P = np.zeros((5, 5))
    P[0, 2] = 1.0
    assert find_local_maxima(grid_of(P)).count == 0


def test_plateau_is_not_a_maximum():
    P = np.zeros((6, 6))
    P[2, 2] = P[2, 3] = 1.0
    assert find_local_maxima(grid_of(P)).count == 0


def test_argmax_tie_break_smallest_k_then_l():
    P = np.zeros((4, 4))
    P[2, 1] = P[1, 3] = P[2, 0] = 5.0
    m = find_local_maxima(grid_of(P))
    assert m.global_argmax_cell == (2, 4)
    assert m.global_argmax == (0.375, 0.875)


def test_eight_neighbor_stricter():
    P = np.zeros((5, 5))
    P[2, 2] = 1.0
    P[1, 1] = 2.0
    assert find_local_maxima(grid_of(P)).count == 2
    P[1, 1] = 0.0
    P[3, 3] = 2.0
    assert find_local_maxima(grid_of(P, Neighborhood.EIGHT)).locations == [(4, 4)]


@pytest.mark.parametrize("neighborhood", list(Neighborhood))
def test_random_grids_match_double_loop(neighborhood):
    rng = np.random.default_rng(5)
    for _ in range(100):
        # Coarse integer values create plenty of ties between neighbors.
        P = rng.integers(0, 4, size=(16, 16)).astype(float)
        m = find_local_maxima(grid_of(P, neighborhood))
        expected = maxima_oracle(P.tolist(), eight=neighborhood is Neighborhood.EIGHT)
        assert m.locations == expected
        assert m.count == len(expected) <= 14 ** 2


def test_global_max_is_max_of_all_direct_backtests(fixture_series):
    spec = GridSpec(32, range_p=0.2, range_q=0.2)
    p_star, q_star, best = max_profit_strategy(fixture_series, BASE, spec)
    direct = [
        run_backtest(fixture_series, BASE.with_thresholds(p, q)).profit
        for p in spec.p_centers
        for q in spec.q_centers
    ]
    assert best == max(direct)
    assert run_backtest(fixture_series, BASE.with_thresholds(p_star, q_star)).profit == best


def test_exports_round_trip(tmp_path, fixture_series):
    g = sweep(fixture_series, BASE, GridSpec(8, range_p=0.2, range_q=0.1))
    write_landscape_matrix_csv(g, tmp_path / "m.csv")
    p, q, profits = read_landscape_matrix_csv(tmp_path / "m.csv")
    assert np.array_equal(profits, g.profits)
    assert np.array_equal(p, g.spec.p_centers) and np.array_equal(q, g.spec.q_centers)

    write_landscape_long_csv(g, tmp_path / "long.csv")
    rows = (tmp_path / "long.csv").read_text().splitlines()
    assert rows[0] == "p,q,profit" and len(rows) == 65
    p0, q1, v = map(float, rows[2].split(","))
    assert (p0, q1, v) == (g.spec.p_centers[0], g.spec.q_centers[1], g.profits[0, 1])

    m = find_local_maxima(g)
    write_maxima_csv(g, m, tmp_path / "max.csv")
    lines = (tmp_path / "max.csv").read_text().splitlines()
    assert lines[0] == "k,l,p,q,profit" and len(lines) == m.count + 1
