import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liquidity_lab.portfolio import (
    MvProblem, PortfolioError, Universe, WeightVector, benchmark_weights, clip_psd,
    read_performance_csv, realized_performance, risk_aversion, sharpe_ratio, solve_mv,
    summarize_performance, write_performance_csv,
)
from oracles import grid_best, random_problem

TEN = tuple(f"A{i}" for i in range(10))


def test_equal_weights_ten_assets():
    w = benchmark_weights("equal", Universe.with_risk_free(TEN)).w
    assert w[0] == 0 and np.allclose(w[1:], 0.10)


def test_liquidity_weights_toy():
    u = Universe.with_risk_free(("X", "Y"))
    np.testing.assert_allclose(benchmark_weights("liquidity", u, beta=[2.0, 1.0]).w, [0, 2 / 3, 1 / 3])
    np.testing.assert_allclose(benchmark_weights("inverse_liquidity", u, beta=[2.0, 1.0]).w, [0, 1 / 3, 2 / 3])


def test_equal_beta_modes_coincide():
    u = Universe.with_risk_free(("X", "Y", "Z"))
    b = [1.7, 1.7, 1.7]
    eq = benchmark_weights("equal", u).w
    np.testing.assert_allclose(benchmark_weights("liquidity", u, beta=b).w, eq)
    np.testing.assert_allclose(benchmark_weights("inverse_liquidity", u, beta=b).w, eq)


def test_market_weights_and_zero_beta_flag():
    u = Universe.with_risk_free(("X", "Y"))
    np.testing.assert_allclose(benchmark_weights("market", u, amount=[3.0, 1.0]).w, [0, 0.75, 0.25])
    wv = benchmark_weights("inverse_liquidity", u, beta=[0.0, 2.0])
    np.testing.assert_allclose(wv.w, [0, 0, 1])
    assert wv.flags and "X" in wv.flags[0]
    with pytest.raises(PortfolioError):
        benchmark_weights("bogus", u)


def test_risk_aversion_hand_value():
    # mean 0.002, sample variance 0.001
    d = np.sqrt(0.001 * 39 / 40)
    r = 0.002 + np.r_[np.full(20, d), np.full(20, -d)]
    lam, floored = risk_aversion(r)
    assert lam == pytest.approx(2.0, rel=1e-12) and not floored


def test_risk_aversion_floor_and_errors(rng):
    lam, floored = risk_aversion(rng.normal(-0.01, 0.01, 100))
    assert lam == 0.1 and floored
    with pytest.raises(PortfolioError):
        risk_aversion(np.full(50, 0.01))
    with pytest.raises(PortfolioError):
        risk_aversion(np.zeros(5))


def test_zero_mu_goes_to_risk_free():
    sigma = np.diag([0, 0.01, 0.02, 0.03])
    w = solve_mv(MvProblem(np.zeros(4), sigma, 2.0)).w
    np.testing.assert_allclose(w, [1, 0, 0, 0], atol=1e-12)


def test_dominant_asset_at_cap():
    mu = np.array([0, 10.0, 0, 0])
    sigma = np.diag([0, 1.0, 1.0, 1.0]) * 1e-3
    p = MvProblem(mu, sigma, 1.0)
    w = solve_mv(p).w
    assert w[1] == pytest.approx(0.3, abs=1e-12)
    assert grid_best(p)[1][1] == pytest.approx(0.3)


def test_small_lambda_greedy_fill():
    mu = np.r_[0, np.array([5, 4, 3, 2, 1]) * 1e-3]
    sigma = np.diag(np.r_[0, np.full(5, 1e-4)])
    w = solve_mv(MvProblem(mu, sigma, 1e-6)).w
    np.testing.assert_allclose(w, [0, 0.3, 0.3, 0.3, 0.1, 0], atol=1e-9)


def test_solver_matches_grid_oracle(rng):
    for _ in range(20):
        p = random_problem(rng)
        w = solve_mv(p).w
        WeightVector(w).check(cap=0.3)
        best, _ = grid_best(p)
        assert p.objective(w) >= best - 1e-3


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.floats(0.05, 1.0))
def test_solver_feasible_and_kkt(seed, m, cap):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, m=m, cap=cap)
    wv, info = solve_mv(p, return_info=True)
    wv.check(cap=cap)
    assert info.kkt_residual < 1e-8


def test_solver_beats_random_feasible_points(rng):
    p = random_problem(rng, m=5)
    best = p.objective(solve_mv(p).w)
    for _ in range(2000):
        x = rng.uniform(0, 0.3, 5) * rng.integers(0, 2, 5)
        if x.sum() > 1:
            continue
        assert p.objective(np.r_[1 - x.sum(), x]) <= best + 1e-12


def test_singular_covariance_uses_ridge():
    mu = np.array([0, 0.01, 0.01])
    sigma = np.zeros((3, 3))
    sigma[1:, 1:] = 1e-4
    wv = solve_mv(MvProblem(mu, sigma, 2.0))
    wv.check(cap=0.3)
    assert "ridge" in wv.flags


def test_clip_psd_removes_negative_eigenvalues(rng):
    a = rng.normal(size=(4, 4))
    s = clip_psd(a @ np.diag([1, 1, 1, -1]) @ a.T)
    assert np.linalg.eigvalsh(s).min() >= -1e-12


def test_problem_validation():
    with pytest.raises(PortfolioError):
        MvProblem(np.zeros(2), np.eye(3), 1.0)
    with pytest.raises(PortfolioError):
        MvProblem(np.zeros(2), np.eye(2), 0.0)
    with pytest.raises(PortfolioError):
        MvProblem(np.zeros(2), np.array([[1, 0.5], [0, 1]]), 1.0)


def test_realized_performance_cases():
    w = np.r_[0, 1, 0]
    rec = realized_performance(w, [0, 0.02, -0.01], np.eye(3))
    assert rec.r_p == 0.02
    rec = realized_performance([1, 0, 0], [0, 0.02, -0.01], np.diag([0, 1, 1]))
    assert rec.r_p == 0 and rec.var_p == 0


def test_sharpe_and_summary():
    assert sharpe_ratio(1.0, 0.5) == 2.0
    assert np.isnan(sharpe_ratio(1.0, 0.0))
    s = summarize_performance([0.01, 0.03], [1e-4, 3e-4], periods=365)
    assert s.ann_return == pytest.approx(365 * 0.02)
    assert s.ann_sd == pytest.approx(np.sqrt(365 * 2e-4))
    assert s.sharpe == pytest.approx(s.ann_return / s.ann_sd)


def test_weight_vector_check_rejects():
    with pytest.raises(PortfolioError):
        WeightVector([0.5, 0.4]).check()
    with pytest.raises(PortfolioError):
        WeightVector([0.0, 0.5, 0.5]).check(cap=0.3)
    with pytest.raises(PortfolioError):
        WeightVector([1.1, -0.1]).check()


def test_performance_csv_round_trip(tmp_path):
    from datetime import date
    rows = [{"date": date(2021, 1, 2), "portfolio_id": 5, "r_p": 0.1234567890123, "var_p": 1e-5,
             "sd_p": np.sqrt(1e-5)}]
    write_performance_csv(rows, tmp_path / "p.csv")
    back = read_performance_csv(tmp_path / "p.csv")
    assert back["r_p"].iloc[0] == 0.1234567890123
