import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from liquidity_lab.liquidity import (
    MinuteLiquidity, UnusableDayError, daily_aggregate, day_normalize, fill_zero_amounts,
    fix_zero_returns, intraday_covariance, liquidity_variance, minute_beta_and_adjusted_return,
    minute_illiquidity, process_day,
)


def test_zero_fix_noop_without_zeros():
    r = np.array([0.01, -0.02, 0.005])
    np.testing.assert_array_equal(fix_zero_returns(r, 0.01, seed=1), r)


def test_zero_fix_magnitude_bounds():
    for seed in range(20):
        out = fix_zero_returns(np.array([0.0, 0.01]), 0.01, seed=seed)
        assert 0.00005 <= abs(out[0]) <= 0.0001
        assert out[1] == 0.01


def test_zero_fix_deterministic_and_order_free():
    r = np.array([0.0, 0.01, 0.0, -0.02])
    a = fix_zero_returns(r, 0.0075, seed=3, asset="BTC", day=5)
    b = fix_zero_returns(r, 0.0075, seed=3, asset="BTC", day=5)
    np.testing.assert_array_equal(a, b)
    c = fix_zero_returns(r, 0.0075, seed=3, asset="ETH", day=5)
    assert not np.array_equal(a, c)


def test_zero_fix_all_zero_day_unusable():
    with pytest.raises(UnusableDayError):
        fix_zero_returns(np.zeros(4), 0.0, seed=0)


def test_zero_amounts_filled():
    out = fill_zero_amounts([0.0, 2.0, 4.0])
    assert out[0] == pytest.approx(0.02)
    with pytest.raises(UnusableDayError):
        fill_zero_amounts([0.0, 0.0])


def test_minute_illiquidity_hand_value():
    ell = minute_illiquidity([0.002], [500.0], mean_abs_r=0.001, mean_amount=1000.0)
    assert ell[0] == pytest.approx(4.0)


def test_minute_illiquidity_equilibrium_and_scale_invariance(rng):
    r = 0.001 * np.where(rng.random(50) < 0.5, -1.0, 1.0)
    assert np.allclose(minute_illiquidity(r, np.full(50, 7.0)), 1.0)
    r = rng.normal(0, 1e-3, 50)
    A = rng.lognormal(0, 1, 50)
    np.testing.assert_allclose(minute_illiquidity(r, 2 * A), minute_illiquidity(r, A), rtol=1e-14)


def test_day_normalize_toy():
    eta, ell_T = day_normalize([1, 2, 1, 4])
    assert eta == 0.5
    np.testing.assert_array_equal(ell_T, [0.5, 1, 0.5, 2])
    assert ell_T.sum() == 4
    eta, ell_T = day_normalize(np.ones(5))
    assert eta == 1 and np.all(ell_T == 1)


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.integers(1, 300), elements=st.floats(1e-6, 1e6)))
def test_day_normalize_sums_to_T(ell):
    _, ell_T = day_normalize(ell)
    assert ell_T.sum() == pytest.approx(ell.size, rel=1e-12)


@pytest.mark.parametrize("ell_T, beta, factor", [(4.0, 0.5, 2.0), (1.0, 1.0, 1.0), (0.25, 2.0, 0.5)])
def test_minute_beta(ell_T, beta, factor):
    ml = minute_beta_and_adjusted_return([0.01], [ell_T])
    assert ml.beta_t[0] == pytest.approx(beta)
    assert ml.r_lq_t[0] == pytest.approx(0.01 * factor)


def _agg(r, r_lq):
    ml = MinuteLiquidity(ell_t=None, ell_T=None, beta_t=None, r_lq_t=np.asarray(r_lq, float))
    return daily_aggregate(ml, np.asarray(r, float))


def test_daily_beta_hand_value():
    assert _agg([0.01], [0.02]).beta_tt == pytest.approx(0.5)


def test_daily_beta_capped():
    rec = _agg([0.5], [0.001])
    assert rec.beta_tt == 10.0 and rec.beta_capped


def test_daily_beta_undefined_takes_cap():
    rec = _agg([0.01, 0.01], [0.01, -0.01])
    assert rec.beta_undefined and rec.beta_tt == 10.0


def test_equilibrium_day(rng):
    r = rng.normal(0, 1e-3, 1440)
    A = rng.lognormal(0, 1, 1440)
    # amounts chosen so illiquidity is flat
    A = np.abs(r) / np.abs(r).mean() * A.mean()
    ml, rec, _ = process_day(r, A, seed=0)
    np.testing.assert_allclose(ml.ell_T, 1.0, rtol=1e-12)
    assert rec.beta_tt == pytest.approx(1.0, rel=1e-12)
    assert rec.r_lq_tt == pytest.approx(rec.r_tt, rel=1e-12)
    assert rec.var_lq_tt == pytest.approx(rec.var_tt, rel=1e-12)


def test_variance_forms_agree(rng):
    r = rng.normal(0, 1e-3, 1440)
    _, ell_T = day_normalize(rng.lognormal(0, 1.5, 1440))
    w = liquidity_variance(r, ell_T, "weighted")
    a = liquidity_variance(r, ell_T, "adjusted")
    assert a == pytest.approx(w, rel=1e-12)
    with pytest.raises(ValueError):
        liquidity_variance(r, ell_T, "mystery")


def test_process_day_counts_zero_fixes(rng):
    r = rng.normal(0, 1e-3, 100)
    r[[3, 7]] = 0.0
    A = rng.lognormal(0, 1, 100)
    A[5] = 0.0
    _, rec, fixed = process_day(r, A, seed=9, asset="X", day=2)
    assert rec.n_zero_returns == 2 and rec.n_zero_amounts == 1
    assert np.all(fixed != 0)


def test_intraday_covariance_matches_numpy(rng):
    x = rng.normal(size=(3, 1440))
    np.testing.assert_allclose(intraday_covariance(x), 1440 * np.cov(x, ddof=0), rtol=1e-12)
