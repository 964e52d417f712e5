import numpy as np
import pytest

from liquidity_lab.liquidity import process_day
from liquidity_lab.market_data import MINUTES_PER_DAY
from liquidity_lab.synth import (
    DailyMarket, ScenarioError, TickScenario, generate_ticks, simulate_daily_market, simulate_minutes,
)


def test_constant_scenario_has_unit_beta():
    scn = TickScenario(kind="constant", n_days=3)
    r, A, _, _ = simulate_minutes(scn, "AAA", seed=1)
    for d in range(3):
        ml, rec, _ = process_day(r[d], A[d], seed=1)
        assert rec.beta_tt == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(ml.beta_t, 1.0, atol=1e-9)


def test_regime_share_of_high_days():
    scn = TickScenario(kind="regime", n_days=4000, p_high=0.03)
    from liquidity_lab.synth import _regime_path, asset_rng
    path = _regime_path(scn.n_days, scn.p_high, scn.stay_high, asset_rng(0, "X"))
    assert abs(path.mean() - 0.03) < 0.01


def test_ticks_cover_every_minute():
    scn = TickScenario(kind="wash", n_days=2)
    t = generate_ticks(scn, seed=3)["AAA"]
    assert len(t) == 2 * MINUTES_PER_DAY + 1
    assert np.all(np.diff(t["ts_ms"]) == 60_000)
    np.testing.assert_allclose(t["price"] * t["qty"], t["amount"], rtol=1e-12)


def test_generation_is_seeded():
    scn = TickScenario(n_days=2, assets=("A", "B"))
    a, b = generate_ticks(scn, 7), generate_ticks(scn, 7)
    assert a["A"].equals(b["A"]) and not a["A"]["price"].equals(a["B"]["price"])


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        TickScenario(kind="nope")
    with pytest.raises(ScenarioError):
        TickScenario(garch=(1e-5, 0.5, 0.6))
    with pytest.raises(ScenarioError):
        DailyMarket(phi=(1.2,))
    with pytest.raises(ScenarioError):
        DailyMarket(assets=("a", "b", "c"), mu=(0.1, 0.2))


def test_daily_market_structure():
    df = simulate_daily_market(DailyMarket(assets=("X", "Y"), n_days=50), seed=2)
    assert len(df) == 100
    np.testing.assert_allclose(df["r_tt"], df["beta_tt"] * df["r_lq_tt"], rtol=1e-12)
    assert (df["beta_tt"] <= 10).all()
