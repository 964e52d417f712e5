"""Synthetic tick files and daily markets with controllable liquidity.

Tick scenarios emit one trade per minute so the full ingest pipeline can
run on them:

``constant``
    Amount proportional to the absolute minute return, so illiquidity is
    identical across minutes and every Beta equals one.
``regime``
    A two-state Markov liquidity regime. On high-amount days trading
    concentrates on the large moves, elsewhere amount grows only with the
    square root of the move.
``wash``
    Amounts with lognormal noise, standing in for wash-inflated volume.

:func:`simulate_daily_market` skips the tick level and produces daily
records directly, with liquidity-adjusted returns following an
AR(1)-GARCH(1,1) process and observed returns scaled by a sticky Beta.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta

import numpy as np
import pandas as pd

from .arga.volatility import simulate_garch
from .liquidity import DEFAULT_BETA_CAP
from .market_data import MINUTES_PER_DAY, MS_PER_MINUTE, TICK_COLUMNS

SCENARIOS = ("constant", "regime", "wash")


class ScenarioError(ValueError):
    pass


@dataclass
class TickScenario:
    """Parameters of a tick-level scenario.

    ``garch`` holds ``(omega, a, b)`` for the daily volatility level; the
    minute returns of a day are Gaussian with that day's standard deviation
    spread over the minutes and a lognormal minute-level dispersion
    ``minute_vol_dispersion``.
    """

    kind: str = "regime"
    assets: tuple = ("AAA",)
    n_days: int = 30
    start: Date = Date(2021, 1, 1)
    initial_price: float = 100.0
    garch: tuple = (2e-5, 0.08, 0.90)
    minute_vol_dispersion: float = 0.5
    base_amount: float = 1e6
    p_high: float = 0.03
    stay_high: float = 0.5
    high_scale: float = 20.0
    high_power: float = 2.0
    low_power: float = 0.5
    amount_noise: float = 1.0
    wash_sigma: float = 1.5

    def __post_init__(self):
        self.assets = tuple(self.assets)
        if self.kind not in SCENARIOS:
            raise ScenarioError(f"unknown scenario {self.kind!r}; choose from {SCENARIOS}")
        if self.n_days < 1 or not self.assets:
            raise ScenarioError("need at least one asset and one day")
        om, a, b = self.garch
        if not (om > 0 and a >= 0 and b >= 0 and a + b < 1):
            raise ScenarioError("garch parameters must satisfy omega > 0, a, b >= 0, a + b < 1")
        if not 0 <= self.p_high < 1 or not 0 <= self.stay_high < 1:
            raise ScenarioError("regime probabilities must lie in [0, 1)")
        if self.initial_price <= 0 or self.base_amount <= 0:
            raise ScenarioError("initial_price and base_amount must be positive")
        if self.wash_sigma < 0 or self.amount_noise < 0 or self.minute_vol_dispersion < 0:
            raise ScenarioError("dispersion parameters must be non-negative")


def asset_rng(seed: int, asset: str, salt: int = 0) -> np.random.Generator:
    key = (zlib.crc32(str(asset).encode()), int(salt))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def _regime_path(n, p_high, stay_high, rng):
    # stationary share of high days equals p_high
    if p_high == 0:
        return np.zeros(n, dtype=bool)
    enter = p_high * (1 - stay_high) / (1 - p_high)
    state = np.empty(n, dtype=bool)
    s = rng.random() < p_high
    for t in range(n):
        state[t] = s
        s = rng.random() < (stay_high if s else enter)
    return state


def simulate_minutes(scn: TickScenario, asset: str, seed: int):
    """Minute returns, amounts and closes for one asset.

    Returns ``(returns, amounts, closes, high_days)`` with arrays of shape
    ``(n_days, 1440)`` and ``closes`` holding one extra leading price.
    """
    rng = asset_rng(seed, asset)
    T = MINUTES_PER_DAY
    om, a, b = scn.garch
    _, h = simulate_garch(scn.n_days, om, a, b, rng)
    z = rng.standard_normal((scn.n_days, T))
    disp = np.exp(scn.minute_vol_dispersion * rng.standard_normal((scn.n_days, T)))
    disp /= np.sqrt(np.mean(disp ** 2, axis=1, keepdims=True))
    r = z * disp * np.sqrt(h / T)[:, None]
    r = np.clip(r, -0.5, 0.5)
    closes = scn.initial_price * np.cumprod(np.r_[1.0, (1.0 + r).ravel()])
    # use the returns the price path implies, as ingestion will recompute them
    r = (closes[1:] / closes[:-1] - 1.0).reshape(r.shape)
    abs_r = np.abs(r)
    high = np.zeros(scn.n_days, dtype=bool)
    if scn.kind == "constant":
        amounts = scn.base_amount * abs_r / np.mean(abs_r)
    elif scn.kind == "regime":
        high = _regime_path(scn.n_days, scn.p_high, scn.stay_high, rng)
        noise = np.exp(scn.amount_noise * rng.standard_normal((scn.n_days, T)))
        scale = abs_r / np.mean(abs_r)
        power = np.where(high, scn.high_power, scn.low_power)[:, None]
        level = np.where(high, scn.high_scale, 1.0)[:, None]
        amounts = scn.base_amount * level * scale ** power * noise
    else:
        noise = np.exp(scn.wash_sigma * rng.standard_normal((scn.n_days, T)))
        amounts = scn.base_amount * noise
    return r, amounts, closes, high


def generate_ticks(scn: TickScenario, seed: int) -> dict:
    """Tick frames per asset (``asset, ts_ms, price, qty, amount``).

    One trade falls in every minute of every day, plus a trade in the last
    minute of the preceding day so that the first full day has a proper
    opening return. That preceding day is partial and gets dropped on
    ingestion.
    """
    out = {}
    day0 = (scn.start - Date(1970, 1, 1)).days
    n = scn.n_days * MINUTES_PER_DAY
    minutes = day0 * MINUTES_PER_DAY + np.arange(-1, n)
    ts = minutes.astype(np.int64) * MS_PER_MINUTE + MS_PER_MINUTE // 2
    for asset in scn.assets:
        _, amounts, closes, _ = simulate_minutes(scn, asset, seed)
        amt = np.r_[scn.base_amount, amounts.ravel()]
        out[asset] = pd.DataFrame({"asset": asset, "ts_ms": ts, "price": closes,
                                   "qty": amt / closes, "amount": amt},
                                  columns=TICK_COLUMNS + ["amount"])
    return out


def write_scenario(scn: TickScenario, seed: int, out_dir) -> list:
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for asset, df in generate_ticks(scn, seed).items():
        p = out / f"{asset}_ticks.csv"
        df.to_csv(p, index=False, float_format="%.17g", lineterminator="\n")
        paths.append(p)
    return paths


# --- daily market ----------------------------------------------------------

@dataclass
class DailyMarket:
    """Daily liquidity-modulated market.

    For each asset ``r_lq`` is AR(1) with mean ``mu`` and GARCH(1,1)
    innovations, ``log beta`` is AR(1) around ``beta_loc`` (capped at
    ``beta_cap``) and the observed return is ``r = beta * r_lq``. Amounts
    scale with ``beta ** 2``.
    """

    assets: tuple = ("A1", "A2", "A3", "A4", "A5")
    n_days: int = 300
    start: Date = Date(2020, 1, 1)
    mu: tuple = (0.001,)
    phi: tuple = (0.3,)
    garch: tuple = (1e-5, 0.05, 0.90)
    beta_loc: float = 0.0
    beta_sigma: float = 0.8
    beta_rho: float = 0.0
    beta_cap: float = DEFAULT_BETA_CAP
    base_amount: float = 1e8
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.assets = tuple(self.assets)
        om, a, b = self.garch
        if not (om > 0 and a >= 0 and b >= 0 and a + b < 1):
            raise ScenarioError("invalid garch parameters")
        if not -1 < self.beta_rho < 1:
            raise ScenarioError("beta_rho must lie in (-1, 1)")
        for name in ("mu", "phi"):
            v = getattr(self, name)
            if len(v) not in (1, len(self.assets)):
                raise ScenarioError(f"{name} needs 1 or {len(self.assets)} values")
        if any(abs(p) >= 1 for p in self.phi):
            raise ScenarioError("phi must lie in (-1, 1)")

    def _param(self, name, j):
        v = getattr(self, name)
        return v[0] if len(v) == 1 else v[j]


def simulate_daily_market(mkt: DailyMarket, seed: int) -> pd.DataFrame:
    """Daily records ``asset, date, r_tt, r_lq_tt, beta_tt, var_tt, var_lq_tt, eta_t, amount_tt``."""
    dates = [mkt.start + timedelta(days=k) for k in range(mkt.n_days)]
    om, a, b = mkt.garch
    frames = []
    for j, asset in enumerate(mkt.assets):
        rng = asset_rng(seed, asset, salt=1)
        eps, h = simulate_garch(mkt.n_days, om, a, b, rng)
        mu, phi = mkt._param("mu", j), mkt._param("phi", j)
        r_lq = np.empty(mkt.n_days)
        prev = mu
        for t in range(mkt.n_days):
            prev = mu + phi * (prev - mu) + eps[t]
            r_lq[t] = prev
        xi = rng.standard_normal(mkt.n_days)
        lb = np.empty(mkt.n_days)
        s = mkt.beta_sigma * np.sqrt(1 - mkt.beta_rho ** 2)
        lb[0] = mkt.beta_sigma * xi[0]
        for t in range(1, mkt.n_days):
            lb[t] = mkt.beta_rho * lb[t - 1] + s * xi[t]
        beta = np.minimum(np.exp(mkt.beta_loc + lb), mkt.beta_cap)
        r = beta * r_lq
        amount = mkt.base_amount * beta ** 2 * np.exp(0.3 * rng.standard_normal(mkt.n_days))
        frames.append(pd.DataFrame({
            "asset": asset, "date": dates, "r_tt": r, "r_lq_tt": r_lq, "beta_tt": beta,
            "var_tt": h * beta ** 2, "var_lq_tt": h, "eta_t": np.nan, "amount_tt": amount,
            "amount_tt_raw": amount, "beta_capped": beta >= mkt.beta_cap,
        }))
    return pd.concat(frames, ignore_index=True)
