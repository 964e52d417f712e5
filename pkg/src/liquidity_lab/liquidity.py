"""Minute and daily liquidity measures and liquidity-adjusted returns.

For a day of ``T`` minute returns ``r`` and quote amounts ``A``::

    ell_t   = (|r_t| / mean|r|) / (A_t / mean A)      normalised illiquidity
    eta     = T / sum(ell)                            daily normaliser
    ell_T   = eta * ell_t                             sums to T
    beta_t  = 1 / sqrt(ell_T)                         minute liquidity Beta
    r_lq_t  = sqrt(ell_T) * r_t = r_t / beta_t

Daily aggregates are first-order sums of the minute returns, and the daily
Beta is ``|sum r / sum r_lq|`` capped at ``beta_cap``.
"""
from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, asdict
from datetime import date as Date
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

DEFAULT_BETA_CAP = 10.0
ZERO_FIX_SCALE = 1e-2
LOW_LIQUIDITY_THRESHOLD = 0.10

DAILY_CSV_COLUMNS = ["asset", "date", "r_tt", "r_lq_tt", "beta_tt", "var_tt",
                     "var_lq_tt", "eta_t", "amount_tt"]


class UnusableDayError(ValueError):
    """The day cannot produce finite liquidity measures."""


@dataclass
class MinuteLiquidity:
    ell_t: np.ndarray
    ell_T: np.ndarray
    beta_t: np.ndarray
    r_lq_t: np.ndarray


@dataclass
class DailyLiquidityRecord:
    r_tt: float
    r_lq_tt: float
    beta_tt: float
    var_tt: float
    var_lq_tt: float
    eta_t: float
    beta_capped: bool = False
    beta_undefined: bool = False
    n_zero_returns: int = 0
    n_zero_amounts: int = 0


def _day_key(day) -> int:
    if isinstance(day, Date):
        return day.toordinal()
    return int(day)


def minute_stream(seed: int, asset: str, day, size: int) -> np.random.Generator:
    """Generator whose i-th draws belong to minute i of (seed, asset, day)."""
    key = (zlib.crc32(str(asset).encode()), _day_key(day))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def fix_zero_returns(r, mean_abs: float, seed: int, asset: str = "", day=0) -> np.ndarray:
    """Replace exact-zero returns by tiny random-signed values.

    Each zero at minute ``t`` becomes ``s * u * 1e-2 * mean_abs`` with
    ``s = +-1`` and ``u ~ U[0.5, 1]``. The draw at minute ``t`` depends only
    on ``(seed, asset, day, t)``, so days can be processed in any order.
    """
    r = np.asarray(r, dtype=float)
    if not mean_abs > 0:
        raise UnusableDayError("day has no non-zero return")
    zero = r == 0.0
    if not zero.any():
        return r.copy()
    rng = minute_stream(seed, asset, day, r.size)
    u = rng.uniform(0.5, 1.0, size=r.size)
    sign = np.where(rng.random(r.size) < 0.5, -1.0, 1.0)
    out = r.copy()
    out[zero] = (sign * u)[zero] * ZERO_FIX_SCALE * mean_abs
    return out


def fill_zero_amounts(A) -> np.ndarray:
    """Zero amounts get 1e-2 times the day's smallest positive amount."""
    A = np.asarray(A, dtype=float)
    pos = A > 0
    if not pos.any():
        raise UnusableDayError("day has no positive amount")
    if pos.all():
        return A.copy()
    return np.where(pos, A, ZERO_FIX_SCALE * A[pos].min())


def minute_illiquidity(r, A, mean_abs_r: float | None = None,
                       mean_amount: float | None = None) -> np.ndarray:
    """Normalised minute illiquidity ``(|r|/mean|r|) / (A/mean A)``.

    ``r`` must already be free of zeros and ``A`` strictly positive. The
    day means default to those of the inputs.
    """
    r = np.asarray(r, dtype=float)
    A = np.asarray(A, dtype=float)
    abs_r = np.abs(r)
    if np.any(abs_r == 0) or np.any(A <= 0):
        raise UnusableDayError("minute_illiquidity needs non-zero returns and positive amounts")
    mr = abs_r.mean() if mean_abs_r is None else mean_abs_r
    ma = A.mean() if mean_amount is None else mean_amount
    if not (mr > 0 and ma > 0):
        raise UnusableDayError("degenerate day means")
    ell = (abs_r / mr) / (A / ma)
    if not np.all(np.isfinite(ell)):
        raise UnusableDayError("non-finite illiquidity")
    return ell


def day_normalize(ell):
    """Return ``(eta, ell_T)`` with ``eta = T / sum(ell)`` and ``ell_T = eta * ell``."""
    ell = np.asarray(ell, dtype=float)
    eta = ell.size / ell.sum()
    return eta, eta * ell


def minute_beta_and_adjusted_return(r, ell_T) -> MinuteLiquidity:
    r = np.asarray(r, dtype=float)
    ell_T = np.asarray(ell_T, dtype=float)
    root = np.sqrt(ell_T)
    return MinuteLiquidity(ell_t=np.full_like(ell_T, np.nan), ell_T=ell_T,
                           beta_t=1.0 / root, r_lq_t=root * r)


def liquidity_variance(r, ell_T, form: str = "weighted") -> float:
    """Minute-level liquidity-adjusted variance.

    ``weighted`` is ``mean(ell_T * (r - rbar)^2)``; ``adjusted`` is
    ``mean((sqrt(ell_T) r - sqrt(ell_T) rbar)^2)``, the same quantity
    written on the adjusted series with the mean scaled minute by minute.
    """
    r = np.asarray(r, dtype=float)
    ell_T = np.asarray(ell_T, dtype=float)
    rbar = r.mean()
    if form == "weighted":
        return float(np.mean(ell_T * (r - rbar) ** 2))
    if form == "adjusted":
        root = np.sqrt(ell_T)
        return float(np.mean((root * r - root * rbar) ** 2))
    raise ValueError(f"unknown form {form!r}")


def daily_aggregate(minutes: MinuteLiquidity, r, beta_cap: float = DEFAULT_BETA_CAP,
                    eta: float = np.nan) -> DailyLiquidityRecord:
    r = np.asarray(r, dtype=float)
    T = r.size
    if minutes.r_lq_t.size != T:
        raise ValueError("minute series length mismatch")
    r_lq = minutes.r_lq_t
    r_tt = float(r.sum())
    r_lq_tt = float(r_lq.sum())
    undefined = r_lq_tt == 0.0
    if undefined:
        beta_tt = beta_cap
    else:
        beta_tt = abs(r_tt / r_lq_tt)
    capped = undefined or beta_tt >= beta_cap
    beta_tt = min(beta_tt, beta_cap)
    var_tt = T * float(np.mean((r - r.mean()) ** 2))
    var_lq_tt = T * float(np.mean((r_lq - r_lq.mean()) ** 2))
    return DailyLiquidityRecord(r_tt=r_tt, r_lq_tt=r_lq_tt, beta_tt=float(beta_tt),
                                var_tt=var_tt, var_lq_tt=var_lq_tt, eta_t=float(eta),
                                beta_capped=bool(capped), beta_undefined=bool(undefined))


def process_day(r, A, seed: int, asset: str = "", day=0,
                beta_cap: float = DEFAULT_BETA_CAP):
    """Full minute-to-daily computation for one asset-day.

    Returns ``(MinuteLiquidity, DailyLiquidityRecord, fixed_returns)``.
    """
    r = np.asarray(r, dtype=float)
    A = np.asarray(A, dtype=float)
    mean_abs = float(np.abs(r).mean())
    mean_amount = float(A.mean())
    r_fix = fix_zero_returns(r, mean_abs, seed, asset, day)
    A_fix = fill_zero_amounts(A)
    ell = minute_illiquidity(r_fix, A_fix, mean_abs, mean_amount)
    eta, ell_T = day_normalize(ell)
    ml = minute_beta_and_adjusted_return(r_fix, ell_T)
    ml.ell_t = ell
    rec = daily_aggregate(ml, r_fix, beta_cap=beta_cap, eta=eta)
    rec.n_zero_returns = int(np.count_nonzero(r == 0))
    rec.n_zero_amounts = int(np.count_nonzero(A <= 0))
    return ml, rec, r_fix


def compute_daily_records(panels, seed: int, beta_cap: float = DEFAULT_BETA_CAP) -> pd.DataFrame:
    """Daily record table for a list of :class:`~liquidity_lab.market_data.DayPanel`.

    Unusable days are logged and omitted.
    """
    rows = []
    for p in panels:
        try:
            _, rec, _ = process_day(p.returns, p.amounts, seed, p.asset, p.date, beta_cap)
        except UnusableDayError as exc:
            logger.warning("%s %s unusable: %s", p.asset, p.date, exc)
            continue
        row = {"asset": p.asset, "date": p.date}
        row.update(asdict(rec))
        row["amount_tt"] = p.amount_tt
        row["amount_tt_raw"] = p.amount_tt_raw
        rows.append(row)
    return pd.DataFrame(rows)


def intraday_covariance(returns_by_asset: np.ndarray) -> np.ndarray:
    """Day-level covariance ``T * cov`` of a ``(n_assets, T)`` minute-return block."""
    x = np.asarray(returns_by_asset, dtype=float)
    xc = x - x.mean(axis=1, keepdims=True)
    return xc @ xc.T


def write_daily_csv(records: pd.DataFrame, path) -> None:
    out = records.copy()
    out["date"] = [d.isoformat() for d in out["date"]]
    extra = [c for c in out.columns if c not in DAILY_CSV_COLUMNS]
    out[DAILY_CSV_COLUMNS + extra].to_csv(path, index=False, float_format="%.17g")


def read_daily_csv(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"asset": str, "date": str}, float_precision="round_trip")
    df["date"] = [Date.fromisoformat(d) for d in df["date"]]
    return df


def read_daily_dir(directory) -> dict[str, pd.DataFrame]:
    out = {}
    for f in sorted(Path(directory).glob("*_daily.csv")):
        df = read_daily_csv(f)
        if len(df):
            out[str(df["asset"].iloc[0])] = df
    return out
