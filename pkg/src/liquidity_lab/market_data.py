"""Trade ingestion, minute bars, wash-trade treatment and day panels.

The pipeline is::

    ingest_ticks -> aggregate_minutes -> apply_wash_treatment -> build_day_panels

Minute bars are carried as a :class:`pandas.DataFrame` with the columns
``asset, date, minute, close, ret, amount_raw, amount``; ``amount`` holds
the (possibly treated) quote amount and ``amount_raw`` the untouched one.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date as Date, datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

MINUTES_PER_DAY = 1440
MS_PER_MINUTE = 60_000

TICK_COLUMNS = ["asset", "ts_ms", "price", "qty"]
MINUTE_CSV_COLUMNS = ["asset", "date", "minute", "close", "return", "amount_raw", "amount_treated"]
PANEL_CSV_COLUMNS = ["asset", "date", "amount_tt", "amount_tt_raw"]


class IngestError(ValueError):
    """Raised when a tick file cannot be turned into any valid trade."""


@dataclass(frozen=True)
class WashPolicy:
    """Quantile-band reduction of minute amounts.

    Minutes in ``[Q2, Q3)`` are scaled by ``q3_factor`` and minutes at or
    above ``Q3`` by ``q4_factor``, where Q2/Q3 are the 50%/75% quantiles of
    the positive minute amounts within ``quantile_scope``.
    """

    enabled: bool = True
    q3_factor: float = 0.5
    q4_factor: float = 0.25
    quantile_scope: str = "full_sample"
    quantile_method: str = "linear"

    def __post_init__(self):
        if not 0 < self.q4_factor <= self.q3_factor <= 1:
            raise ValueError("need 0 < q4_factor <= q3_factor <= 1, "
                             f"got q3={self.q3_factor}, q4={self.q4_factor}")
        if self.quantile_scope not in ("full_sample", "per_day"):
            raise ValueError(f"unknown quantile_scope {self.quantile_scope!r}")


@dataclass
class IngestResult:
    ticks: pd.DataFrame
    skipped: int = 0
    malformed: int = 0


@dataclass
class DayPanel:
    """One asset-day of minute data plus its daily amount aggregates."""

    asset: str
    date: Date
    returns: np.ndarray
    amounts: np.ndarray
    amounts_raw: np.ndarray
    closes: np.ndarray = field(repr=False, default=None)

    @property
    def amount_tt(self) -> float:
        return float(self.amounts.sum())

    @property
    def amount_tt_raw(self) -> float:
        return float(self.amounts_raw.sum())


def _to_float(s: pd.Series) -> pd.Series:
    # pd.to_numeric is not correctly rounded; astype(float) is
    try:
        return s.astype(float)
    except ValueError:
        def conv(v):
            try:
                return float(v)
            except ValueError:
                return np.nan
        return s.map(conv).astype(float)


def ingest_ticks(source, asset: str) -> IngestResult:
    """Read a tick CSV (``asset,ts_ms,price,qty[,amount]``) for one asset.

    Rows for other assets are ignored. Rows that fail to parse are counted
    as malformed; rows with non-positive price or quantity are counted as
    skipped. When there is no ``amount`` column it is recomputed as
    ``price * qty``.
    """
    path = Path(source)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read tick file {path}: {exc}") from exc
    missing = [c for c in TICK_COLUMNS if c not in raw.columns]
    if missing:
        raise IngestError(f"{path}: missing columns {missing}")

    raw = raw[raw["asset"].str.strip() == asset]
    ts = pd.to_numeric(raw["ts_ms"], errors="coerce")
    price = _to_float(raw["price"])
    qty = _to_float(raw["qty"])
    has_amount = "amount" in raw.columns
    amount = _to_float(raw["amount"]) if has_amount else price * qty

    parsed = ts.notna() & price.notna() & qty.notna() & amount.notna()
    malformed = int((~parsed).sum())
    positive = parsed & (price > 0) & (qty > 0)
    skipped = int((parsed & ~positive).sum())

    ticks = pd.DataFrame({
        "asset": asset,
        "ts_ms": ts[positive].astype(np.int64).to_numpy(),
        "price": price[positive].to_numpy(dtype=float),
        "qty": qty[positive].to_numpy(dtype=float),
        "amount": amount[positive].to_numpy(dtype=float),
    })
    if ticks.empty:
        raise IngestError(f"{path}: no valid trades for asset {asset!r}")
    ticks = ticks.sort_values("ts_ms", kind="mergesort").reset_index(drop=True)
    if malformed or skipped:
        logger.info("%s: %d malformed and %d non-positive rows skipped", asset, malformed, skipped)
    return IngestResult(ticks=ticks, skipped=skipped, malformed=malformed)


def _epoch_day_to_date(day: np.ndarray) -> list[Date]:
    return [datetime.fromtimestamp(int(d) * 86400, tz=timezone.utc).date() for d in day]


def aggregate_minutes(ticks: pd.DataFrame) -> pd.DataFrame:
    """Aggregate sorted single-asset ticks to gap-filled minute bars.

    Bars run from the first to the last traded minute. Minutes without
    trades carry the previous close forward, so their return and amount are
    zero. The first bar of the sample has return zero.
    """
    if len(ticks) == 0:
        raise ValueError("no ticks to aggregate")
    assets = ticks["asset"].unique()
    if len(assets) != 1:
        raise ValueError(f"aggregate_minutes expects one asset, got {list(assets)}")

    minute_idx = ticks["ts_ms"].to_numpy() // MS_PER_MINUTE
    grouped = pd.DataFrame({"m": minute_idx, "price": ticks["price"].to_numpy(),
                            "amount": ticks["amount"].to_numpy()}).groupby("m", sort=True)
    last_price = grouped["price"].last()
    amount = grouped["amount"].sum()

    full = np.arange(minute_idx.min(), minute_idx.max() + 1)
    close = last_price.reindex(full).ffill().to_numpy()
    amt = amount.reindex(full, fill_value=0.0).to_numpy()
    ret = np.zeros_like(close)
    ret[1:] = close[1:] / close[:-1] - 1.0

    days = full // MINUTES_PER_DAY
    uniq_days, inverse = np.unique(days, return_inverse=True)
    dates = np.array(_epoch_day_to_date(uniq_days), dtype=object)[inverse]
    return pd.DataFrame({
        "asset": assets[0],
        "date": dates,
        "minute": (full % MINUTES_PER_DAY).astype(np.int64),
        "close": close,
        "ret": ret,
        "amount_raw": amt,
        "amount": amt.copy(),
    })


def _band_factors(values: np.ndarray, policy: WashPolicy) -> np.ndarray:
    factors = np.ones_like(values)
    pos = values > 0
    if not pos.any():
        return factors
    q2, q3 = np.quantile(values[pos], [0.5, 0.75], method=policy.quantile_method)
    factors[pos & (values >= q2)] = policy.q3_factor
    factors[pos & (values >= q3)] = policy.q4_factor
    return factors


def apply_wash_treatment(bars: pd.DataFrame, policy: WashPolicy) -> pd.DataFrame:
    """Scale minute amounts by quantile band; returns are left alone."""
    out = bars.copy()
    if not policy.enabled:
        out["amount"] = out["amount_raw"].to_numpy(copy=True)
        return out
    raw = out["amount_raw"].to_numpy(dtype=float)
    if policy.quantile_scope == "full_sample":
        factors = _band_factors(raw, policy)
    else:
        factors = np.ones_like(raw)
        for _, idx in out.groupby("date", sort=False).indices.items():
            factors[idx] = _band_factors(raw[idx], policy)
    out["amount"] = raw * factors
    return out


def build_day_panels(bars: pd.DataFrame, minutes_per_day: int = MINUTES_PER_DAY):
    """Split bars into complete :class:`DayPanel` objects.

    Returns ``(panels, dropped_dates)``; days without exactly
    ``minutes_per_day`` bars (partial first/last days) are dropped.
    """
    panels, dropped = [], []
    for day, grp in bars.groupby("date", sort=True):
        if len(grp) != minutes_per_day:
            dropped.append(day)
            continue
        grp = grp.sort_values("minute")
        panels.append(DayPanel(
            asset=str(grp["asset"].iloc[0]),
            date=day,
            returns=grp["ret"].to_numpy(dtype=float),
            amounts=grp["amount"].to_numpy(dtype=float),
            amounts_raw=grp["amount_raw"].to_numpy(dtype=float),
            closes=grp["close"].to_numpy(dtype=float),
        ))
    if dropped:
        logger.info("dropped %d partial day(s): %s", len(dropped), ", ".join(map(str, dropped)))
    return panels, dropped


def panels_to_frame(panels) -> pd.DataFrame:
    return pd.DataFrame({
        "asset": [p.asset for p in panels],
        "date": [p.date for p in panels],
        "amount_tt": [p.amount_tt for p in panels],
        "amount_tt_raw": [p.amount_tt_raw for p in panels],
    }, columns=PANEL_CSV_COLUMNS)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def write_minute_csv(bars: pd.DataFrame, path) -> None:
    out = bars.rename(columns={"ret": "return", "amount": "amount_treated"})
    out = out.assign(date=[d.isoformat() for d in out["date"]])
    out[MINUTE_CSV_COLUMNS].to_csv(path, index=False, float_format="%.17g")


def read_minute_csv(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"asset": str, "date": str}, float_precision="round_trip")
    df["date"] = [Date.fromisoformat(d) for d in df["date"]]
    return df.rename(columns={"return": "ret", "amount_treated": "amount"})


def write_panel_csv(panels, path) -> None:
    df = panels_to_frame(panels)
    df["date"] = [d.isoformat() for d in df["date"]]
    df.to_csv(path, index=False, float_format="%.17g")


def read_panel_csv(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"asset": str, "date": str}, float_precision="round_trip")
    df["date"] = [Date.fromisoformat(d) for d in df["date"]]
    return df


def write_tick_csv(ticks: pd.DataFrame, path, with_amount: bool = True) -> None:
    cols = TICK_COLUMNS + (["amount"] if with_amount else [])
    ticks[cols].to_csv(path, index=False, float_format="%.17g")


def bars_from_panels(panels) -> pd.DataFrame:
    """Inverse of :func:`build_day_panels` for complete days."""
    frames = []
    for p in panels:
        n = len(p.returns)
        frames.append(pd.DataFrame({
            "asset": p.asset, "date": [p.date] * n, "minute": np.arange(n),
            "close": p.closes if p.closes is not None else np.nan,
            "ret": p.returns, "amount_raw": p.amounts_raw, "amount": p.amounts,
        }))
    return pd.concat(frames, ignore_index=True)
