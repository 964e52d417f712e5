"""Rolling out-of-sample backtest of the eight portfolio rules and report tables.

Portfolios
----------
1 ``equ``           equal weights over the risky assets
2 ``mkt``           weights proportional to daily amount
3 ``blq``           weights proportional to daily Beta
4 ``blq_inv``       weights proportional to 1 / Beta
5 ``MV_rr``         mean-variance on the window mean/covariance of r
6 ``MV_rrlq``       mean-variance on the window mean/covariance of r_lq
7 ``MV_arga_rr``    as 5 with the mean replaced by ARMA-GARCH forecasts of r
8 ``MV_arga_rrlq``  as 6 with liquidity-adjusted ARMA-GARCH forecasts of r_lq

Every decision made on day ``t`` uses data up to and including day ``t``
and is paid the realised regular returns of day ``t + 1``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import platform
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .arga import adf_test, rmse, rolling_forecast
from .liquidity import DEFAULT_BETA_CAP, LOW_LIQUIDITY_THRESHOLD
from .portfolio import (ANNUALIZATION, DEFAULT_CAP, DEFAULT_LAMBDA_MIN, MvProblem, PortfolioError,
                        Universe, benchmark_weights, realized_performance, risk_aversion, solve_mv,
                        summarize_performance)

logger = logging.getLogger(__name__)

PORTFOLIO_NAMES = {1: "equ", 2: "mkt", 3: "blq", 4: "blq_inv", 5: "MV_rr", 6: "MV_rrlq",
                   7: "MV_arga_rr", 8: "MV_arga_rrlq"}
_BENCHMARK_KIND = {1: "equal", 2: "market", 3: "liquidity", 4: "inverse_liquidity"}
FORECAST_KEYS = ("standard", "liquidity_adjusted")


@dataclass
class BacktestConfig:
    """Backtest settings.

    ``start`` is the first decision day and ``end`` the last realised day;
    both default to the extent of the data. ``cov_mode`` selects the
    realised covariance: ``"intraday"`` needs a provider of day-level
    minute covariances, ``"outer"`` uses the outer product of the
    realised daily returns.
    """

    assets: tuple
    window_days: int = 365
    portfolios: tuple = tuple(range(1, 9))
    wash: str = "on"
    seed: int = 0
    risk_free: str = "USDT"
    start: Date | None = None
    end: Date | None = None
    cap: float = DEFAULT_CAP
    lambda_min: float = DEFAULT_LAMBDA_MIN
    annualization: int = ANNUALIZATION
    cov_mode: str = "intraday"
    market_amount: str = "treated"
    pmax: int = 4
    qmax: int = 4
    refit_every: int = 1
    beta_cap: float = DEFAULT_BETA_CAP

    def __post_init__(self):
        self.assets = tuple(self.assets)
        self.portfolios = tuple(sorted(set(int(p) for p in self.portfolios)))
        if self.window_days < 30:
            raise ValueError("window_days must be at least 30")
        if not set(self.portfolios) <= set(PORTFOLIO_NAMES):
            raise ValueError(f"portfolios must be drawn from 1..8, got {self.portfolios}")
        if self.wash not in ("on", "off"):
            raise ValueError("wash must be 'on' or 'off'")
        if self.cov_mode not in ("intraday", "outer"):
            raise ValueError(f"unknown cov_mode {self.cov_mode!r}")
        if self.market_amount not in ("treated", "raw"):
            raise ValueError(f"unknown market_amount {self.market_amount!r}")
        if self.refit_every < 1:
            raise ValueError("refit_every must be >= 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["start"] = self.start.isoformat() if self.start else None
        d["end"] = self.end.isoformat() if self.end else None
        d["assets"] = list(self.assets)
        d["portfolios"] = list(self.portfolios)
        return d


@dataclass
class BacktestLedger:
    config: BacktestConfig
    universe: Universe
    weights: list = field(default_factory=list)
    performance: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def performance_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.performance, columns=["date", "portfolio_id", "r_p", "var_p", "sd_p"])

    def weights_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.weights, columns=["date", "portfolio_id", "asset", "weight"])

    def gaps_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.gaps, columns=["date", "portfolio_id", "reason"])

    def flags_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.flags, columns=["date", "portfolio_id", "flag"])

    def returns(self, portfolio_id: int) -> pd.Series:
        perf = self.performance_frame()
        sub = perf[perf["portfolio_id"] == portfolio_id]
        return pd.Series(sub["r_p"].to_numpy(), index=list(sub["date"]))

    def equity_curves(self) -> pd.DataFrame:
        """Cumulative growth of 1 per portfolio, with a leading 1.0 row."""
        perf = self.performance_frame()
        if perf.empty:
            return pd.DataFrame(columns=["date"])
        wide = perf.pivot(index="date", columns="portfolio_id", values="r_p").sort_index()
        eq = (1.0 + wide).cumprod()
        first = self.weights[0][0] if self.weights else eq.index[0]
        start = pd.DataFrame([[1.0] * eq.shape[1]], columns=eq.columns, index=[first])
        eq = pd.concat([start, eq])
        eq.columns = [f"P{c}" for c in eq.columns]
        eq.index.name = "date"
        return eq.reset_index()

    def summary(self) -> pd.DataFrame:
        perf = self.performance_frame()
        rows = []
        for pid in self.config.portfolios:
            sub = perf[perf["portfolio_id"] == pid]
            s = summarize_performance(sub["r_p"].to_numpy(), sub["var_p"].to_numpy(),
                                      self.config.annualization)
            rows.append({"portfolio_id": pid, "name": PORTFOLIO_NAMES[pid],
                         **dataclasses.asdict(s)})
        return pd.DataFrame(rows)

    def sharpe(self, portfolio_id: int) -> float:
        s = self.summary()
        return float(s.loc[s["portfolio_id"] == portfolio_id, "sharpe"].iloc[0])


# --- panel assembly --------------------------------------------------------

@dataclass
class _Panel:
    dates: list
    R: np.ndarray
    RL: np.ndarray
    B: np.ndarray
    A: np.ndarray
    A_raw: np.ndarray


def _as_frame(daily) -> pd.DataFrame:
    if isinstance(daily, dict):
        daily = pd.concat(list(daily.values()), ignore_index=True)
    return daily


def _build_panel(daily: pd.DataFrame, assets, market_amount: str) -> _Panel:
    df = _as_frame(daily)
    df = df[df["asset"].isin(assets)]
    dates = sorted(set(df["date"]))
    amount_col = "amount_tt" if market_amount == "treated" else "amount_tt_raw"

    def wide(col):
        return (df.pivot(index="date", columns="asset", values=col)
                .reindex(index=dates, columns=list(assets)).to_numpy(dtype=float))

    raw = wide("amount_tt_raw") if "amount_tt_raw" in df.columns else wide("amount_tt")
    return _Panel(dates, wide("r_tt"), wide("r_lq_tt"), wide("beta_tt"), wide(amount_col), raw)


def _forecast_matrix(fc: pd.DataFrame, dates, assets) -> np.ndarray:
    m = fc.pivot_table(index="date", columns="asset", values="mu_hat", aggfunc="last")
    return m.reindex(index=dates, columns=list(assets)).to_numpy(dtype=float)


def compute_forecasts(daily, config: BacktestConfig, which=FORECAST_KEYS, origins=None) -> dict:
    """Rolling one-step ARMA-GARCH forecasts for the requested modes.

    ``"standard"`` models ``r_tt``; ``"liquidity_adjusted"`` models
    ``r_lq_tt`` with the liquidity-adjusted volatility recursions driven by
    ``beta_tt``.
    """
    panel = _build_panel(daily, config.assets, config.market_amount)
    T = len(panel.dates)
    if origins is None:
        origins = range(config.window_days - 1, T)
    origins = list(origins)
    out = {}
    for key in which:
        frames = []
        for j, asset in enumerate(config.assets):
            la = key == "liquidity_adjusted"
            series = panel.RL[:, j] if la else panel.R[:, j]
            frames.append(rolling_forecast(
                series, window=config.window_days, p_max=config.pmax, q_max=config.qmax,
                la_mode=la, beta=panel.B[:, j] if la else None, refit_every=config.refit_every,
                dates=panel.dates, asset=asset, origins=origins))
        out[key] = pd.concat(frames, ignore_index=True)
    return out


def _decision_range(panel: _Panel, config: BacktestConfig):
    T = len(panel.dates)
    lo = config.window_days - 1
    if config.start is not None:
        lo = max(lo, next((i for i, d in enumerate(panel.dates) if d >= config.start), T))
    hi = T - 2
    if config.end is not None:
        hi = min(hi, max((i for i, d in enumerate(panel.dates) if d <= config.end), default=-1) - 1)
    return lo, hi


def _market_returns(panel: _Panel, lo: int, t: int) -> np.ndarray:
    # weights are yesterday's raw amounts: no same-day information, and the
    # wash toggle cannot move lambda (so portfolios 5 and 7 ignore it)
    out = []
    for s in range(max(lo, 1), t + 1):
        a = panel.A_raw[s - 1]
        r = panel.R[s]
        if np.all(np.isfinite(a)) and np.all(np.isfinite(r)) and a.sum() > 0:
            out.append(float(a @ r / a.sum()))
    return np.array(out)


# --- main loop -------------------------------------------------------------

def run_backtest(config: BacktestConfig, daily, forecasts: dict | None = None,
                 realized_cov=None) -> BacktestLedger:
    """Run the rolling backtest.

    Parameters
    ----------
    daily : DataFrame or dict of DataFrames
        Daily records with ``asset, date, r_tt, r_lq_tt, beta_tt, amount_tt``
        (and ``amount_tt_raw`` when ``market_amount='raw'``).
    forecasts : dict, optional
        ``{"standard": df, "liquidity_adjusted": df}`` with
        ``asset, date, mu_hat`` rows dated by forecast origin. Computed when
        missing and portfolios 7 or 8 are requested.
    realized_cov : callable or mapping, optional
        ``date -> (n_risky, n_risky)`` day-level covariance, required when
        ``cov_mode='intraday'``.
    """
    universe = Universe.with_risk_free(config.assets, config.risk_free)
    panel = _build_panel(daily, config.assets, config.market_amount)
    ledger = BacktestLedger(config, universe)
    T = len(panel.dates)
    if T < config.window_days + 1:
        raise ValueError(f"need at least window_days + 1 = {config.window_days + 1} days, got {T}")
    if config.cov_mode == "intraday" and realized_cov is None:
        raise ValueError("cov_mode='intraday' requires realized_cov")
    lo_t, hi_t = _decision_range(panel, config)
    if lo_t > hi_t:
        raise ValueError("no out-of-sample decision days in range")

    forecasts = dict(forecasts or {})
    need = [k for pid, k in ((7, "standard"), (8, "liquidity_adjusted"))
            if pid in config.portfolios and k not in forecasts]
    if need:
        forecasts.update(compute_forecasts(daily, config, need, origins=range(lo_t, hi_t + 1)))
    mu_fc = {k: _forecast_matrix(v, panel.dates, config.assets) for k, v in forecasts.items()}

    get_cov = realized_cov.get if isinstance(realized_cov, dict) else realized_cov
    held = {pid: None for pid in config.portfolios}
    W = config.window_days

    for t in range(lo_t, hi_t + 1):
        day, nxt = panel.dates[t], panel.dates[t + 1]
        r_next = panel.R[t + 1]
        if not np.all(np.isfinite(r_next)):
            ledger.gaps.append((nxt, 0, "missing_realized"))
            continue
        if config.cov_mode == "outer":
            cov_next = np.outer(r_next, r_next)
        else:
            cov_next = get_cov(nxt)
            if cov_next is None:
                ledger.gaps.append((nxt, 0, "missing_realized_cov"))
                continue
        R_full = universe.embed(r_next)
        S_full = universe.embed_matrix(np.asarray(cov_next, dtype=float))

        win = slice(t - W + 1, t + 1)
        lam = None
        if any(p >= 5 for p in config.portfolios):
            try:
                lam, floored = risk_aversion(_market_returns(panel, t - W + 1, t), config.lambda_min)
                if floored:
                    ledger.flags.append((day, 0, "lambda_floored"))
            except PortfolioError as exc:
                ledger.flags.append((day, 0, f"lambda_unavailable:{exc}"))

        for pid in config.portfolios:
            try:
                w = _decide(pid, t, win, panel, universe, config, lam, mu_fc)
            except (PortfolioError, _Missing) as exc:
                w = None
                ledger.flags.append((day, pid, f"hold:{exc}"))
            if w is None:
                w = held[pid]
                if w is None:
                    w = universe.embed(np.zeros(len(config.assets)))
                    w[universe.risk_free_index] = 1.0
                    ledger.flags.append((day, pid, "initial_risk_free"))
            held[pid] = w
            for a, x in zip(universe.assets, w):
                ledger.weights.append((day, pid, a, float(x)))
            perf = realized_performance(w, R_full, S_full)
            ledger.performance.append((nxt, pid, perf.r_p, perf.var_p, perf.sd_p))
    return ledger


class _Missing(Exception):
    pass


def _require(x, what):
    if not np.all(np.isfinite(x)):
        raise _Missing(f"missing {what}")
    return x


def _decide(pid, t, win, panel, universe, config, lam, mu_fc):
    if pid <= 4:
        beta = _require(panel.B[t], "beta")
        amount = _require(panel.A[t], "amount")
        wv = benchmark_weights(_BENCHMARK_KIND[pid], universe, beta=beta, amount=amount)
        return wv.w
    if lam is None:
        raise _Missing("lambda")
    X = panel.R[win] if pid in (5, 7) else panel.RL[win]
    _require(X, "window returns")
    if pid in (5, 6):
        mu = X.mean(axis=0)
    else:
        key = "standard" if pid == 7 else "liquidity_adjusted"
        mu = _require(mu_fc[key][t], f"{key} forecast")
    cov = np.cov(X, rowvar=False, ddof=1).reshape(len(config.assets), len(config.assets))
    prob = MvProblem(universe.embed(mu), universe.embed_matrix(cov), lam,
                     cap_risky=config.cap, risk_free_index=universe.risk_free_index)
    return solve_mv(prob).w


# --- descriptive tables ----------------------------------------------------

def fewest_days_share(amounts, share: float) -> int:
    """Smallest number of highest-amount days whose total reaches ``share`` of all."""
    a = np.sort(np.asarray(amounts, dtype=float))[::-1]
    total = a.sum()
    if not total > 0:
        return 0
    cum = np.cumsum(a) / total
    return int(np.searchsorted(cum, share - 1e-12) + 1)


def _describe(x) -> dict:
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return {"count": 0}
    return {"count": int(x.size), "mean": float(x.mean()), "std": float(x.std(ddof=1)) if x.size > 1 else np.nan,
            "min": float(x.min()), "25%": float(np.quantile(x, 0.25)), "50%": float(np.median(x)),
            "75%": float(np.quantile(x, 0.75)), "max": float(x.max())}


def _table(columns: dict) -> pd.DataFrame:
    df = pd.DataFrame(columns)
    df.index.name = "stat"
    return df.reset_index()


def beta_stats(daily, beta_cap: float = DEFAULT_BETA_CAP,
               low: float = LOW_LIQUIDITY_THRESHOLD) -> pd.DataFrame:
    cols = {}
    for asset, df in sorted(_by_asset(daily).items()):
        b = df["beta_tt"].to_numpy(dtype=float)
        d = _describe(b)
        n = max(b.size, 1)
        capped = (df["beta_capped"].to_numpy(bool) if "beta_capped" in df else b >= beta_cap)
        extra = {"days_capped": int(capped.sum()), "days_ge_mean": int((b >= b.mean()).sum()),
                 "days_ge_1": int((b >= 1).sum()), "days_le_0.10": int((b <= low).sum())}
        for k, v in list(extra.items()):
            d[k] = v
            d[f"pct_{k}"] = v / n
        # share of the summed Beta carried by capped days
        d["beta_share_capped"] = float(b[capped].sum() / b.sum()) if b.sum() > 0 else np.nan
        cols[asset] = d
    return _table(cols)


def amount_stats(daily) -> pd.DataFrame:
    cols = {}
    for asset, df in sorted(_by_asset(daily).items()):
        a = df["amount_tt"].to_numpy(dtype=float)
        d = _describe(a)
        d["total"] = float(a.sum())
        for q in (0.25, 0.50, 0.75):
            k = fewest_days_share(a, q)
            d[f"highest_days_{int(q * 100)}%"] = k
            d[f"pct_days_{int(q * 100)}%"] = k / max(a.size, 1)
        if "amount_tt_raw" in df:
            ratio = a / df["amount_tt_raw"].to_numpy(dtype=float)
            for k, v in _describe(ratio).items():
                if k != "count":
                    d[f"treated_over_raw_{k}"] = v
        cols[asset] = d
    return _table(cols)


def variance_stats(daily) -> pd.DataFrame:
    cols = {}
    for asset, df in sorted(_by_asset(daily).items()):
        for col, tag in (("var_tt", "var"), ("var_lq_tt", "var_lq")):
            cols[f"{asset}:{tag}"] = _describe(df[col])
    return _table(cols)


def return_stats(daily) -> pd.DataFrame:
    cols = {}
    for asset, df in sorted(_by_asset(daily).items()):
        for col, tag in (("r_tt", "r"), ("r_lq_tt", "r_lq")):
            cols[f"{asset}:{tag}"] = _describe(df[col])
    return _table(cols)


def adf_rmse_table(daily, forecasts: dict | None = None, max_lag: int | None = None) -> pd.DataFrame:
    """ADF results on both return series with the out-of-sample forecast RMSE."""
    rows = []
    for asset, df in sorted(_by_asset(daily).items()):
        df = df.sort_values("date")
        for col, key in (("r_tt", "standard"), ("r_lq_tt", "liquidity_adjusted")):
            x = df[col].to_numpy(dtype=float)
            row = {"asset": asset, "series": col}
            try:
                res = adf_test(x, max_lag=max_lag)
                row.update(adf_statistic=res.statistic, p_value=res.p_value, used_lag=res.used_lag,
                           nobs=res.nobs, ic_best=res.icbest)
            except ValueError as exc:
                logger.warning("ADF %s %s: %s", asset, col, exc)
            row["rmse"] = np.nan
            row["n_forecasts"] = 0
            if forecasts and key in forecasts:
                err = _forecast_errors(forecasts[key], df, col, asset)
                if err.size:
                    row["rmse"] = rmse(err, np.zeros_like(err))
                    row["n_forecasts"] = int(err.size)
            rows.append(row)
    return pd.DataFrame(rows)


def _forecast_errors(fc, df, col, asset):
    fc = fc[fc["asset"] == asset]
    dates = list(df["date"])
    pos = {d: i for i, d in enumerate(dates)}
    x = df[col].to_numpy(dtype=float)
    err = []
    for d, mu in zip(fc["date"], fc["mu_hat"]):
        i = pos.get(d)
        if i is None or i + 1 >= len(dates) or not np.isfinite(mu) or not np.isfinite(x[i + 1]):
            continue
        err.append(mu - x[i + 1])
    return np.array(err)


def _by_asset(daily) -> dict:
    if isinstance(daily, dict):
        return daily
    return {a: g for a, g in daily.groupby("asset", sort=True)}


def histogram_data(daily, column: str, bins: int = 50) -> pd.DataFrame:
    rows = []
    for asset, df in sorted(_by_asset(daily).items()):
        x = df[column].to_numpy(dtype=float)
        x = x[np.isfinite(x)]
        if x.size == 0:
            continue
        counts, edges = np.histogram(x, bins=bins)
        for c, l, r in zip(counts, edges[:-1], edges[1:]):
            rows.append({"asset": asset, "variable": column, "bin_left": l, "bin_right": r, "count": int(c)})
    return pd.DataFrame(rows, columns=["asset", "variable", "bin_left", "bin_right", "count"])


def scatter_data(daily) -> pd.DataFrame:
    df = _as_frame(daily)
    cols = ["asset", "date", "r_tt", "var_tt", "r_lq_tt", "var_lq_tt", "beta_tt"]
    return df[cols].sort_values(["asset", "date"]).reset_index(drop=True)


def summarize(ledger: BacktestLedger | None, daily, forecasts: dict | None = None,
              max_lag: int | None = None) -> dict:
    """All report tables as ``{file_stem: DataFrame}``."""
    beta_cap = ledger.config.beta_cap if ledger is not None else DEFAULT_BETA_CAP
    out = {}
    if ledger is not None:
        out["summary"] = ledger.summary()
        out["equity_curves"] = ledger.equity_curves()
    if daily is not None:
        out["beta_stats"] = beta_stats(daily, beta_cap)
        out["amount_stats"] = amount_stats(daily)
        out["variance_stats"] = variance_stats(daily)
        out["return_stats"] = return_stats(daily)
        out["adf_rmse"] = adf_rmse_table(daily, forecasts, max_lag)
        out["hist_beta"] = histogram_data(daily, "beta_tt")
        out["hist_amount"] = histogram_data(daily, "amount_tt")
        out["scatter_r_sigma_beta"] = scatter_data(daily)
    return out


# --- persistence -----------------------------------------------------------

def _iso_frame(df: pd.DataFrame) -> pd.DataFrame:
    df = df.copy()
    for c in df.columns:
        if df[c].dtype == object and len(df) and isinstance(df[c].iloc[0], Date):
            df[c] = [d.isoformat() for d in df[c]]
    return df


def _write_csv(df: pd.DataFrame, path: Path):
    _iso_frame(df).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def library_versions() -> dict:
    import numba
    import scipy
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "pandas": pd.__version__, "numba": numba.__version__, "liquidity_lab": __version__}


def write_ledger(ledger: BacktestLedger, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(ledger.weights_frame(), out / "weights.csv")
    _write_csv(ledger.performance_frame(), out / "performance.csv")
    _write_csv(ledger.gaps_frame(), out / "gaps.csv")
    _write_csv(ledger.flags_frame(), out / "flags.csv")
    with open(out / "ledger.json", "w") as fh:
        json.dump({"config": ledger.config.to_dict(), "universe": list(ledger.universe.assets)},
                  fh, indent=2, sort_keys=True)
    return out


def read_ledger(ledger_dir) -> BacktestLedger:
    d = Path(ledger_dir)
    meta = json.loads((d / "ledger.json").read_text())
    cfg = dict(meta["config"])
    for k in ("start", "end"):
        cfg[k] = Date.fromisoformat(cfg[k]) if cfg[k] else None
    config = BacktestConfig(**cfg)
    ledger = BacktestLedger(config, Universe(tuple(meta["universe"]), 0))
    perf = pd.read_csv(d / "performance.csv", dtype={"date": str}, float_precision="round_trip")
    ledger.performance = [(Date.fromisoformat(r.date), int(r.portfolio_id), float(r.r_p), float(r.var_p),
                           float(r.sd_p)) for r in perf.itertuples(index=False)]
    w = pd.read_csv(d / "weights.csv", dtype={"date": str, "asset": str}, float_precision="round_trip")
    ledger.weights = [(Date.fromisoformat(r.date), int(r.portfolio_id), r.asset, float(r.weight))
                      for r in w.itertuples(index=False)]
    return ledger


def write_report(bundle: dict, out_dir, manifest_extra: dict | None = None, fmt: str = "csv") -> Path:
    """Write report tables and a ``manifest.json`` with file digests."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, df in bundle.items():
        if fmt == "json":
            path = out / f"{name}.json"
            path.write_text(_iso_frame(df).to_json(orient="records", double_precision=15, indent=1))
        else:
            path = out / f"{name}.csv"
            _write_csv(df, path)
        files[path.name] = sha256_file(path)
    manifest = {"versions": library_versions(), "files": files}
    manifest.update(manifest_extra or {})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))
    return out
