"""Stage runner: ingest -> liquidity -> fit -> backtest -> report.

Each stage writes a ``.stage.json`` record holding a hash of everything it
depends on (upstream hash plus its own settings). A stage whose record
matches and whose files are intact is skipped. A failing stage leaves the
outputs produced so far in place next to a ``FAILED.json`` marker.
"""
from __future__ import annotations

import hashlib
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import market_data as md
from .backtest import (BacktestConfig, compute_forecasts, library_versions, read_ledger, run_backtest,
                       sha256_file, summarize, write_ledger, write_report)
from .config import RunConfig
from .liquidity import compute_daily_records, intraday_covariance, read_daily_csv, write_daily_csv
from .arga import read_forecast_csv, write_forecast_csv

logger = logging.getLogger(__name__)

STAGES = ("ingest", "liquidity", "fit", "backtest", "report")
STAGE_RECORD = ".stage.json"
FAILURE_MARKER = "FAILED.json"
COV_FILE = "intraday_cov.csv"


class StageError(RuntimeError):
    pass


@dataclass
class PipelineResult:
    status: int
    out_dir: Path
    ran: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failed: str | None = None
    error: str | None = None


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def _stage_ok(d: Path, h: str) -> bool:
    rec = d / STAGE_RECORD
    if not rec.exists():
        return False
    try:
        meta = json.loads(rec.read_text())
    except json.JSONDecodeError:
        return False
    if meta.get("hash") != h:
        return False
    for name, sha in meta.get("files", {}).items():
        p = d / name
        if not p.exists() or sha256_file(p) != sha:
            return False
    return True


def _record_stage(d: Path, name: str, h: str) -> dict:
    files = {str(p.relative_to(d)): sha256_file(p) for p in sorted(d.rglob("*"))
             if p.is_file() and p.name != STAGE_RECORD}
    rec = {"stage": name, "hash": h, "files": files}
    (d / STAGE_RECORD).write_text(json.dumps(rec, indent=2, sort_keys=True))
    return rec


def _clear(d: Path):
    if d.exists():
        for p in sorted(d.rglob("*"), reverse=True):
            if p.is_file():
                p.unlink()
    d.mkdir(parents=True, exist_ok=True)


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# --- stage bodies ----------------------------------------------------------

def ingest_asset(ticks_path, asset, policy: md.WashPolicy, out_dir) -> dict:
    """Ticks -> treated minute bars and daily panels for one asset."""
    out = Path(out_dir)
    res = md.ingest_ticks(ticks_path, asset)
    bars = md.aggregate_minutes(res.ticks)
    bars = md.apply_wash_treatment(bars, policy)
    panels, dropped = md.build_day_panels(bars)
    if not panels:
        raise StageError(f"{asset}: no complete days in {ticks_path}")
    keep = bars["date"].isin([p.date for p in panels])
    md.write_minute_csv(bars[keep], out / f"{asset}_minutes.csv")
    md.write_panel_csv(panels, out / f"{asset}_panel.csv")
    return {"asset": asset, "days": len(panels), "dropped": len(dropped),
            "skipped_rows": res.skipped, "malformed_rows": res.malformed}


def _ingest_job(args):
    return ingest_asset(*args)


def liquidity_asset(minutes_path, seed, beta_cap, out_dir):
    bars = md.read_minute_csv(minutes_path)
    panels, _ = md.build_day_panels(bars)
    recs = compute_daily_records(panels, seed, beta_cap)
    asset = panels[0].asset
    write_daily_csv(recs, Path(out_dir) / f"{asset}_daily.csv")
    return asset


def _liquidity_job(args):
    return liquidity_asset(*args)


def intraday_cov_table(minute_paths: dict) -> pd.DataFrame:
    """Long table ``date, asset_i, asset_j, cov`` of day-level minute covariances."""
    assets = list(minute_paths)
    by_asset = {}
    for a in assets:
        bars = md.read_minute_csv(minute_paths[a])
        by_asset[a] = {d: g.sort_values("minute")["ret"].to_numpy(float) for d, g in bars.groupby("date")}
    days = sorted(set.intersection(*(set(v) for v in by_asset.values())))
    rows = []
    for d in days:
        block = np.vstack([by_asset[a][d] for a in assets])
        cov = intraday_covariance(block)
        for i, ai in enumerate(assets):
            for j, aj in enumerate(assets):
                rows.append((d.isoformat(), ai, aj, cov[i, j]))
    return pd.DataFrame(rows, columns=["date", "asset_i", "asset_j", "cov"])


def read_cov_table(path, assets) -> dict:
    df = pd.read_csv(path, dtype={"date": str, "asset_i": str, "asset_j": str}, float_precision="round_trip")
    from datetime import date as Date
    out = {}
    idx = {a: k for k, a in enumerate(assets)}
    for d, g in df.groupby("date"):
        m = np.full((len(assets), len(assets)), np.nan)
        for ai, aj, c in zip(g["asset_i"], g["asset_j"], g["cov"]):
            if ai in idx and aj in idx:
                m[idx[ai], idx[aj]] = c
        if np.all(np.isfinite(m)):
            out[Date.fromisoformat(d)] = m
    return out


def load_daily(daily_dir, assets) -> pd.DataFrame:
    frames = []
    for a in assets:
        p = Path(daily_dir) / f"{a}_daily.csv"
        if not p.exists():
            raise StageError(f"missing daily records for {a}: {p}")
        frames.append(read_daily_csv(p))
    return pd.concat(frames, ignore_index=True)


def backtest_config(cfg: RunConfig) -> BacktestConfig:
    return BacktestConfig(
        assets=cfg.assets, window_days=cfg.window_days, portfolios=cfg.portfolios,
        wash="on" if cfg.wash.enabled else "off", seed=cfg.seed, risk_free=cfg.risk_free,
        start=cfg.start, end=cfg.end, cap=cfg.cap, lambda_min=cfg.lambda_min,
        annualization=cfg.annualization, cov_mode=cfg.cov_mode, market_amount=cfg.market_amount,
        pmax=cfg.pmax, qmax=cfg.qmax, refit_every=cfg.refit_every, beta_cap=cfg.beta_cap)


def _decision_origins(daily: pd.DataFrame, bcfg: BacktestConfig):
    from .backtest import _build_panel, _decision_range
    panel = _build_panel(daily, bcfg.assets, bcfg.market_amount)
    lo, hi = _decision_range(panel, bcfg)
    return range(lo, hi + 1)


# --- runner ----------------------------------------------------------------

def run_pipeline(cfg: RunConfig, out_dir=None, until: str = "report", jobs: int = 1) -> PipelineResult:
    """Run every stage up to ``until``; returns a :class:`PipelineResult`."""
    cfg.validate()
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / FAILURE_MARKER
    result = PipelineResult(status=0, out_dir=out)
    dirs = {s: out / d for s, d in zip(STAGES, ("minutes", "daily", "forecasts", "ledger", "report"))}
    bcfg = backtest_config(cfg)
    hashes = {}
    stage = None
    try:
        for stage in STAGES[:STAGES.index(until) + 1]:
            d = dirs[stage]
            h = _stage_hash(stage, cfg, hashes)
            hashes[stage] = h
            if _stage_ok(d, h):
                logger.info("stage %s up to date", stage)
                result.skipped.append(stage)
                continue
            logger.info("stage %s running", stage)
            _clear(d)
            _run_stage(stage, cfg, bcfg, dirs, jobs, hashes)
            _record_stage(d, stage, h)
            result.ran.append(stage)
    except Exception as exc:
        logger.error("stage %s failed: %s", stage, exc)
        marker.write_text(json.dumps({"stage": stage, "error": repr(exc),
                                      "traceback": traceback.format_exc()}, indent=2))
        result.status, result.failed, result.error = 1, stage, repr(exc)
        return result
    if marker.exists():
        marker.unlink()
    _write_manifest(out, cfg, hashes, dirs)
    return result


def _stage_hash(stage, cfg: RunConfig, hashes) -> str:
    if stage == "ingest":
        inputs = {a: sha256_file(cfg.ticks[a]) for a in cfg.assets}
        return _digest({"inputs": inputs, "wash": cfg.semantic_dict()["wash"]})
    if stage == "liquidity":
        return _digest({"up": hashes["ingest"], "seed": cfg.seed, "beta_cap": cfg.beta_cap})
    if stage == "fit":
        keys = ("window_days", "pmax", "qmax", "refit_every", "start", "end", "assets", "portfolios",
                "market_amount")
        sd = cfg.semantic_dict()
        return _digest({"up": hashes["liquidity"], **{k: sd[k] for k in keys}})
    if stage == "backtest":
        keys = ("risk_free", "cap", "lambda_min", "annualization", "cov_mode", "seed")
        sd = cfg.semantic_dict()
        return _digest({"up": hashes["fit"], **{k: sd[k] for k in keys}})
    if stage == "report":
        return _digest({"up": hashes["backtest"], "formats": list(cfg.formats)})
    raise ValueError(stage)


def _run_stage(stage, cfg, bcfg, dirs, jobs, hashes):
    if stage == "ingest":
        items = [(cfg.ticks[a], a, cfg.wash, dirs["ingest"]) for a in cfg.assets]
        info = _map(_ingest_job, items, jobs)
        pd.DataFrame(info).to_csv(dirs["ingest"] / "ingest_report.csv", index=False, lineterminator="\n")
    elif stage == "liquidity":
        mins = {a: dirs["ingest"] / f"{a}_minutes.csv" for a in cfg.assets}
        items = [(mins[a], cfg.seed, cfg.beta_cap, dirs["liquidity"]) for a in cfg.assets]
        _map(_liquidity_job, items, jobs)
        if cfg.cov_mode == "intraday":
            intraday_cov_table(mins).to_csv(dirs["liquidity"] / COV_FILE, index=False,
                                            float_format="%.17g", lineterminator="\n")
        for a in cfg.assets:
            p = dirs["ingest"] / f"{a}_panel.csv"
            (dirs["liquidity"] / p.name).write_bytes(p.read_bytes())
    elif stage == "fit":
        daily = load_daily(dirs["liquidity"], cfg.assets)
        which = [k for pid, k in ((7, "standard"), (8, "liquidity_adjusted")) if pid in cfg.portfolios]
        if not which:
            which = ["standard", "liquidity_adjusted"]
        fcs = compute_forecasts(daily, bcfg, which, origins=_decision_origins(daily, bcfg))
        for k, df in fcs.items():
            write_forecast_csv(df, dirs["fit"] / f"forecast_{k}.csv")
    elif stage == "backtest":
        daily = load_daily(dirs["liquidity"], cfg.assets)
        fcs = _read_forecasts(dirs["fit"])
        cov = None
        if cfg.cov_mode == "intraday":
            cov = read_cov_table(dirs["liquidity"] / COV_FILE, cfg.assets)
        ledger = run_backtest(bcfg, daily, fcs, cov)
        write_ledger(ledger, dirs["backtest"])
    elif stage == "report":
        daily = load_daily(dirs["liquidity"], cfg.assets)
        ledger = read_ledger(dirs["backtest"])
        fcs = _read_forecasts(dirs["fit"])
        bundle = summarize(ledger, daily, fcs)
        for fmt in cfg.formats:
            write_report(bundle, dirs["report"] / fmt if len(cfg.formats) > 1 else dirs["report"],
                         {"config_hash": cfg.hash(), "seed": cfg.seed, "stage_hash": hashes["report"]}, fmt)


def _read_forecasts(d: Path) -> dict:
    out = {}
    for k in ("standard", "liquidity_adjusted"):
        p = d / f"forecast_{k}.csv"
        if p.exists():
            out[k] = read_forecast_csv(p)
    return out


def _write_manifest(out: Path, cfg: RunConfig, hashes, dirs):
    files = {}
    for s, d in dirs.items():
        if d.exists():
            for p in sorted(d.rglob("*")):
                if p.is_file() and p.name != STAGE_RECORD:
                    files[str(p.relative_to(out))] = sha256_file(p)
    manifest = {"config_hash": cfg.hash(), "seed": cfg.seed, "stages": hashes,
                "versions": library_versions(), "files": files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
