"""``liquidity-lab`` command line interface."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import date as Date
from pathlib import Path

import pandas as pd

logger = logging.getLogger("liquidity_lab")


def _setup_logging(level: str):
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _on_off(v: str) -> bool:
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on|off")
    return v == "on"


def _global(p):
    g = p.add_argument_group("global options")
    g.add_argument("--config", type=Path, help="run configuration (INI)")
    g.add_argument("--seed", type=int, help="master seed (overrides the config)")
    g.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    g.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liquidity-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ticks -> treated minute bars and daily panels")
    _global(p)
    p.add_argument("--ticks", type=Path, required=True)
    p.add_argument("--asset", required=True)
    p.add_argument("--wash", type=_on_off, default=True)
    p.add_argument("--q3", type=float, default=0.5)
    p.add_argument("--q4", type=float, default=0.25)
    p.add_argument("--scope", choices=["full", "day"], default="full")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("compute-liquidity", help="minute bars -> daily liquidity records")
    _global(p)
    p.add_argument("--minutes", type=Path, required=True, help="directory of *_minutes.csv")
    p.add_argument("--beta-cap", type=float, default=10.0)
    p.add_argument("--no-cov", action="store_true", help="skip the intraday covariance table")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("fit", help="rolling ARMA-GARCH/EGARCH one-step forecasts")
    _global(p)
    p.add_argument("--daily", type=Path, required=True)
    p.add_argument("--series", choices=["r", "r_lq"], default="r")
    p.add_argument("--la", type=_on_off, default=False)
    p.add_argument("--window", type=int, default=365)
    p.add_argument("--pmax", type=int, default=4)
    p.add_argument("--qmax", type=int, default=4)
    p.add_argument("--refit-every", type=int, default=1)
    p.add_argument("--assets", help="comma-separated subset")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("backtest", help="run the pipeline through the backtest")
    _global(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("report", help="report tables from a ledger directory")
    _global(p)
    p.add_argument("--ledger", type=Path, required=True)
    p.add_argument("--daily", type=Path, help="daily records directory for descriptive tables")
    p.add_argument("--forecasts", type=Path, help="forecast directory for the RMSE panel")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("synth", help="write synthetic tick files or daily records")
    _global(p)
    p.add_argument("--scenario", choices=["constant", "regime", "wash", "daily"], default="regime")
    p.add_argument("--assets", default="AAA")
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--start", type=Date.fromisoformat, default=Date(2021, 1, 1))
    p.add_argument("--p-high", type=float, default=0.03)
    p.add_argument("--wash-sigma", type=float, default=1.5)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("run", help="run the full pipeline from a config")
    _global(p)
    p.add_argument("--out", type=Path, help="output directory (default: config output_dir)")
    p.add_argument("--until", choices=["ingest", "liquidity", "fit", "backtest", "report"], default="report")
    return parser


def _need_seed(args, cfg=None) -> int:
    if args.seed is not None:
        return args.seed
    if cfg is not None:
        return cfg.seed
    raise SystemExit("error: --seed is required (no entropy default)")


def cmd_ingest(args) -> int:
    from .market_data import IngestError, WashPolicy
    from .pipeline import ingest_asset
    policy = WashPolicy(enabled=args.wash, q3_factor=args.q3, q4_factor=args.q4,
                        quantile_scope="full_sample" if args.scope == "full" else "per_day")
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        info = ingest_asset(args.ticks, args.asset, policy, args.out)
    except IngestError as exc:
        logger.error("%s", exc)
        return 2
    print(json.dumps(info))
    return 0


def cmd_compute_liquidity(args) -> int:
    from .pipeline import COV_FILE, intraday_cov_table, liquidity_asset
    cfg = _load_cfg(args)
    seed = _need_seed(args, cfg)
    paths = sorted(Path(args.minutes).glob("*_minutes.csv"))
    if not paths:
        logger.error("no *_minutes.csv files in %s", args.minutes)
        return 2
    args.out.mkdir(parents=True, exist_ok=True)
    assets = [liquidity_asset(p, seed, args.beta_cap, args.out) for p in paths]
    if not args.no_cov:
        mins = {a: p for a, p in zip(assets, paths)}
        intraday_cov_table(mins).to_csv(args.out / COV_FILE, index=False, float_format="%.17g",
                                        lineterminator="\n")
    print(json.dumps({"assets": assets, "out": str(args.out)}))
    return 0


def cmd_fit(args) -> int:
    from .arga import rolling_forecast, write_forecast_csv
    from .liquidity import read_daily_dir
    daily = read_daily_dir(args.daily)
    if not daily:
        logger.error("no *_daily.csv files in %s", args.daily)
        return 2
    assets = args.assets.split(",") if args.assets else sorted(daily)
    col = "r_tt" if args.series == "r" else "r_lq_tt"
    frames = []
    for a in assets:
        df = daily[a].sort_values("date")
        frames.append(rolling_forecast(
            df[col].to_numpy(float), window=args.window, p_max=args.pmax, q_max=args.qmax,
            la_mode=args.la, beta=df["beta_tt"].to_numpy(float) if args.la else None,
            refit_every=args.refit_every, dates=list(df["date"]), asset=a))
    args.out.mkdir(parents=True, exist_ok=True)
    name = f"forecast_{args.series}_la-{'on' if args.la else 'off'}.csv"
    write_forecast_csv(pd.concat(frames, ignore_index=True), args.out / name)
    print(json.dumps({"file": str(args.out / name)}))
    return 0


def _load_cfg(args, required=False):
    from .config import ConfigError, load_config
    if args.config is None:
        if required:
            raise SystemExit("error: --config is required")
        return None
    try:
        return load_config(args.config, seed_override=args.seed)
    except ConfigError as exc:
        raise SystemExit(f"config error: {exc}")


def _run(args, until, out):
    from .pipeline import run_pipeline
    cfg = _load_cfg(args, required=True)
    res = run_pipeline(cfg, out, until=until, jobs=args.jobs)
    print(json.dumps({"status": res.status, "out": str(res.out_dir), "ran": res.ran,
                      "skipped": res.skipped, "failed": res.failed}))
    return res.status


def cmd_backtest(args) -> int:
    return _run(args, "backtest", args.out)


def cmd_run(args) -> int:
    return _run(args, args.until, args.out)


def cmd_report(args) -> int:
    from .backtest import read_ledger, summarize, write_report
    from .pipeline import _read_forecasts, load_daily
    ledger = read_ledger(args.ledger)
    daily = load_daily(args.daily, ledger.config.assets) if args.daily else None
    fcs = _read_forecasts(args.forecasts) if args.forecasts else None
    bundle = summarize(ledger, daily, fcs)
    out = args.out or args.ledger / "report"
    write_report(bundle, out, {"seed": ledger.config.seed}, fmt=args.format)
    if args.format == "json":
        print(bundle["summary"].to_json(orient="records", double_precision=15))
    else:
        print(bundle["summary"].to_csv(index=False), end="")
    return 0


def cmd_synth(args) -> int:
    from .synth import DailyMarket, ScenarioError, TickScenario, simulate_daily_market, write_scenario
    seed = _need_seed(args, _load_cfg(args))
    assets = tuple(a.strip() for a in args.assets.split(",") if a.strip())
    try:
        if args.scenario == "daily":
            from .liquidity import write_daily_csv
            daily = simulate_daily_market(DailyMarket(assets=assets, n_days=args.days, start=args.start), seed)
            args.out.mkdir(parents=True, exist_ok=True)
            paths = []
            for a, g in daily.groupby("asset", sort=True):
                p = args.out / f"{a}_daily.csv"
                write_daily_csv(g, p)
                paths.append(p)
        else:
            scn = TickScenario(kind=args.scenario, assets=assets, n_days=args.days, start=args.start,
                               p_high=args.p_high, wash_sigma=args.wash_sigma)
            paths = write_scenario(scn, seed, args.out)
    except ScenarioError as exc:
        logger.error("%s", exc)
        return 2
    print(json.dumps({"files": [str(p) for p in paths]}))
    return 0


COMMANDS = {"ingest": cmd_ingest, "compute-liquidity": cmd_compute_liquidity, "fit": cmd_fit,
            "backtest": cmd_backtest, "report": cmd_report, "synth": cmd_synth, "run": cmd_run}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.log_level)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
