"""Run configuration: an INI file with a ``[run]`` section and ``[asset.<id>]`` sections.

Example::

    [run]
    seed = 7
    assets = BTC, ETH
    ticks_dir = ticks
    output_dir = out
    window_days = 365

    [asset.BTC]
    ticks = ticks/BTCUSDT_trades.csv

Relative paths resolve against the directory holding the file. See
``docs/config.md`` for every key.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

from .liquidity import DEFAULT_BETA_CAP
from .market_data import WashPolicy
from .portfolio import ANNUALIZATION, DEFAULT_CAP, DEFAULT_LAMBDA_MIN


class ConfigError(ValueError):
    pass


# fields that never change any computed number
_NON_SEMANTIC = {"output_dir", "config_path"}


@dataclass
class RunConfig:
    seed: int
    assets: tuple
    ticks: dict
    output_dir: Path
    risk_free: str = "USDT"
    wash: WashPolicy = field(default_factory=WashPolicy)
    beta_cap: float = DEFAULT_BETA_CAP
    window_days: int = 365
    pmax: int = 4
    qmax: int = 4
    refit_every: int = 1
    lambda_min: float = DEFAULT_LAMBDA_MIN
    cap: float = DEFAULT_CAP
    annualization: int = ANNUALIZATION
    portfolios: tuple = tuple(range(1, 9))
    cov_mode: str = "intraday"
    market_amount: str = "treated"
    start: Date | None = None
    end: Date | None = None
    formats: tuple = ("csv",)
    config_path: Path | None = None

    def validate(self) -> "RunConfig":
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if not self.assets:
            raise ConfigError("at least one asset is required")
        for a in self.assets:
            p = self.ticks.get(a)
            if p is None:
                raise ConfigError(f"no tick file configured for asset {a!r}")
            if not Path(p).exists():
                raise ConfigError(f"tick file for {a!r} does not exist: {p}")
        if self.window_days < 30:
            raise ConfigError("window_days must be at least 30")
        if {7, 8} & set(self.portfolios) and self.window_days - self.pmax < 50:
            raise ConfigError("portfolios 7/8 need window_days - pmax >= 50 for the volatility fit")
        if not set(self.portfolios) <= set(range(1, 9)):
            raise ConfigError("portfolios must be drawn from 1..8")
        if self.cov_mode not in ("intraday", "outer"):
            raise ConfigError(f"unknown cov_mode {self.cov_mode!r}")
        if self.market_amount not in ("treated", "raw"):
            raise ConfigError(f"unknown market_amount {self.market_amount!r}")
        if not set(self.formats) <= {"csv", "json"}:
            raise ConfigError("formats must be csv and/or json")
        return self

    def semantic_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            if f.name in _NON_SEMANTIC:
                continue
            v = getattr(self, f.name)
            if isinstance(v, WashPolicy):
                v = dataclasses.asdict(v)
            elif isinstance(v, Date):
                v = v.isoformat()
            elif isinstance(v, dict):
                v = {k: str(x) for k, x in sorted(v.items())}
            elif isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, Path):
                v = str(v)
            d[f.name] = v
        return d

    def hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _split(v: str) -> tuple:
    return tuple(x.strip() for x in v.replace(";", ",").split(",") if x.strip())


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("on", "true", "yes", "1"):
        return True
    if s in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _date(v: str):
    v = v.strip()
    return Date.fromisoformat(v) if v else None


_SCOPES = {"full": "full_sample", "full_sample": "full_sample", "day": "per_day", "per_day": "per_day"}


def load_config(path, seed_override: int | None = None, validate: bool = True) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read(path)
    if "run" not in cp:
        raise ConfigError("config needs a [run] section")
    run = cp["run"]
    base = path.parent

    def rel(p):
        p = Path(p)
        return p if p.is_absolute() else (base / p)

    known = {"seed", "assets", "risk_free", "ticks_dir", "output_dir", "wash", "q3_factor", "q4_factor",
             "quantile_scope", "beta_cap", "window_days", "pmax", "qmax", "refit_every", "lambda_min",
             "cap", "annualization", "portfolios", "cov_mode", "market_amount", "start", "end", "formats"}
    unknown = set(run) - known
    if unknown:
        raise ConfigError(f"unknown [run] keys: {sorted(unknown)}")

    seed = seed_override if seed_override is not None else run.get("seed")
    if seed is None or str(seed).strip() == "":
        raise ConfigError("seed is mandatory")
    try:
        seed = int(seed)
    except ValueError as exc:
        raise ConfigError(f"seed must be an integer: {seed!r}") from exc
    assets = _split(run.get("assets", ""))
    ticks = {}
    ticks_dir = run.get("ticks_dir")
    for a in assets:
        sec = f"asset.{a}"
        if sec in cp and "ticks" in cp[sec]:
            ticks[a] = rel(cp[sec]["ticks"])
        elif ticks_dir:
            ticks[a] = rel(ticks_dir) / f"{a}_ticks.csv"
    extra_sections = [s for s in cp.sections() if s.startswith("asset.") and s[6:] not in assets]
    if extra_sections:
        raise ConfigError(f"asset sections for unlisted assets: {extra_sections}")

    try:
        wash = WashPolicy(enabled=_bool(run.get("wash", "on")),
                          q3_factor=run.getfloat("q3_factor", 0.5),
                          q4_factor=run.getfloat("q4_factor", 0.25),
                          quantile_scope=_SCOPES.get(run.get("quantile_scope", "full_sample"), "?"))
        cfg = RunConfig(
            seed=seed, assets=assets, ticks=ticks,
            output_dir=rel(run.get("output_dir", "out")),
            risk_free=run.get("risk_free", "USDT"), wash=wash,
            beta_cap=run.getfloat("beta_cap", DEFAULT_BETA_CAP),
            window_days=run.getint("window_days", 365),
            pmax=run.getint("pmax", 4), qmax=run.getint("qmax", 4),
            refit_every=run.getint("refit_every", 1),
            lambda_min=run.getfloat("lambda_min", DEFAULT_LAMBDA_MIN),
            cap=run.getfloat("cap", DEFAULT_CAP),
            annualization=run.getint("annualization", ANNUALIZATION),
            portfolios=tuple(int(x) for x in _split(run.get("portfolios", "1,2,3,4,5,6,7,8"))),
            cov_mode=run.get("cov_mode", "intraday"),
            market_amount=run.get("market_amount", "treated"),
            start=_date(run.get("start", "")), end=_date(run.get("end", "")),
            formats=_split(run.get("formats", "csv")),
            config_path=path,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg.validate() if validate else cfg


def write_config(cfg: RunConfig, path) -> Path:
    """Serialise ``cfg`` to INI with absolute paths."""
    cp = configparser.ConfigParser()
    w = cfg.wash
    cp["run"] = {
        "seed": str(cfg.seed), "assets": ", ".join(cfg.assets), "risk_free": cfg.risk_free,
        "output_dir": str(Path(cfg.output_dir).resolve()),
        "wash": "on" if w.enabled else "off", "q3_factor": repr(w.q3_factor),
        "q4_factor": repr(w.q4_factor), "quantile_scope": w.quantile_scope,
        "beta_cap": repr(cfg.beta_cap), "window_days": str(cfg.window_days),
        "pmax": str(cfg.pmax), "qmax": str(cfg.qmax), "refit_every": str(cfg.refit_every),
        "lambda_min": repr(cfg.lambda_min), "cap": repr(cfg.cap),
        "annualization": str(cfg.annualization),
        "portfolios": ", ".join(map(str, cfg.portfolios)), "cov_mode": cfg.cov_mode,
        "market_amount": cfg.market_amount,
        "start": cfg.start.isoformat() if cfg.start else "",
        "end": cfg.end.isoformat() if cfg.end else "",
        "formats": ", ".join(cfg.formats),
    }
    for a in cfg.assets:
        cp[f"asset.{a}"] = {"ticks": str(Path(cfg.ticks[a]).resolve())}
    path = Path(path)
    with open(path, "w") as fh:
        cp.write(fh)
    return path
