"""Two-stage ARMA-GARCH/EGARCH fitting, forecasting and rolling evaluation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date as Date

import numpy as np
import pandas as pd

from .arma import ArmaFitError, ArmaSpec, arma_filter, arma_forecast, fit_arma
from .volatility import (EgarchParams, GarchParams, VolatilityFitError, VolFit, filter_volatility,
                         fit_volatility)

logger = logging.getLogger(__name__)

MIN_VOL_OBS = 50
FORECAST_CSV_COLUMNS = ["asset", "date", "mu_hat", "sigma2_hat", "model", "p", "q",
                        "vol_spec", "la_mode", "aic"]


@dataclass
class ModelFit:
    arma: ArmaSpec
    vol: GarchParams | EgarchParams
    loglik: float
    aic: float
    residuals: np.ndarray
    cond_sigma: np.ndarray
    la_mode: bool = False
    beta_series: np.ndarray | None = None
    arma_start: int = 0
    vol_fit: VolFit | None = field(default=None, repr=False)

    @property
    def n_params(self) -> int:
        return self.arma.n_params + self.vol.n_params


def fit_arga(series, p_max: int = 4, q_max: int = 4, la_mode: bool = False, beta=None) -> ModelFit:
    """ARMA by CSS over the (p, q) grid, then GARCH vs EGARCH on its residuals.

    In ``la_mode`` the volatility stage uses the liquidity-adjusted
    recursions driven by ``beta`` (aligned with ``series``). Residuals
    before the conditioning point are zero and are excluded from the
    volatility stage.
    """
    y = np.asarray(series, dtype=float)
    spec, resid = fit_arma(y, p_max, q_max)
    start = p_max
    e = resid[start:]
    b = None
    if la_mode:
        if beta is None:
            raise ValueError("la_mode requires beta")
        b = np.asarray(beta, dtype=float)[start:]
    vf = fit_volatility(e, "liquidity_adjusted" if la_mode else "standard", b)
    sigma = np.full(y.size, np.nan)
    sigma[start:] = np.sqrt(vf.sigma2)
    k = spec.n_params + vf.params.n_params
    loglik = vf.loglik
    return ModelFit(arma=spec, vol=vf.params, loglik=loglik, aic=2 * k - 2 * loglik,
                    residuals=resid, cond_sigma=sigma, la_mode=la_mode,
                    beta_series=None if beta is None else np.asarray(beta, dtype=float),
                    arma_start=start, vol_fit=vf)


def forecast_one_step(fit: ModelFit, history, beta=None):
    """``(mu_hat, sigma2_hat)`` for the period after ``history``.

    ``history`` is filtered with the fitted parameters, so it may extend
    past the estimation sample. ``beta`` must align with ``history`` in
    liquidity-adjusted mode.
    """
    y = np.asarray(history, dtype=float)
    start = fit.arma_start
    resid = arma_filter(y, fit.arma, start=start)
    mu = arma_forecast(y, resid, fit.arma)
    b = None
    if fit.la_mode:
        b = fit.beta_series if beta is None else beta
        b = np.asarray(b, dtype=float)[start:]
    _, s2 = filter_volatility(fit.vol_fit, resid[start:], b)
    return mu, s2


def rmse(forecasts, realized) -> float:
    f = np.asarray(forecasts, dtype=float)
    r = np.asarray(realized, dtype=float)
    if f.shape != r.shape:
        raise ValueError(f"length mismatch: {f.shape} vs {r.shape}")
    if f.size == 0:
        raise ValueError("empty input")
    return float(np.sqrt(np.mean((f - r) ** 2)))


@dataclass
class ScalingReport:
    constant_beta: bool
    max_rel_eps: float
    max_rel_sigma: float
    tolerance: float = 1e-6

    @property
    def passed(self) -> bool:
        return (not self.constant_beta) or (self.max_rel_eps <= self.tolerance
                                            and self.max_rel_sigma <= self.tolerance)


def _max_rel(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mask = np.isfinite(a) & np.isfinite(b) & (np.abs(b) > 0)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(a[mask] - b[mask]) / np.abs(b[mask])))


def scaling_identity_check(fit_std: ModelFit, fit_la: ModelFit, beta, tolerance=1e-6) -> ScalingReport:
    """Compare LA residuals/volatilities with the standard ones divided by Beta.

    Raises ``AssertionError`` when Beta is constant and the deviation
    exceeds ``tolerance``; otherwise the deviations are only reported.
    """
    beta = np.asarray(beta, dtype=float)
    start = fit_std.arma_start
    sl = slice(start, None)
    constant = bool(np.ptp(beta) == 0)
    rep = ScalingReport(
        constant_beta=constant,
        max_rel_eps=_max_rel(fit_la.residuals[sl], fit_std.residuals[sl] / beta[sl]),
        max_rel_sigma=_max_rel(fit_la.cond_sigma[sl], fit_std.cond_sigma[sl] / beta[sl]),
        tolerance=tolerance,
    )
    if constant and not rep.passed:
        raise AssertionError(f"scaling identity violated at constant beta: {rep}")
    return rep


def rolling_forecast(series, window: int = 365, p_max: int = 4, q_max: int = 4,
                     la_mode: bool = False, beta=None, refit_every: int = 1,
                     dates=None, asset: str = "", origins=None) -> pd.DataFrame:
    """One-step forecasts from trailing windows.

    The row for origin ``t`` is the forecast made at the end of day ``t``
    for day ``t + 1`` using observations ``t - window + 1 .. t``. Origins
    default to every ``t >= window - 1``. Parameters are re-estimated every
    ``refit_every`` origins and carried forward in between; windows with
    missing values yield NaN forecasts.
    """
    y = np.asarray(series, dtype=float)
    n = y.size
    if window - p_max < MIN_VOL_OBS:
        raise ValueError(f"window must leave at least {MIN_VOL_OBS} residuals after p_max={p_max}")
    if la_mode:
        if beta is None:
            raise ValueError("la_mode requires beta")
        beta = np.asarray(beta, dtype=float)
    dates = list(range(n)) if dates is None else list(dates)
    n_failed = 0
    if origins is None:
        origins = range(window - 1, n)
    rows = []
    fit = None
    for k, t in enumerate(origins):
        if t < window - 1 or t >= n:
            raise ValueError(f"origin {t} outside the usable range")
        lo = t - window + 1
        hist = y[lo:t + 1]
        b = beta[lo:t + 1] if la_mode else None
        if not np.all(np.isfinite(hist)) or (la_mode and not np.all(b > 0)):
            rows.append(_forecast_row(asset, dates[t], np.nan, np.nan, None, la_mode))
            fit = None
            continue
        if fit is None or k % refit_every == 0:
            try:
                fit = fit_arga(hist, p_max, q_max, la_mode=la_mode, beta=b)
            except (ArmaFitError, VolatilityFitError, np.linalg.LinAlgError) as exc:
                logger.debug("%s origin %s: fit failed (%s)", asset, dates[t], exc)
                n_failed += 1
                if fit is None:
                    rows.append(_forecast_row(asset, dates[t], np.nan, np.nan, None, la_mode))
                    continue
        mu, s2 = forecast_one_step(fit, hist, b)
        rows.append(_forecast_row(asset, dates[t], mu, s2, fit, la_mode))
    if n_failed:
        logger.warning("%s: %d refit(s) failed; previous parameters carried forward", asset, n_failed)
    return pd.DataFrame(rows, columns=FORECAST_CSV_COLUMNS)


def _forecast_row(asset, day, mu, s2, fit, la_mode):
    if fit is None:
        return {"asset": asset, "date": day, "mu_hat": mu, "sigma2_hat": s2, "model": "",
                "p": -1, "q": -1, "vol_spec": "", "la_mode": int(la_mode), "aic": np.nan}
    model = f"ARMA({fit.arma.p},{fit.arma.q})-{fit.vol.kind}(1,1)"
    return {"asset": asset, "date": day, "mu_hat": mu, "sigma2_hat": s2, "model": model,
            "p": fit.arma.p, "q": fit.arma.q, "vol_spec": fit.vol.kind,
            "la_mode": int(la_mode), "aic": fit.aic}


def write_forecast_csv(df: pd.DataFrame, path) -> None:
    out = df.copy()
    out["date"] = [d.isoformat() if isinstance(d, Date) else d for d in out["date"]]
    out[FORECAST_CSV_COLUMNS].to_csv(path, index=False, float_format="%.17g")


def read_forecast_csv(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"asset": str, "date": str, "model": str, "vol_spec": str},
                     keep_default_na=True, float_precision="round_trip")
    df["date"] = [Date.fromisoformat(d) for d in df["date"]]
    return df
