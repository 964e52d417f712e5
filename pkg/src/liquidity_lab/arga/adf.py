"""Augmented Dickey-Fuller unit-root test with AIC lag selection.

p-values interpolate the standard-normal quantiles of the configured
critical values linearly in the test statistic (and extrapolate with the
end segments), so the anchors are reproduced exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

# constant + trend anchors used by the reference tables
DEFAULT_CRITICAL_VALUES = {"1%": -4.379, "5%": -3.836, "10%": -3.556}

_TREND_ORDER = {"n": -1, "c": 0, "ct": 1, "ctt": 2}


@dataclass
class AdfResult:
    statistic: float
    p_value: float
    used_lag: int
    nobs: int
    icbest: float
    critical_values: dict = field(default_factory=lambda: dict(DEFAULT_CRITICAL_VALUES))

    def significant(self, level: str = "5%") -> bool:
        return self.statistic < self.critical_values[level]


def _ols(X, y):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return coef, resid


def _design(x, lag, nobs_start, regression):
    dx = np.diff(x)
    n = dx.size
    rows = slice(nobs_start, n)
    cols = [x[:-1][rows]]
    for k in range(1, lag + 1):
        cols.append(dx[nobs_start - k:n - k])
    m = n - nobs_start
    order = _TREND_ORDER[regression]
    if order >= 0:
        cols.append(np.ones(m))
    trend = np.arange(1, m + 1, dtype=float)
    if order >= 1:
        cols.append(trend)
    if order >= 2:
        cols.append(trend ** 2)
    return np.column_stack(cols), dx[rows]


def _aic(resid, k):
    n = resid.size
    llf = -0.5 * n * (math.log(2 * math.pi * np.mean(resid ** 2)) + 1.0)
    return -2 * llf + 2 * k


def adf_pvalue(stat: float, critical_values=None) -> float:
    cv = critical_values or DEFAULT_CRITICAL_VALUES
    pts = sorted((v, float(k.rstrip("%")) / 100.0) for k, v in cv.items())
    xs = np.array([v for v, _ in pts])
    zs = norm.ppf([p for _, p in pts])
    if stat <= xs[0]:
        i = 0
    elif stat >= xs[-1]:
        i = len(xs) - 2
    else:
        i = int(np.searchsorted(xs, stat)) - 1
    slope = (zs[i + 1] - zs[i]) / (xs[i + 1] - xs[i])
    return float(norm.cdf(zs[i] + slope * (stat - xs[i])))


def default_max_lag(n: int) -> int:
    return int(math.ceil(12.0 * (n / 100.0) ** 0.25))


def adf_test(series, max_lag: int | None = None, regression: str = "ct",
             critical_values=None) -> AdfResult:
    """ADF regression of ``diff(x)`` on ``x_{t-1}``, lagged differences and trend terms.

    The lag is chosen by AIC over ``0..max_lag`` on a common sample; the
    chosen regression is then refitted on all usable observations.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if max_lag is None:
        max_lag = min(default_max_lag(n), n // 2 - 3)
    if n <= max_lag + 10:
        raise ValueError(f"series too short for max_lag={max_lag}")
    if np.ptp(x) == 0:
        raise ValueError("ADF statistic undefined for a constant series")
    if regression not in _TREND_ORDER:
        raise ValueError(f"unknown regression {regression!r}")

    best_lag, best_ic = 0, np.inf
    for lag in range(max_lag + 1):
        X, y = _design(x, lag, max_lag, regression)
        _, resid = _ols(X, y)
        ic = _aic(resid, X.shape[1])
        if ic < best_ic:
            best_lag, best_ic = lag, ic

    X, y = _design(x, best_lag, best_lag, regression)
    coef, resid = _ols(X, y)
    dof = X.shape[0] - X.shape[1]
    s2 = resid @ resid / dof
    XtX_inv = np.linalg.inv(X.T @ X)
    se = math.sqrt(s2 * XtX_inv[0, 0])
    if not se > 0:
        raise ValueError("ADF statistic undefined (zero standard error)")
    stat = float(coef[0] / se)
    cv = dict(critical_values or DEFAULT_CRITICAL_VALUES)
    return AdfResult(statistic=stat, p_value=adf_pvalue(stat, cv), used_lag=best_lag,
                     nobs=int(X.shape[0]), icbest=float(best_ic), critical_values=cv)
