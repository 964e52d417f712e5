"""Conditional-sum-of-squares ARMA(p, q) estimation with AIC order choice.

The mean equation is ``r_t = delta + sum phi_i r_{t-i} - sum theta_j e_{t-j} + e_t``.
AR and MA polynomials are kept stationary/invertible by optimising over
partial autocorrelations mapped through ``tanh``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._recursions import arma_css_grad, arma_residuals, pacf_coefs_jac

PACF_BOUND = 1.0 - 1e-8
MAXITER = 500


class ArmaFitError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class ArmaSpec:
    p: int
    q: int
    intercept: float
    phi: np.ndarray
    theta: np.ndarray
    sigma2: float = np.nan
    loglik: float = np.nan
    aic: float = np.nan
    nobs: int = 0
    converged: bool = True
    se: dict = field(default_factory=dict)

    @property
    def n_params(self) -> int:
        return self.p + self.q + 2

    def is_stationary(self) -> bool:
        return _roots_outside(self.phi) and _roots_outside(self.theta)


def _roots_outside(coefs) -> bool:
    coefs = np.asarray(coefs, dtype=float)
    if coefs.size == 0:
        return True
    # roots of 1 - c_1 z - ... - c_k z^k
    poly = np.r_[-coefs[::-1], 1.0]
    return bool(np.all(np.abs(np.roots(poly)) > 1.0))


def pacf_to_coefs(pacf) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to polynomial coefficients."""
    pacf = np.asarray(pacf, dtype=float)
    coefs = np.zeros(0)
    for k, a in enumerate(pacf):
        coefs = np.r_[coefs - a * coefs[::-1], a] if k else np.array([a])
    return coefs


def coefs_to_pacf(coefs) -> np.ndarray:
    """Inverse of :func:`pacf_to_coefs` (Levinson step-down)."""
    c = np.asarray(coefs, dtype=float).copy()
    k = c.size
    pacf = np.zeros(k)
    for m in range(k - 1, -1, -1):
        a = c[m]
        pacf[m] = a
        if m == 0:
            break
        if abs(a) >= 1.0:
            raise ValueError("coefficients are not stationary")
        c = (c[:m] + a * c[:m][::-1]) / (1.0 - a * a)
    return pacf


def _to_unconstrained(coefs):
    pacf = np.clip(coefs_to_pacf(coefs), -0.99, 0.99)
    return np.arctanh(pacf / PACF_BOUND)


def _to_constrained(u):
    return pacf_to_coefs(PACF_BOUND * np.tanh(u))


def _transform_jacobian(u):
    return pacf_coefs_jac(np.asarray(u, dtype=float), PACF_BOUND)[1]


def _ols_ar_start(y, p, start):
    if p == 0:
        return np.zeros(0)
    X = np.column_stack([np.ones(y.size - start)] + [y[start - 1 - i:y.size - 1 - i] for i in range(p)])
    coef, *_ = np.linalg.lstsq(X, y[start:], rcond=None)
    phi = coef[1:]
    if not _roots_outside(phi):
        phi = np.zeros(p)
    return phi


class _Standardized:
    """Centre and scale a series; parameters map back exactly."""

    def __init__(self, series):
        x = np.asarray(series, dtype=float)
        self.mean = float(x.mean())
        self.scale = float(x.std())
        if not self.scale > 0:
            raise ArmaFitError("series is constant")
        self.y = (x - self.mean) / self.scale

    def intercept(self, delta_y, phi):
        return self.scale * delta_y + self.mean * (1.0 - np.sum(phi))


def _unpack(params, p, q):
    delta = params[0]
    phi = pacf_coefs_jac(params[1:1 + p], PACF_BOUND)[0] if p else np.zeros(0)
    theta = pacf_coefs_jac(params[1 + p:], PACF_BOUND)[0] if q else np.zeros(0)
    return delta, phi, theta


def _fit_standardized(y, p, q, start):
    phi0 = _ols_ar_start(y, p, start)
    x0 = np.r_[0.0, _to_unconstrained(phi0) if p else [], np.zeros(q)]
    empty = np.zeros(0)

    def fun(params):
        phi, jp = pacf_coefs_jac(params[1:1 + p], PACF_BOUND) if p else (empty, None)
        theta, jq = pacf_coefs_jac(params[1 + p:], PACF_BOUND) if q else (empty, None)
        f, g, _, _ = arma_css_grad(y, params[0], phi, theta, start)
        grad = np.empty_like(params)
        grad[0] = g[0]
        if p:
            grad[1:1 + p] = g[1:1 + p] @ jp
        if q:
            grad[1 + p:] = g[1 + p:] @ jq
        return f, grad

    bounds = [(None, None)] + [(-20.0, 20.0)] * (p + q)
    res = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": MAXITER, "ftol": 1e-14, "gtol": 1e-8})
    ok = bool(res.success) or (np.isfinite(res.fun) and np.max(np.abs(res.jac)) < 1e-5)
    return res.x, float(res.fun), ok


def fit_arma_order(series, p: int, q: int, start: int | None = None) -> tuple[ArmaSpec, np.ndarray]:
    """Fit one ARMA(p, q) by CSS; returns ``(spec, residuals)``.

    Residuals before ``start`` (default ``p``) are zero.
    """
    std = _Standardized(series)
    y = std.y
    start = p if start is None else start
    n_eff = y.size - start
    if n_eff <= p + q + 2:
        raise ArmaFitError(f"too few observations for ARMA({p},{q})")
    params, f, ok = _fit_standardized(y, p, q, start)
    delta_y, phi, theta = _unpack(params, p, q)
    _, _, eps_y, deriv = arma_css_grad(y, delta_y, phi, theta, start)

    sigma2_y = f
    sigma2 = sigma2_y * std.scale ** 2
    loglik = -0.5 * n_eff * (math.log(2 * math.pi * sigma2) + 1.0)
    k = p + q + 2
    aic = 2 * k - 2 * loglik

    se = {}
    J = deriv[start:]
    try:
        cov = sigma2_y * np.linalg.inv(J.T @ J)
        sd = np.sqrt(np.clip(np.diag(cov), 0, None))
        se["intercept"] = float(sd[0] * std.scale)
        for i in range(p):
            se[f"phi{i + 1}"] = float(sd[1 + i])
        for j in range(q):
            se[f"theta{j + 1}"] = float(sd[1 + p + j])
    except np.linalg.LinAlgError:
        pass

    spec = ArmaSpec(p=p, q=q, intercept=float(std.intercept(delta_y, phi)), phi=phi, theta=theta,
                    sigma2=float(sigma2), loglik=float(loglik), aic=float(aic), nobs=int(n_eff),
                    converged=ok, se=se)
    return spec, eps_y * std.scale


def fit_arma(series, p_max: int = 4, q_max: int = 4, return_grid: bool = False):
    """AIC-minimising ARMA(p, q) over ``0 <= p <= p_max``, ``0 <= q <= q_max``.

    All candidates condition on the same first ``p_max`` observations so
    their AIC values are comparable. Returns ``(spec, residuals)`` and the
    grid of ``{(p, q): aic}`` when ``return_grid`` is set.
    """
    series = np.asarray(series, dtype=float)
    if series.size < 50:
        raise ArmaFitError("fit_arma needs at least 50 observations")
    best = None
    grid, failures = {}, {}
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            try:
                spec, resid = fit_arma_order(series, p, q, start=p_max)
            except (ArmaFitError, np.linalg.LinAlgError, FloatingPointError) as exc:
                failures[(p, q)] = str(exc)
                continue
            if not spec.converged or not np.isfinite(spec.aic):
                failures[(p, q)] = "not converged"
                continue
            grid[(p, q)] = spec.aic
            if best is None or spec.aic < best[0].aic:
                best = (spec, resid)
    if best is None:
        raise ArmaFitError("no ARMA candidate converged", diagnostics=failures)
    if return_grid:
        return best[0], best[1], grid
    return best


def arma_filter(series, spec: ArmaSpec, start: int | None = None) -> np.ndarray:
    """Residuals of ``series`` under fixed ARMA parameters."""
    y = np.asarray(series, dtype=float)
    start = spec.p if start is None else start
    return arma_residuals(y, spec.intercept, np.asarray(spec.phi, float),
                          np.asarray(spec.theta, float), start)


def arma_forecast(series, residuals, spec: ArmaSpec) -> float:
    """One-step-ahead conditional mean given the history and its residuals."""
    y = np.asarray(series, dtype=float)
    e = np.asarray(residuals, dtype=float)
    mu = spec.intercept
    for i, c in enumerate(spec.phi):
        mu += c * y[-1 - i]
    for j, c in enumerate(spec.theta):
        mu -= c * e[-1 - j]
    return float(mu)


def simulate_arma(n, intercept=0.0, phi=(), theta=(), sigma=1.0, rng=None, burn=200):
    rng = np.random.default_rng(rng)
    phi = np.asarray(phi, float)
    theta = np.asarray(theta, float)
    e = rng.normal(0.0, sigma, n + burn)
    y = np.zeros(n + burn)
    for t in range(n + burn):
        v = intercept + e[t]
        for i, c in enumerate(phi):
            if t - 1 - i >= 0:
                v += c * y[t - 1 - i]
        for j, c in enumerate(theta):
            if t - 1 - j >= 0:
                v -= c * e[t - 1 - j]
        y[t] = v
    return y[burn:]
