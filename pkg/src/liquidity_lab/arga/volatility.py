"""GARCH(1,1) and EGARCH(1,1) Gaussian QMLE, standard and liquidity-adjusted.

Liquidity-adjusted recursions add the liquidity terms driven by the lagged
Beta ``beta_{t-1}``::

    GARCH : s2_t = omega + a e2_{t-1} + b s2_{t-1} + omega (1 - beta2_{t-1}) / beta2_{t-1}
    EGARCH: log s2_t = omega + g(z_{t-1}) + a log s2_{t-1} + (a - 1) log beta2_{t-1}

with ``g(z) = theta z + lam (|z| - E|Z|)``. Both collapse to the standard
recursions at ``beta == 1``.

Estimation runs on residuals scaled to unit mean square. In liquidity-
adjusted mode the intercept is expressed on the scale of the de-adjusted
residuals ``beta_t * e_t``, so a constant Beta yields exactly the
standard-mode objective up to an additive constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from ._recursions import E_ABS_Z, egarch_filter, egarch_filter_grad, garch_filter, garch_simulate

VARIANCE_FLOOR = 1e-12
PERSISTENCE_BOUND = 1.0 - 1e-6
MAXITER = 500
LOG_2PI = math.log(2 * math.pi)


class VolatilityFitError(RuntimeError):
    pass


@dataclass
class GarchParams:
    omega: float
    a: float
    b: float
    kind: str = field(default="GARCH", init=False)
    n_params: int = field(default=3, init=False)


@dataclass
class EgarchParams:
    """EGARCH(1,1) parameters.

    The news-impact scale ``b`` multiplies ``g(z)`` and is not separately
    identified from ``theta_sign`` and ``lambda_mag``; it is held at 1.
    """

    omega: float
    a: float
    theta_sign: float
    lambda_mag: float
    b: float = 1.0
    e_abs_z: float = E_ABS_Z
    kind: str = field(default="EGARCH", init=False)
    n_params: int = field(default=4, init=False)


@dataclass
class VolFit:
    params: GarchParams | EgarchParams
    loglik: float
    aic: float
    sigma2: np.ndarray
    nobs: int
    converged: bool
    n_floor: int = 0
    la_mode: bool = False
    init_loglik: float = np.nan
    # scaled-space state used for filtering and forecasting
    _raw: np.ndarray = field(default=None, repr=False)
    scale2: float = field(default=1.0, repr=False)
    reg_scale2: float = field(default=1.0, repr=False)


class _Scaling:
    """Unit-mean-square residuals and the per-period liquidity ratio.

    ``rho[t] = reg_scale2 / (scale2 * beta[t]^2)`` where ``scale2`` is the
    mean square of the modelled residuals and ``reg_scale2`` that of
    ``beta * residuals``.
    """

    def __init__(self, resid, beta=None):
        e = np.asarray(resid, dtype=float)
        self.scale2 = float(np.mean(e * e))
        if not self.scale2 > 0:
            raise VolatilityFitError("residuals are identically zero")
        self.x = e / math.sqrt(self.scale2)
        if beta is None:
            self.reg_scale2 = self.scale2
            self.rho = np.ones_like(e)
        else:
            beta = np.asarray(beta, dtype=float)
            if beta.shape != e.shape:
                raise ValueError("beta must align with residuals")
            if np.any(~(beta > 0)):
                raise ValueError("beta must be positive in liquidity-adjusted mode")
            de = beta * e
            self.reg_scale2 = float(np.mean(de * de))
            self.rho = self.reg_scale2 / (self.scale2 * beta * beta)
        self.log_rho = np.log(self.rho)
        self.floor = VARIANCE_FLOOR / self.scale2


# --- GARCH -----------------------------------------------------------------

def _garch_from_u(u):
    s = PERSISTENCE_BOUND * expit(u[1])
    f = expit(u[2])
    return np.array([math.exp(u[0]), s * f, s * (1.0 - f)])


def _garch_to_u(omega, a, b):
    s = a + b
    return np.array([math.log(omega), logit(s / PERSISTENCE_BOUND), logit(a / s)])


def _garch_u_jacobian(u):
    s_f = expit(u[1])
    f = expit(u[2])
    s = PERSISTENCE_BOUND * s_f
    ds = PERSISTENCE_BOUND * s_f * (1 - s_f)
    df = f * (1 - f)
    jac = np.zeros((3, 3))
    jac[0, 0] = math.exp(u[0])
    jac[1, 1] = ds * f
    jac[1, 2] = s * df
    jac[2, 1] = ds * (1 - f)
    jac[2, 2] = -s * df
    return jac


GARCH_START = (0.1, 0.05, 0.90)


def garch_objective(u, sc: _Scaling):
    """Scaled negative log-likelihood of GARCH over unconstrained params."""
    theta = _garch_from_u(u)
    nll, g, _, _ = garch_filter(theta, sc.x, sc.rho, sc.floor)
    return nll, g @ _garch_u_jacobian(u)


def _loglik_from_scaled(nll_scaled, n, scale2):
    return -(nll_scaled + 0.5 * n * (LOG_2PI + math.log(scale2)))


def fit_garch(resid, beta=None) -> VolFit:
    sc = _Scaling(resid, beta)
    n = sc.x.size
    u0 = _garch_to_u(*GARCH_START)
    nll0, _ = garch_objective(u0, sc)
    res = minimize(garch_objective, u0, args=(sc,), jac=True, method="L-BFGS-B",
                   bounds=[(-30.0, 10.0), (-30.0, 30.0), (-30.0, 30.0)],
                   options={"maxiter": MAXITER, "ftol": 1e-14, "gtol": 1e-8})
    if not np.isfinite(res.fun):
        raise VolatilityFitError("GARCH optimiser diverged")
    u = res.x if res.fun <= nll0 else u0
    theta = _garch_from_u(u)
    nll, _, h, n_floor = garch_filter(theta, sc.x, sc.rho, sc.floor)
    params = GarchParams(omega=float(theta[0] * sc.reg_scale2), a=float(theta[1]), b=float(theta[2]))
    loglik = _loglik_from_scaled(nll, n, sc.scale2)
    ok = bool(res.success) or float(np.max(np.abs(res.jac))) < 1e-3
    return VolFit(params=params, loglik=loglik, aic=2 * params.n_params - 2 * loglik,
                  sigma2=h * sc.scale2, nobs=n, converged=ok, n_floor=int(n_floor),
                  la_mode=beta is not None, init_loglik=_loglik_from_scaled(nll0, n, sc.scale2),
                  _raw=theta, scale2=sc.scale2, reg_scale2=sc.reg_scale2)


# --- EGARCH ----------------------------------------------------------------

# omega is on the unit-mean-square scale, i.e. 0.1 * log(1)
EGARCH_START = (0.0, 0.95, 0.0, 0.1 * 0.2)
# lambda >= 0 keeps the magnitude effect non-negative; a negative one lets a
# large shock shrink the next variance and the filter runs away out of sample
EGARCH_U_BOUNDS = [(-20.0, 20.0), (-8.0, 8.0), (-5.0, 5.0), (0.0, 5.0)]


def _egarch_from_u(u):
    return np.array([u[0], PERSISTENCE_BOUND * math.tanh(u[1]), u[2], u[3]])


def _egarch_to_u(omega, a, theta, lam):
    return np.array([omega, math.atanh(a / PERSISTENCE_BOUND), theta, lam])


def egarch_objective(u, sc: _Scaling):
    """Scaled negative log-likelihood of EGARCH and its gradient in ``u``."""
    theta = _egarch_from_u(u)
    nll, g, _, _ = egarch_filter_grad(theta, sc.x, sc.log_rho, sc.floor)
    th = math.tanh(u[1])
    g[1] *= PERSISTENCE_BOUND * (1.0 - th * th)
    return nll, g


def fit_egarch(resid, beta=None) -> VolFit:
    sc = _Scaling(resid, beta)
    n = sc.x.size
    u0 = _egarch_to_u(*EGARCH_START)
    nll0, _ = egarch_objective(u0, sc)
    res = minimize(egarch_objective, u0, args=(sc,), jac=True, method="L-BFGS-B",
                   bounds=EGARCH_U_BOUNDS,
                   options={"maxiter": MAXITER, "ftol": 1e-13, "gtol": 1e-7})
    if not np.isfinite(res.fun):
        raise VolatilityFitError("EGARCH optimiser diverged")
    u = res.x if res.fun <= nll0 else u0
    theta = _egarch_from_u(u)
    nll, h, n_floor = egarch_filter(theta, sc.x, sc.log_rho, sc.floor)
    a = float(theta[1])
    params = EgarchParams(omega=float(theta[0] + (1.0 - a) * math.log(sc.reg_scale2)),
                          a=a, theta_sign=float(theta[2]), lambda_mag=float(theta[3]))
    loglik = _loglik_from_scaled(nll, n, sc.scale2)
    ok = bool(res.success) or float(np.max(np.abs(res.jac))) < 1e-3
    return VolFit(params=params, loglik=loglik, aic=2 * params.n_params - 2 * loglik,
                  sigma2=h * sc.scale2, nobs=n, converged=ok, n_floor=int(n_floor),
                  la_mode=beta is not None, init_loglik=_loglik_from_scaled(nll0, n, sc.scale2),
                  _raw=theta, scale2=sc.scale2, reg_scale2=sc.reg_scale2)


# --- selection, filtering, forecasting -------------------------------------

def fit_volatility(resid, mode: str = "standard", beta=None, specs=("GARCH", "EGARCH")) -> VolFit:
    """Fit GARCH(1,1) and EGARCH(1,1) and keep the lower-AIC one.

    ``mode='liquidity_adjusted'`` requires a positive ``beta`` aligned with
    ``resid``; ``beta[t-1]`` enters the variance for period ``t``.
    """
    if mode not in ("standard", "liquidity_adjusted"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "liquidity_adjusted":
        if beta is None:
            raise ValueError("liquidity_adjusted mode needs beta")
    else:
        beta = None
    resid = np.asarray(resid, dtype=float)
    if resid.size < 50:
        raise VolatilityFitError("need at least 50 residuals")
    fitters = {"GARCH": fit_garch, "EGARCH": fit_egarch}
    fits = []
    for name in specs:
        try:
            fits.append(fitters[name](resid, beta))
        except VolatilityFitError:
            continue
    fits = [f for f in fits if np.isfinite(f.aic)]
    if not fits:
        raise VolatilityFitError("no volatility model converged")
    return min(fits, key=lambda f: f.aic)


def filter_volatility(fit: VolFit, resid, beta=None):
    """Conditional variance path of ``resid`` under fixed fitted parameters.

    Returns ``(sigma2_path, sigma2_next)`` where ``sigma2_next`` is the
    one-step-ahead forecast for the period after the last residual.
    """
    e = np.asarray(resid, dtype=float)
    scale2 = fit.scale2
    x = np.append(e / math.sqrt(scale2), 0.0)
    if fit.la_mode:
        beta = np.asarray(beta, dtype=float)
        rho = fit.reg_scale2 / (scale2 * beta * beta)
        rho = np.append(rho, 1.0)
    else:
        rho = np.ones_like(x)
    floor = VARIANCE_FLOOR / scale2
    if isinstance(fit.params, GarchParams):
        _, _, h, _ = garch_filter(fit._raw, x, rho, floor)
    else:
        _, h, _ = egarch_filter(fit._raw, x, np.log(rho), floor)
    return h[:-1] * scale2, float(h[-1] * scale2)


def simulate_garch(n, omega, a, b, rng=None, burn=500):
    """Simulate a Gaussian GARCH(1,1); returns ``(eps, sigma2)``."""
    rng = np.random.default_rng(rng)
    z = rng.standard_normal(n + burn)
    h0 = omega / (1.0 - a - b)
    eps, h = garch_simulate(float(omega), float(a), float(b), z, float(h0))
    return eps[burn:], h[burn:]
