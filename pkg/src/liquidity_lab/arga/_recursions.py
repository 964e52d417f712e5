"""Compiled recursions for the ARMA and GARCH/EGARCH likelihoods.

All volatility kernels work on standardised residuals ``x`` (unit mean
square) and a per-period liquidity ratio ``rho``; ``rho == 1`` gives the
standard recursions.
"""
import math

import numpy as np
from numba import njit

E_ABS_Z = math.sqrt(2.0 / math.pi)
LOG_H_BOUND = 50.0


@njit(cache=True)
def arma_residuals(y, delta, phi, theta, start):
    n = y.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    eps = np.zeros(n)
    for t in range(start, n):
        e = y[t] - delta
        for i in range(p):
            e -= phi[i] * y[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= start:
                e += theta[j] * eps[t - 1 - j]
        eps[t] = e
    return eps


@njit(cache=True)
def arma_css_grad(y, delta, phi, theta, start):
    """Mean squared residual over ``t >= start`` and its gradient.

    Parameter order is ``(delta, phi_1..phi_p, theta_1..theta_q)``.
    """
    n = y.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    k = 1 + p + q
    eps = np.zeros(n)
    d = np.zeros((n, k))
    sse = 0.0
    g = np.zeros(k)
    for t in range(start, n):
        e = y[t] - delta
        for i in range(p):
            e -= phi[i] * y[t - 1 - i]
        d[t, 0] = -1.0
        for i in range(p):
            d[t, 1 + i] = -y[t - 1 - i]
        for j in range(q):
            s = t - 1 - j
            if s >= start:
                e += theta[j] * eps[s]
                d[t, 1 + p + j] += eps[s]
                for m in range(k):
                    d[t, m] += theta[j] * d[s, m]
        eps[t] = e
        sse += e * e
        for m in range(k):
            g[m] += 2.0 * e * d[t, m]
    m_eff = n - start
    return sse / m_eff, g / m_eff, eps, d


@njit(cache=True)
def garch_filter(params, x, rho, floor):
    """GARCH(1,1) variance path, negative log-likelihood and its gradient.

    ``h[t] = omega * rho[t-1] + a * x[t-1]^2 + b * h[t-1]`` with ``h[0] = 1``.
    Returns ``(nll, grad, h, n_floor)``; the likelihood omits ``log(2 pi)``.
    """
    omega = params[0]
    a = params[1]
    b = params[2]
    n = x.shape[0]
    h = np.empty(n)
    h[0] = 1.0
    dh = np.zeros(3)
    nll = 0.5 * (math.log(h[0]) + x[0] * x[0] / h[0])
    grad = np.zeros(3)
    n_floor = 0
    for t in range(1, n):
        d0 = rho[t - 1] + b * dh[0]
        d1 = x[t - 1] * x[t - 1] + b * dh[1]
        d2 = h[t - 1] + b * dh[2]
        ht = omega * rho[t - 1] + a * x[t - 1] * x[t - 1] + b * h[t - 1]
        if ht < floor:
            ht = floor
            d0 = 0.0
            d1 = 0.0
            d2 = 0.0
            n_floor += 1
        h[t] = ht
        dh[0] = d0
        dh[1] = d1
        dh[2] = d2
        nll += 0.5 * (math.log(ht) + x[t] * x[t] / ht)
        w = 0.5 * (1.0 / ht - x[t] * x[t] / (ht * ht))
        grad[0] += w * d0
        grad[1] += w * d1
        grad[2] += w * d2
    return nll, grad, h, n_floor


@njit(cache=True)
def egarch_filter(params, x, log_rho, floor):
    """EGARCH(1,1) log-variance path and negative log-likelihood.

    ``log h[t] = omega + (1 - a) * log_rho[t-1] + theta * z[t-1]
    + lam * (|z[t-1]| - E|Z|) + a * log h[t-1]`` with ``h[0] = 1``.
    """
    omega = params[0]
    a = params[1]
    theta = params[2]
    lam = params[3]
    n = x.shape[0]
    h = np.empty(n)
    lh = 0.0
    h[0] = 1.0
    nll = 0.5 * x[0] * x[0]
    n_floor = 0
    log_floor = math.log(floor)
    for t in range(1, n):
        z = x[t - 1] / math.sqrt(h[t - 1])
        lh = omega + (1.0 - a) * log_rho[t - 1] + theta * z + lam * (abs(z) - E_ABS_Z) + a * lh
        if lh > LOG_H_BOUND:
            lh = LOG_H_BOUND
        if lh < log_floor:
            lh = log_floor
            n_floor += 1
        h[t] = math.exp(lh)
        nll += 0.5 * (lh + x[t] * x[t] / h[t])
    return nll, h, n_floor


@njit(cache=True)
def garch_simulate(omega, a, b, z, h0):
    n = z.shape[0]
    eps = np.empty(n)
    h = np.empty(n)
    h[0] = h0
    eps[0] = math.sqrt(h0) * z[0]
    for t in range(1, n):
        h[t] = omega + a * eps[t - 1] * eps[t - 1] + b * h[t - 1]
        eps[t] = math.sqrt(h[t]) * z[t]
    return eps, h


@njit(cache=True)
def egarch_filter_grad(params, x, log_rho, floor):
    """:func:`egarch_filter` plus the gradient of the negative log-likelihood.

    Periods where the log-variance hits a bound contribute no derivative.
    """
    omega = params[0]
    a = params[1]
    theta = params[2]
    lam = params[3]
    n = x.shape[0]
    h = np.empty(n)
    lh = 0.0
    h[0] = 1.0
    nll = 0.5 * x[0] * x[0]
    grad = np.zeros(4)
    dlh = np.zeros(4)
    new = np.zeros(4)
    n_floor = 0
    log_floor = math.log(floor)
    for t in range(1, n):
        z = x[t - 1] / math.sqrt(h[t - 1])
        sgn = 1.0 if z > 0 else (-1.0 if z < 0 else 0.0)
        # d z_{t-1} / d lh_{t-1} = -z / 2
        k = (theta + lam * sgn) * (-0.5 * z) + a
        new[0] = 1.0 + k * dlh[0]
        new[1] = -log_rho[t - 1] + lh + k * dlh[1]
        new[2] = z + k * dlh[2]
        new[3] = (abs(z) - E_ABS_Z) + k * dlh[3]
        lh = omega + (1.0 - a) * log_rho[t - 1] + theta * z + lam * (abs(z) - E_ABS_Z) + a * lh
        clipped = False
        if lh > LOG_H_BOUND:
            lh = LOG_H_BOUND
            clipped = True
        if lh < log_floor:
            lh = log_floor
            n_floor += 1
            clipped = True
        for m in range(4):
            dlh[m] = 0.0 if clipped else new[m]
        h[t] = math.exp(lh)
        nll += 0.5 * (lh + x[t] * x[t] / h[t])
        w = 0.5 * (1.0 - x[t] * x[t] / h[t])
        for m in range(4):
            grad[m] += w * dlh[m]
    return nll, grad, h, n_floor


@njit(cache=True)
def pacf_coefs_jac(u, bound):
    """Coefficients from ``pacf = bound * tanh(u)`` and their Jacobian in ``u``."""
    k = u.shape[0]
    coefs = np.zeros(k)
    jac = np.zeros((k, k))
    new = np.zeros(k)
    new_jac = np.zeros((k, k))
    for m in range(k):
        th = math.tanh(u[m])
        a = bound * th
        da = bound * (1.0 - th * th)
        for i in range(m):
            new[i] = coefs[i] - a * coefs[m - 1 - i]
            for j in range(k):
                new_jac[i, j] = jac[i, j] - a * jac[m - 1 - i, j]
            new_jac[i, m] -= da * coefs[m - 1 - i]
        new[m] = a
        for j in range(k):
            new_jac[m, j] = 0.0
        new_jac[m, m] = da
        for i in range(m + 1):
            coefs[i] = new[i]
            for j in range(k):
                jac[i, j] = new_jac[i, j]
    return coefs, jac
