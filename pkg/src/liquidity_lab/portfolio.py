"""Benchmark weights, long-only mean-variance optimisation and realised performance.

Weights are full vectors over the universe, risk-free asset included. The
risk-free asset returns exactly zero and has zero (co)variance.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date as Date

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

DEFAULT_CAP = 0.300
DEFAULT_LAMBDA_MIN = 0.1
ANNUALIZATION = 365
WEIGHTS_CSV_COLUMNS = ["date", "portfolio_id", "asset", "weight"]
PERFORMANCE_CSV_COLUMNS = ["date", "portfolio_id", "r_p", "var_p", "sd_p"]


class PortfolioError(ValueError):
    pass


@dataclass(frozen=True)
class Universe:
    assets: tuple
    risk_free_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "assets", tuple(self.assets))
        if len(set(self.assets)) != len(self.assets):
            raise PortfolioError("asset identifiers must be unique")
        if not 0 <= self.risk_free_index < len(self.assets):
            raise PortfolioError("risk_free_index out of range")

    @classmethod
    def with_risk_free(cls, risky, risk_free="USDT"):
        return cls((risk_free, *risky), 0)

    @property
    def n(self) -> int:
        return len(self.assets)

    @property
    def risky_index(self) -> np.ndarray:
        return np.array([i for i in range(self.n) if i != self.risk_free_index], dtype=int)

    @property
    def risky(self) -> list:
        return [self.assets[i] for i in self.risky_index]

    def embed(self, risky_values, fill=0.0) -> np.ndarray:
        out = np.full(self.n, fill, dtype=float)
        out[self.risky_index] = risky_values
        return out

    def embed_matrix(self, risky_cov) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        idx = self.risky_index
        out[np.ix_(idx, idx)] = risky_cov
        return out


@dataclass
class WeightVector:
    w: np.ndarray
    universe: Universe | None = None
    flags: tuple = ()

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)

    def check(self, cap=DEFAULT_CAP, risk_free_index=0, tol=1e-8):
        """Raise ``PortfolioError`` if any feasibility condition fails."""
        w = self.w
        risky = np.delete(w, risk_free_index)
        if abs(w.sum() - 1.0) > tol:
            raise PortfolioError(f"weights sum to {w.sum()!r}")
        if w.min() < -max(tol, 1e-10):
            raise PortfolioError("negative weight")
        if risky.size and risky.max() > cap + max(tol, 1e-10):
            raise PortfolioError("risky weight above cap")
        if w[risk_free_index] > 1.0 + tol:
            raise PortfolioError("risk-free weight above 1")
        return self


@dataclass
class MvProblem:
    """``max mu.w - lambda/2 w' Sigma w`` over the long-only capped simplex."""

    mu: np.ndarray
    sigma: np.ndarray
    lambda_t: float
    cap_risky: float = DEFAULT_CAP
    risk_free_index: int = 0
    long_only: bool = True

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        n = self.mu.size
        if self.sigma.shape != (n, n):
            raise PortfolioError("sigma shape does not match mu")
        if not np.all(np.isfinite(self.mu)) or not np.all(np.isfinite(self.sigma)):
            raise PortfolioError("non-finite inputs")
        if np.max(np.abs(self.sigma - self.sigma.T), initial=0.0) > 1e-10:
            raise PortfolioError("sigma is not symmetric")
        if np.any(np.diag(self.sigma) < 0):
            raise PortfolioError("negative variance on the diagonal")
        if not self.lambda_t > 0:
            raise PortfolioError("lambda_t must be positive")
        if not 0 < self.cap_risky <= 1:
            raise PortfolioError("cap_risky must lie in (0, 1]")
        if not self.long_only:
            raise PortfolioError("only long-only problems are supported")

    def objective(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(self.mu @ w - 0.5 * self.lambda_t * w @ self.sigma @ w)


@dataclass
class PerfRecord:
    r_p: float
    var_p: float
    sd_p: float


@dataclass
class PerfSummary:
    ann_return: float
    ann_sd: float
    sharpe: float
    ann_sd_returns: float
    sharpe_returns: float
    n_days: int


# --- benchmarks ------------------------------------------------------------

def benchmark_weights(kind: str, universe: Universe, beta=None, amount=None) -> WeightVector:
    """Equal, market (amount), liquidity (Beta) or inverse-liquidity weights.

    ``beta`` and ``amount`` are per risky asset, in ``universe.risky``
    order. Inverse weighting drops assets with ``beta == 0`` and flags them.
    """
    m = universe.risky_index.size
    flags = []
    if kind == "equal":
        raw = np.ones(m)
    elif kind == "market":
        raw = _positive(amount, m, "amount")
    elif kind == "liquidity":
        raw = _positive(beta, m, "beta")
    elif kind == "inverse_liquidity":
        b = _positive(beta, m, "beta")
        raw = np.zeros(m)
        ok = b > 0
        if not ok.all():
            flags.append("zero_beta_excluded:" + ",".join(np.asarray(universe.risky)[~ok]))
        raw[ok] = 1.0 / b[ok]
    else:
        raise PortfolioError(f"unknown benchmark {kind!r}")
    total = raw.sum()
    if not total > 0:
        raise PortfolioError(f"{kind} weights are all zero")
    return WeightVector(universe.embed(raw / total), universe, tuple(flags))


def _positive(values, m, name):
    if values is None:
        raise PortfolioError(f"{name} required")
    v = np.asarray(values, dtype=float)
    if v.shape != (m,):
        raise PortfolioError(f"{name} must have one value per risky asset")
    if np.any(~np.isfinite(v)) or np.any(v < 0):
        raise PortfolioError(f"{name} must be finite and non-negative")
    return v


def risk_aversion(market_returns, lambda_min: float = DEFAULT_LAMBDA_MIN, min_length: int = 30):
    """``(lambda_t, floored)`` from the trailing market-portfolio returns."""
    r = np.asarray(market_returns, dtype=float)
    if r.size < min_length:
        raise PortfolioError(f"risk_aversion needs at least {min_length} returns")
    var = r.var(ddof=1)
    if not var > 0:
        raise PortfolioError("market return variance is zero")
    lam = r.mean() / var
    if lam < lambda_min:
        return float(lambda_min), True
    return float(lam), False


# --- quadratic programme ---------------------------------------------------

def clip_psd(sigma) -> np.ndarray:
    """Symmetrise and clip negative eigenvalues at zero."""
    s = 0.5 * (np.asarray(sigma, float) + np.asarray(sigma, float).T)
    vals, vecs = np.linalg.eigh(s)
    if vals.min() >= 0:
        return s
    s = (vecs * np.clip(vals, 0, None)) @ vecs.T
    return 0.5 * (s + s.T)


@dataclass
class QpResult:
    x: np.ndarray
    active: list
    multipliers: np.ndarray
    iterations: int
    kkt_residual: float


def active_set_qp(H, c, A, b, x0, working=(), tol=1e-12, max_iter=500) -> QpResult:
    """Primal active-set method for ``min 0.5 x'Hx + c'x`` s.t. ``A x >= b``.

    ``H`` must be positive definite; ``x0`` feasible and ``working`` a
    linearly independent set of constraints active at ``x0``.
    """
    x = np.array(x0, dtype=float)
    W = list(working)
    n = x.size
    scale = max(1.0, np.abs(c).max(initial=0.0), np.abs(H).max(initial=0.0))
    for it in range(1, max_iter + 1):
        g = H @ x + c
        Aw = A[W]
        k = len(W)
        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = H
        kkt[:n, n:] = -Aw.T
        kkt[n:, :n] = Aw
        sol = np.linalg.solve(kkt, np.r_[-g, np.zeros(k)])
        p = sol[:n]
        if np.max(np.abs(p), initial=0.0) <= 1e-14 * max(1.0, np.abs(x).max()):
            lam = sol[n:]
            if k == 0 or lam.min() >= -tol * scale:
                return QpResult(x, W, lam, it, _kkt_residual(H, c, A, b, x, W, lam))
            W.pop(int(np.argmin(lam)))
            continue
        Ap = A @ p
        slack = A @ x - b
        alpha, block = 1.0, None
        for i in range(A.shape[0]):
            if i in W or Ap[i] >= -1e-15:
                continue
            step = max(slack[i], 0.0) / -Ap[i]
            if step < alpha:
                alpha, block = step, i
        x = x + alpha * p
        if block is not None:
            W.append(block)
    raise PortfolioError("active-set QP did not converge")


def _kkt_residual(H, c, A, b, x, W, lam):
    g = H @ x + c
    stat = g - A[W].T @ lam if W else g
    prim = np.clip(b - A @ x, 0, None)
    dual = np.clip(-lam, 0, None) if len(lam) else np.zeros(1)
    comp = np.abs(lam * (A[W] @ x - b[W])) if W else np.zeros(1)
    return float(max(np.abs(stat).max(initial=0.0), prim.max(initial=0.0),
                     dual.max(initial=0.0), comp.max(initial=0.0)))


def solve_mv(problem: MvProblem, return_info: bool = False):
    """Exact long-only capped mean-variance weights.

    The risk-free weight is eliminated (``w_f = 1 - sum(risky)``), leaving
    ``0 <= w_i <= cap`` and ``sum(risky) <= 1``. A vanishing ridge is added
    when the reduced Hessian is singular.
    """
    n = problem.mu.size
    f = problem.risk_free_index
    risky = np.array([i for i in range(n) if i != f])
    m = risky.size
    sigma = clip_psd(problem.sigma)
    lam = problem.lambda_t
    # w = e_f + M x
    M = np.zeros((n, m))
    M[risky, np.arange(m)] = 1.0
    M[f, :] = -1.0
    e_f = np.zeros(n)
    e_f[f] = 1.0
    H = lam * M.T @ sigma @ M
    c = -(M.T @ problem.mu - lam * M.T @ sigma @ e_f)
    H = 0.5 * (H + H.T)
    ev_min = np.linalg.eigvalsh(H).min() if m else 1.0
    ridge = 0.0
    if ev_min <= 1e-14 * max(1.0, np.abs(H).max(initial=0.0)):
        ridge = 1e-12 * max(np.abs(H).max(initial=0.0), np.abs(c).max(initial=0.0), 1e-12)
        H = H + (ridge - min(ev_min, 0.0)) * np.eye(m)
    cap = problem.cap_risky
    A = np.vstack([np.eye(m), -np.eye(m), -np.ones((1, m))])
    b = np.r_[np.zeros(m), -cap * np.ones(m), -1.0]
    res = active_set_qp(H, c, A, b, np.zeros(m), working=list(range(m)))
    x = np.clip(res.x, 0.0, cap)
    if x.sum() > 1.0:
        x /= x.sum()
    w = e_f + M @ x
    wv = WeightVector(w, flags=("ridge",) if ridge else ())
    if return_info:
        return wv, res
    return wv


# --- performance -----------------------------------------------------------

def realized_performance(weights, realized, realized_cov) -> PerfRecord:
    """Return and variance of ``weights`` held over the realised day."""
    w = weights.w if isinstance(weights, WeightVector) else np.asarray(weights, float)
    r = np.asarray(realized, dtype=float)
    S = np.asarray(realized_cov, dtype=float)
    if r.shape != w.shape or S.shape != (w.size, w.size):
        raise PortfolioError("dimension mismatch")
    r_p = float(r @ w)
    var_p = float(max(w @ S @ w, 0.0))
    return PerfRecord(r_p=r_p, var_p=var_p, sd_p=float(np.sqrt(var_p)))


def sharpe_ratio(ann_return: float, ann_sd: float) -> float:
    return float(ann_return / ann_sd) if ann_sd > 0 else float("nan")


def summarize_performance(r_p, var_p, periods: int = ANNUALIZATION) -> PerfSummary:
    """Annualised return, sd and Sharpe (zero risk-free).

    ``ann_sd`` uses the realised daily variances; ``ann_sd_returns`` the
    sample standard deviation of daily returns.
    """
    r = np.asarray(r_p, dtype=float)
    v = np.asarray(var_p, dtype=float)
    if r.size == 0:
        nan = float("nan")
        return PerfSummary(nan, nan, nan, nan, nan, 0)
    ann_ret = float(periods * r.mean())
    ann_sd = float(np.sqrt(periods * v.mean()))
    ann_sd_r = float(np.sqrt(periods) * r.std(ddof=1)) if r.size > 1 else float("nan")
    return PerfSummary(ann_ret, ann_sd, sharpe_ratio(ann_ret, ann_sd), ann_sd_r,
                       sharpe_ratio(ann_ret, ann_sd_r), int(r.size))


# --- IO --------------------------------------------------------------------

def _iso(d):
    return d.isoformat() if isinstance(d, Date) else str(d)


def write_weights_csv(rows, path) -> None:
    df = pd.DataFrame(rows, columns=WEIGHTS_CSV_COLUMNS)
    df["date"] = df["date"].map(_iso)
    df.to_csv(path, index=False, float_format="%.17g")


def write_performance_csv(rows, path) -> None:
    df = pd.DataFrame(rows, columns=PERFORMANCE_CSV_COLUMNS)
    df["date"] = df["date"].map(_iso)
    df.to_csv(path, index=False, float_format="%.17g")


def read_weights_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"date": str, "asset": str}, float_precision="round_trip")


def read_performance_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"date": str}, float_precision="round_trip")
