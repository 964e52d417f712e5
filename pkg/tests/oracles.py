"""Independent reference computations used by the tests."""
import numpy as np


def simplex_grid(m, cap, step=0.005):
    """All risky-weight vectors on a ``step`` lattice with ``0 <= w <= cap`` and ``sum <= 1``."""
    k = int(round(cap / step))
    axes = np.meshgrid(*[np.arange(k + 1) * step] * m, indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=1)
    return pts[pts.sum(axis=1) <= 1.0 + 1e-12]


def grid_best(problem, step=0.005):
    """Best objective over the lattice; the risk-free weight takes the remainder."""
    n = problem.mu.size
    f = problem.risk_free_index
    risky = [i for i in range(n) if i != f]
    x = simplex_grid(len(risky), problem.cap_risky, step)
    W = np.zeros((x.shape[0], n))
    W[:, risky] = x
    W[:, f] = 1.0 - x.sum(axis=1)
    obj = W @ problem.mu - 0.5 * problem.lambda_t * np.einsum("ij,jk,ik->i", W, problem.sigma, W)
    i = int(np.argmax(obj))
    return float(obj[i]), W[i]


def random_problem(rng, m=3, cap=0.3):
    from liquidity_lab.portfolio import MvProblem
    n = m + 1
    mu = np.r_[0.0, rng.normal(0.002, 0.004, m)]
    L = rng.normal(0, 0.03, (m, m + 2))
    sigma = np.zeros((n, n))
    sigma[1:, 1:] = L @ L.T / (m + 2)
    lam = float(rng.uniform(0.2, 8.0))
    return MvProblem(mu=mu, sigma=sigma, lambda_t=lam, cap_risky=cap, risk_free_index=0)
