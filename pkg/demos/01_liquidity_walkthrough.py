"""From minute trades to a daily liquidity Beta, one day at a time.

Simulates a regime-switching asset, runs the minute-level computation on a
few days, and shows how the daily Beta distribution skews once the rare
high-liquidity days arrive.

    python3 demos/01_liquidity_walkthrough.py
"""
import numpy as np

from liquidity_lab.liquidity import process_day
from liquidity_lab.synth import TickScenario, simulate_minutes

SEED = 12

scn = TickScenario(kind="regime", n_days=400, p_high=0.03)
r, A, _, high = simulate_minutes(scn, "DEMO", SEED)

# a single day in detail
ml, rec, _ = process_day(r[0], A[0], SEED, "DEMO", 0)
print("day 0")
print(f"  normalised illiquidity sums to {ml.ell_T.sum():.6f} (one per minute)")
print(f"  minute Beta range  {ml.beta_t.min():.3f} .. {ml.beta_t.max():.3f}")
print(f"  daily return {rec.r_tt:+.5f}, liquidity-adjusted {rec.r_lq_tt:+.5f}, Beta {rec.beta_tt:.3f}")

# the whole sample
beta = np.array([process_day(r[d], A[d], SEED, "DEMO", d)[1].beta_tt for d in range(scn.n_days)])
print(f"\n{scn.n_days} days, {high.sum()} of them in the high-liquidity regime")
print(f"  Beta mean {beta.mean():.3f}, median {np.median(beta):.3f}")
print(f"  capped days {np.mean(beta >= 10):.1%}")
print(f"  mean Beta on high days {beta[high].mean():.2f}, on normal days {beta[~high].mean():.2f}")
