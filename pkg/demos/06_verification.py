"""Checking the closed forms the hard way.

Three independent oracles: randomized feasible allocations that must never
beat a claimed optimum, an exhaustive grid search on tiny instances, and
Monte Carlo evaluation against textbook integrals.  A deliberately
corrupted bound shows the harness actually catches violations.
"""

from fractions import Fraction as F

import numpy as np

import riskshare as rs

gd, mmd = rs.make_named("gd"), rs.make_named("mmd")
X = rs.DiscreteRv.of([F(float(v)) for v in np.random.default_rng(0).normal(0, 2, 60).round(3)])

agents = [rs.AgentSpec(gd, F(3, 5)), rs.AgentSpec(mmd, F(2, 5))]
closed = rs.infconv_comonotonic([gd, mmd], [F(3, 5), F(2, 5)])
report = rs.dominance_check(X, agents, closed, trials=20_000, seed=1)
print("dominance check against the envelope value:")
print(report.to_text())

corrupted = rs.dominance_check(
    X, agents, closed, trials=2_000, seed=1, bound=float(closed.value_at(X)) + 1.0
)
print("self test with a corrupted bound:",
      corrupted.violations, "violations caught,", len(corrupted.witnesses), "witnesses kept")

# Brute force on a 5-state instance brackets the closed form from above
# and tightens as the value grid refines.
X5 = rs.DiscreteRv.of([0, 1, 2, 3, 4])
pair = [rs.AgentSpec(gd), rs.AgentSpec(gd)]
closed_value = float(rs.gd(X5))
for points in (9, 15, 25):
    bf = rs.bruteforce_infconv(X5, pair, np.linspace(0, 2, points))
    print(f"brute force, {points:>2} grid points: {bf:.6f}  (closed form {closed_value:.6f})")

# Monte Carlo estimates with batch-means errors against exact integrals.
print("\nMonte Carlo on uniform(0,1) samples:")
for name, h, target in [("gd", gd, 1 / 6), ("mmd", mmd, 1 / 4),
                        ("iqd(1/4)", rs.make_named("iqd", alpha=F(1, 4)), 1 / 2)]:
    est, se = rs.monte_carlo_choquet(h, lambda rng, m: rng.random(m), 20_000, seed=3)
    print(f"  {name:9s} estimate {est:.5f} +- {se:.5f}   target {target:.5f}")
