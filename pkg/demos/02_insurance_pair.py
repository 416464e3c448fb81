"""Two agents, one quadratic and one absolute-deviation, trading a loss.

Sweeping the Pareto weight between the agents traces out every optimal
contract: below 1/2 the quadratic agent absorbs everything, above 2/3 the
other one does, and in between the contract is a deductible with a limit
whose attachment points are quantiles at exactly computable levels.
"""

from fractions import Fraction as F

import riskshare as rs

gd, mmd = rs.make_named("gd"), rs.make_named("mmd")
X = rs.DiscreteRv.of(list(range(20, 0, -1)))

for lam in (F(3, 10), F(3, 5), F(4, 5)):
    agents = [rs.AgentSpec(gd, lam), rs.AgentSpec(mmd, 1 - lam)]
    env = rs.envelope_min([rs.scale(gd, lam), rs.scale(mmd, 1 - lam)])
    alloc, value = rs.comonotonic_allocation(X, agents)
    crossings = [b for b in env.breakpoints if 0 < b < 1]
    print(f"weight {lam}: envelope crossings {crossings}, group value {value}")
    ranges = [(min(p), max(p)) for p in alloc.parts]
    print(f"  agent ranges: quadratic {ranges[0]}, absolute-deviation {ranges[1]}")

# The interior regime in detail: weight 3/5 puts the crossings at survival
# levels 1/3 and 2/3, so the first agent holds the band between the
# corresponding quantiles.
lam = F(3, 5)
agents = [rs.AgentSpec(gd, lam), rs.AgentSpec(mmd, 1 - lam)]
alloc, value = rs.comonotonic_allocation(X, agents)
q_hi = rs.quantile(X, F(1, 3), "left")
q_lo = rs.quantile(X, F(2, 3), "left")
print(f"\nweight 3/5 contract: deductible {q_lo}, limit {q_hi}")
print("transfer function of the quadratic agent (x, f(x)):")
order = sorted(range(X.n), key=lambda s: X.values[s])
for s in order[::4]:
    print(f"  x = {X.values[s]:>2}  ->  {alloc.parts[0][s]}")

print("\nallocation is comonotonic:", rs.is_comonotonic(alloc))
print("welfare equals the envelope integral exactly:",
      value == rs.choquet(rs.envelope_min([rs.scale(gd, lam), rs.scale(mmd, 1 - lam)]), X))
