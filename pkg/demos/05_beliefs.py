"""Agents who disagree on probabilities, reconciled by a change of distortion.

For comonotonic sharing, heterogeneous beliefs cost nothing: average the
beliefs into a common measure and rewrite each agent's distortion as a
staircase over the common survival levels of the total loss.  Evaluations
match exactly for every risk that moves with the total.
"""

from fractions import Fraction as F

import riskshare as rs

X = rs.DiscreteRv.of([6, 5, 4, 3, 2, 1])
optimist = rs.BeliefMeasure.of([F(1, 12), F(1, 12), F(1, 6), F(1, 6), F(1, 4), F(1, 4)])
uniform = rs.BeliefMeasure.equiprobable(6)
common = rs.common_measure([uniform, optimist])
print("common measure:", [str(p) for p in common.probs])

h = rs.make_named("gd")
g = rs.transform_distortion(h, optimist, common, X)
print("\ntransformed distortion record:")
print(g.to_record())

print("evaluation identity on increasing transforms of X:")
for f in ([12, 10, 8, 6, 4, 2], [3, 3, 2, 2, 1, 1], [36, 25, 16, 9, 4, 1]):
    direct = rs.choquet_weighted(h, f, optimist.probs)
    via = rs.choquet_weighted(g, f, common.probs)
    print(f"  f(X) = {f}: own-belief value {direct} == transformed {via}: {direct == via}")

agents = [
    rs.AgentSpec(rs.make_named("gd"), F(2, 3), uniform),
    rs.AgentSpec(rs.make_named("mmd"), F(1, 3), optimist),
]
alloc, value, _, _ = rs.comonotonic_allocation_with_beliefs(X, agents)
per, tot = rs.welfare(alloc, agents)
print("\nbelief-aware comonotonic sharing:")
print("  per-agent welfare:", [str(v) for v in per])
print("  weighted total == solver value:", tot == value)
print("  allocation comonotonic:", rs.is_comonotonic(alloc))
