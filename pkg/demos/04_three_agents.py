"""Three agents, three tastes: quadratic, absolute-deviation, tail-trimming.

Mixing a tail-trimming agent with risk-averse ones splits the loss into
three layers: the beta-tails go to the trimming agent, and the middle band
is shared comonotonically under a capped envelope.  The representative
distortion of the group is the tail transform of that envelope, and the
relative weights select one of six qualitative regimes.
"""

from fractions import Fraction as F

import riskshare as rs

gd, mmd = rs.make_named("gd"), rs.make_named("mmd")
alpha = F(1, 4)
iqd = rs.make_named("iqd", alpha=alpha)
X = rs.DiscreteRv.of([F(v) for v in range(12, 0, -1)])

REGIMES = {
    "quadratic takes the middle": (F(1), F(1), F(1)),
    "absolute-deviation takes the middle": (F(1), F(1, 2), F(1, 2)),
    "trimmer also takes a central band": (F(1), F(1), F(7, 64)),
    "band inside the absolute-deviation middle": (F(1), F(1, 2), F(1, 16)),
    "two concave agents split the middle": (F(1), F(7, 8), F(1)),
    "all three active": (F(1), F(7, 8), F(39, 256)),
}

for label, (l1, l2, l3) in REGIMES.items():
    agents = [rs.AgentSpec(gd, l1), rs.AgentSpec(mmd, l2), rs.AgentSpec(iqd, l3)]
    res = rs.infconv_mixed(agents)
    alloc, tails, value = rs.mixed_allocation(X, agents)
    active = [i + 1 for i, p in enumerate(alloc.parts) if len(set(p)) > 1]
    print(f"{label}")
    print(f"  weights {l1}, {l2}, {l3} -> group value {value}, active agents {active}")
    assert value == res.value_at(X)

# The representative for the richest regime, sampled through its band
# structure: linear near the trimming levels, parabolic next, flat cap in
# the center.
agents = [rs.AgentSpec(gd, 1), rs.AgentSpec(mmd, F(7, 8)), rs.AgentSpec(iqd, F(39, 256))]
rep = rs.infconv_mixed(agents).representative
print("\nrepresentative distortion of the last regime:")
for t in (F(1, 4), F(5, 16), F(13, 32), F(1, 2), F(19, 32), F(11, 16), F(3, 4)):
    print(f"  G({t}) = {rep.eval(t)}")

alloc, tails, _ = rs.mixed_allocation(X, agents)
print("\nmembership of each state (A = upper tail, B = lower tail):")
for s in range(X.n):
    tag = "A" if s in tails.a_states else "B" if s in tails.b_states else "middle"
    print(f"  X = {str(X.values[s]):>2}: {tag:6s} parts = {[str(p[s]) for p in alloc.parts]}")
