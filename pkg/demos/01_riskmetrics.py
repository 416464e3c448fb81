"""Distortion riskmetrics on finite grids: shapes, evaluation, closed forms.

A riskmetric here is a signed Choquet integral: sort the outcomes, weight
each marginal gap by a distortion of its survival probability, and add up.
Everything below is exact rational arithmetic.
"""

from fractions import Fraction as F

import riskshare as rs

# The three workhorse shapes plus the mean.
gd = rs.make_named("gd")        # t - t^2, strictly concave
mmd = rs.make_named("mmd")      # t ^ (1 - t), peaked at 1/2
iqd = rs.make_named("iqd", alpha=F(1, 4))  # open-interval indicator
mean = rs.make_named("mean")

print("shape values at t = 1/2:")
for name, h in [("gd", gd), ("mmd", mmd), ("iqd(1/4)", iqd), ("mean", mean)]:
    print(f"  {name:9s} h(1/2) = {h.eval(F(1, 2))}, concave = {rs.is_concave(h)}, "
          f"total variation = {rs.total_variation(h)}")

# A small loss with 8 equally likely outcomes.
X = rs.DiscreteRv.of([8, 7, 6, 5, 4, 3, 2, 1])
print("\nloss X on 8 states:", X.values)
print("quantiles (losses counted from large to small):")
print("  left  at 1/4:", rs.quantile(X, F(1, 4), "left"))
print("  right at 3/4:", rs.quantile(X, F(3, 4), "right"))

print("\nChoquet integrals match the classical closed forms exactly:")
print("  gd  staircase =", rs.choquet(gd, X), " closed form =", rs.gd(X))
print("  mmd staircase =", rs.choquet(mmd, X), " closed form =", rs.mmd(X))
print("  iqd staircase =", rs.choquet(iqd, X), " closed form =", rs.iqd(X, F(1, 4)))
print("  mean          =", rs.choquet(mean, X), "          =", X.mean)

# The quantile representation agrees whenever the distortion is one-sided
# continuous; the interval indicator is the known exception.
print("\nquantile representation for mmd:", rs.choquet_via_quantiles(mmd, X))
try:
    rs.choquet_via_quantiles(iqd, X)
except Exception as e:
    print("quantile representation for iqd(1/4):", type(e).__name__, "->", e)

# On a fine uniform grid the desk-scale constants appear.
U = rs.DiscreteRv.uniform(10_000)
print("\nuniform grid, 10^4 states:")
print("  gd  =", float(rs.gd(U)), " (1/6 =", 1 / 6, ")")
print("  mmd =", float(rs.mmd(U)), " (1/4)")
print("  iqd(1/4) =", float(rs.iqd(U, F(1, 4))), " (1/2)")
