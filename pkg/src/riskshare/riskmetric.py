"""Quantiles and Choquet-integral riskmetrics on finite equiprobable grids.

A random variable is an array of values over N equally likely states.
Quantiles count losses from large to small: the left quantile at level t is
the smallest x with P(X <= x) >= 1 - t, so t near 0 picks out the largest
outcomes.  The survival-staircase evaluator is total (no continuity
assumptions on the distortion function) and exact in rational arithmetic;
the quantile-representation evaluator is the cross-check and only applies
under one-sided continuity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from .distortion import DistortionFunction, _frac, _poly_eval, make_named
from .errors import DomainError, HypothesisUnmet, IncompatibleGrids, ParamOutOfRange

__all__ = [
    "DiscreteRv",
    "QuantileSide",
    "quantile",
    "choquet",
    "choquet_weighted",
    "choquet_via_quantiles",
    "gd",
    "mmd",
    "iqd",
    "integrated_quantile",
    "convex_order_leq",
    "distortion_weights",
]

QuantileSide = Literal["left", "right"]


@dataclass(frozen=True)
class DiscreteRv:
    """A random variable on N equiprobable states (each has mass 1/N)."""

    values: tuple

    def __post_init__(self):
        if len(self.values) < 1:
            raise ParamOutOfRange("a random variable needs at least one state")

    @staticmethod
    def of(values) -> "DiscreteRv":
        vals = tuple(values)
        for v in vals:
            if isinstance(v, float) and not math.isfinite(v):
                raise ParamOutOfRange("values must be finite")
        return DiscreteRv(vals)

    @staticmethod
    def uniform(n: int) -> "DiscreteRv":
        """Midpoint grid of the uniform distribution on [0, 1]."""
        return DiscreteRv(tuple(Fraction(2 * k - 1, 2 * n) for k in range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.values)

    @cached_property
    def sorted_asc(self) -> tuple:
        return tuple(sorted(self.values))

    @cached_property
    def sorted_desc_frac(self) -> tuple[Fraction, ...]:
        return tuple(_frac(v) for v in sorted(self.values, reverse=True))

    @cached_property
    def mean(self) -> Fraction:
        return sum(self.sorted_desc_frac, Fraction(0)) / self.n

    def scaled(self, lam) -> "DiscreteRv":
        lf = _frac(lam)
        return DiscreteRv(tuple(_frac(v) * lf for v in self.values))

    def shifted(self, c) -> "DiscreteRv":
        cf = _frac(c)
        return DiscreteRv(tuple(_frac(v) + cf for v in self.values))

    def permuted(self, perm: Sequence[int]) -> "DiscreteRv":
        return DiscreteRv(tuple(self.values[i] for i in perm))


def quantile(X: DiscreteRv, t, side: QuantileSide = "left") -> Fraction:
    """Quantile at level t with losses counted from large to small.

    On a finite grid the essential bounds are attained, so the endpoints
    clamp: level 0 is the maximum, level 1 the minimum, for either side.
    """
    tf = _frac(t)
    if tf < 0 or tf > 1:
        raise DomainError(f"quantile level {t!r} outside [0, 1]")
    n = X.n
    if side == "left":
        j = math.ceil(n * (1 - tf))
    elif side == "right":
        j = math.floor(n * (1 - tf)) + 1
    else:
        raise ParamOutOfRange(f"side must be 'left' or 'right', got {side!r}")
    j = min(max(j, 1), n)
    return _frac(X.sorted_asc[j - 1])


def choquet(h: DistortionFunction, X: DiscreteRv) -> Fraction:
    """Exact signed Choquet integral via the survival staircase.

    Sorting descending, the value is x_(N) h(1) plus each value gap times h
    at the survival level the gap sits on; ties contribute zero-width gaps.
    """
    desc = X.sorted_desc_frac
    n = X.n
    total = desc[-1] * h.point_values[-1]
    for k in range(1, n):
        gap = desc[k - 1] - desc[k]
        if gap:
            total += gap * h.eval(Fraction(k, n))
    return total


def choquet_weighted(h: DistortionFunction, values: Sequence, probs: Sequence) -> Fraction:
    """Survival-staircase Choquet integral under state probabilities ``probs``.

    The general-probability path: only the heterogeneous-beliefs layer needs
    it, the rest of the library stays on equiprobable grids.
    """
    ps = [_frac(p) for p in probs]
    if len(ps) != len(values):
        raise IncompatibleGrids("values and probabilities differ in length")
    if any(p < 0 for p in ps) or sum(ps) != 1:
        raise ParamOutOfRange("probabilities must be nonnegative and sum to 1")
    by_value: dict[Fraction, Fraction] = {}
    for v, p in zip(values, ps):
        if p == 0:
            continue
        vf = _frac(v)
        by_value[vf] = by_value.get(vf, Fraction(0)) + p
    desc = sorted(by_value.items(), key=lambda kv: kv[0], reverse=True)
    total = desc[-1][0] * h.point_values[-1]
    surv = Fraction(0)
    for k in range(1, len(desc)):
        surv += desc[k - 1][1]
        total += (desc[k - 1][0] - desc[k][0]) * h.eval(surv)
    return total


def _continuity_class(h: DistortionFunction) -> tuple[bool, bool]:
    """(right-continuous everywhere, left-continuous everywhere)."""
    m = len(h.coeffs)
    rc = all(h.point_values[k] == _poly_eval(h.coeffs[k], h.breakpoints[k]) for k in range(m))
    lc = all(
        h.point_values[k] == _poly_eval(h.coeffs[k - 1], h.breakpoints[k]) for k in range(1, m + 1)
    )
    return rc, lc


def stieltjes_quantile_integral(h: DistortionFunction, X: DiscreteRv, side: QuantileSide) -> Fraction:
    """Riemann-Stieltjes integral of Q_t over dh, jumps included.

    No hypothesis checking; callers pick the side that matches h's
    one-sided continuity (see choquet_via_quantiles).
    """
    n = X.n
    total = Fraction(0)
    for k, c in enumerate(h.coeffs):
        lo, hi = h.breakpoints[k], h.breakpoints[k + 1]
        cuts = [lo] + [Fraction(j, n) for j in range(math.floor(lo * n) + 1, math.ceil(hi * n)) if lo < Fraction(j, n) < hi] + [hi]
        for a, b in zip(cuts, cuts[1:]):
            q = quantile(X, (a + b) / 2, side)
            total += q * (_poly_eval(c, b) - _poly_eval(c, a))
    for k, b in enumerate(h.breakpoints):
        if side == "right" and k > 0:
            jump = h.point_values[k] - _poly_eval(h.coeffs[k - 1], b)
        elif side == "left" and k < len(h.coeffs):
            jump = _poly_eval(h.coeffs[k], b) - h.point_values[k]
        else:
            continue
        if jump:
            total += quantile(X, b, side) * jump
    return total


def choquet_via_quantiles(h: DistortionFunction, X: DiscreteRv) -> Fraction:
    """Quantile representation of the Choquet integral.

    Requires h globally right-continuous (integrate the right quantile) or
    globally left-continuous (the left quantile); otherwise the
    representation does not apply and HypothesisUnmet tells the caller to
    use the survival staircase.
    """
    rc, lc = _continuity_class(h)
    if lc:
        return stieltjes_quantile_integral(h, X, "left")
    if rc:
        return stieltjes_quantile_integral(h, X, "right")
    raise HypothesisUnmet(
        "distortion function is neither left- nor right-continuous; "
        "use the survival-staircase evaluator"
    )


# ---------------------------------------------------------------------------
# Closed forms for the named variability measures
# ---------------------------------------------------------------------------


def gd(X: DiscreteRv) -> Fraction:
    """Half the mean absolute difference of two independent copies."""
    asc = X.sorted_asc
    n = X.n
    acc = Fraction(0)
    for k, v in enumerate(asc, start=1):
        acc += (2 * k - 1 - n) * _frac(v)
    return acc / (n * n)


def mmd(X: DiscreteRv) -> Fraction:
    """Mean absolute deviation from the (left) median."""
    med = quantile(X, Fraction(1, 2), "left")
    return sum((abs(_frac(v) - med) for v in X.values), Fraction(0)) / X.n


def iqd(X: DiscreteRv, alpha) -> Fraction:
    """Inter-quantile difference at level alpha; zero once alpha >= 1/2."""
    af = _frac(alpha)
    if af < 0:
        raise ParamOutOfRange("iqd level must be nonnegative")
    if af >= Fraction(1, 2):
        return Fraction(0)
    return quantile(X, af, "left") - quantile(X, 1 - af, "right")


# ---------------------------------------------------------------------------
# Convex order
# ---------------------------------------------------------------------------


def integrated_quantile(X: DiscreteRv, t) -> Fraction:
    """Integral of the left quantile from 0 to t (top-down partial mass)."""
    tf = _frac(t)
    if tf < 0 or tf > 1:
        raise DomainError(f"level {t!r} outside [0, 1]")
    desc = X.sorted_desc_frac
    n = X.n
    full = math.floor(n * tf)
    acc = sum(desc[:full], Fraction(0)) / n
    if full < n and tf > Fraction(full, n):
        acc += (tf - Fraction(full, n)) * desc[full]
    return acc


def convex_order_leq(X: DiscreteRv, Y: DiscreteRv) -> bool:
    """True iff X is below Y in convex order (a mean-preserving contraction).

    Checked exactly on the common grid refinement: every top-k partial sum
    of X is at most Y's, with equal totals.  Equiprobable grids always admit
    a common refinement, so this never raises IncompatibleGrids.
    """
    lcm = math.lcm(X.n, Y.n)
    rx, ry = lcm // X.n, lcm // Y.n
    dx = [v for v in X.sorted_desc_frac for _ in range(rx)]
    dy = [v for v in Y.sorted_desc_frac for _ in range(ry)]
    ax, ay = Fraction(0), Fraction(0)
    for k in range(lcm - 1):
        ax += dx[k]
        ay += dy[k]
        if ax > ay:
            return False
    return ax + dx[-1] == ay + dy[-1]


# ---------------------------------------------------------------------------
# Fast float path
# ---------------------------------------------------------------------------


def distortion_weights(h: DistortionFunction, n: int) -> np.ndarray:
    """Spectral weights w[k] = h((k+1)/n) - h(k/n) as floats.

    The Choquet integral of any X on n states is then the dot product of
    X sorted descending with these weights, which is what the vectorized
    verification paths use.
    """
    levels = [float(h.eval(Fraction(k, n))) for k in range(n + 1)]
    return np.diff(np.asarray(levels))
