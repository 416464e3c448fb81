"""Constructing and validating risk-sharing allocations.

An allocation splits a total loss X pointwise across n agents.  Three
constructors cover the solved regimes: the marginal-slice comonotonic
allocation driven by the weighted lower envelope, the tail allocation for
inter-quantile-difference agents (pairwise counter-monotonic on each tail),
and the mixed construction that hands the tails to the IQD agents and
shares the middle band comonotonically.  A comonotonic improvement
operator rearranges an arbitrary allocation into a comonotonic one without
hurting any agent in convex order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from . import distortion as dst
from .distortion import DistortionFunction, _frac
from .errors import (
    GridIncompatible,
    MedianOutOfRange,
    NotConcave,
    ParamOutOfRange,
    UnboundedProblem,
)
from .riskmetric import DiscreteRv, choquet, choquet_weighted, iqd, quantile

__all__ = [
    "AgentSpec",
    "Allocation",
    "TailAssignment",
    "ScenarioReport",
    "is_comonotonic",
    "comonotonic_allocation",
    "iqd_allocation",
    "mixed_allocation",
    "comonotonic_improvement",
    "welfare",
    "validate_scenario",
    "median_interval",
]

TIE_RULES = ("equal", "min", "max")


@dataclass(frozen=True)
class AgentSpec:
    """An agent: distortion function, Pareto weight, optional belief.

    ``belief`` is a per-state probability vector (a BeliefMeasure works);
    only the welfare evaluator and the heterogeneous-beliefs helpers look
    at it.
    """

    distortion: DistortionFunction
    weight: Fraction = Fraction(1)
    belief: object = None

    def __post_init__(self):
        object.__setattr__(self, "weight", _frac(self.weight))
        if self.weight < 0:
            raise ParamOutOfRange("agent weight must be nonnegative")


@dataclass(frozen=True)
class Allocation:
    """n value arrays over shared states, summing pointwise to the total."""

    parts: tuple[tuple, ...]
    total: DiscreteRv

    def __post_init__(self):
        n_states = self.total.n
        if not self.parts or any(len(p) != n_states for p in self.parts):
            raise ParamOutOfRange("parts must all cover the same states")
        for s in range(n_states):
            acc = sum((_frac(p[s]) for p in self.parts), Fraction(0))
            if acc != _frac(self.total.values[s]):
                raise ParamOutOfRange(f"parts do not sum to the total at state {s}")

    @staticmethod
    def of(parts, total=None) -> "Allocation":
        pts = tuple(tuple(p) for p in parts)
        if total is None:
            total = DiscreteRv.of(
                tuple(sum((_frac(p[s]) for p in pts), Fraction(0)) for s in range(len(pts[0])))
            )
        return Allocation(pts, total)

    @property
    def n_agents(self) -> int:
        return len(self.parts)

    @cached_property
    def part_rvs(self) -> tuple[DiscreteRv, ...]:
        return tuple(DiscreteRv.of(p) for p in self.parts)


@dataclass(frozen=True)
class TailAssignment:
    """Tail events and their per-agent partitions for a tail allocation."""

    a_states: frozenset[int]
    b_states: frozenset[int]
    parts_a: tuple[frozenset[int], ...]
    parts_b: tuple[frozenset[int], ...]
    beta: Fraction

    @staticmethod
    def empty(n_agents: int) -> "TailAssignment":
        none = tuple(frozenset() for _ in range(n_agents))
        return TailAssignment(frozenset(), frozenset(), none, none, Fraction(0))


def is_comonotonic(a: Allocation) -> bool:
    """Exact membership test for the comonotonic allocation set.

    Equivalent to pairwise alignment of all parts: every part must be
    constant on states where the total ties, and nondecreasing when states
    are ranked by the total.
    """
    fparts = [[_frac(v) for v in p] for p in a.parts]
    ftot = [_frac(v) for v in a.total.values]
    order = sorted(range(a.total.n), key=lambda s: ftot[s])
    for prev, cur in zip(order, order[1:]):
        for vals in fparts:
            if ftot[prev] == ftot[cur]:
                if vals[prev] != vals[cur]:
                    return False
            elif vals[cur] < vals[prev]:
                return False
    return True


def median_interval(X: DiscreteRv) -> tuple[Fraction, Fraction]:
    half = Fraction(1, 2)
    return quantile(X, half, "left"), quantile(X, half, "right")


def _tie_weights(members: frozenset[int], n: int, tie_rule: str) -> list[Fraction]:
    w = [Fraction(0)] * n
    if tie_rule == "equal":
        share = Fraction(1, len(members))
        for i in members:
            w[i] = share
    elif tie_rule == "min":
        w[min(members)] = Fraction(1)
    elif tie_rule == "max":
        w[max(members)] = Fraction(1)
    else:
        raise ParamOutOfRange(f"tie_rule must be one of {TIE_RULES}, got {tie_rule!r}")
    return w


def comonotonic_allocation(
    X: DiscreteRv,
    agents: Sequence[AgentSpec],
    tie_rule: str = "equal",
    probs: Sequence | None = None,
) -> tuple[Allocation, Fraction]:
    """Sum-optimal comonotonic allocation and its aggregate value.

    Each marginal slice of X between consecutive distinct values goes to
    the agents whose weighted distortion attains the lower envelope at that
    slice's survival level, split according to ``tie_rule``.  The aggregate
    welfare equals the Choquet integral of the envelope, exactly.

    ``probs`` switches the survival levels to a non-equiprobable state
    measure; the heterogeneous-beliefs layer is its only caller.
    """
    n = len(agents)
    if n == 0:
        raise ParamOutOfRange("need at least one agent")
    hs = [ag.distortion for ag in agents]
    lams = [ag.weight for ag in agents]
    ones = {lam * dst.value_at_one(h) for h, lam in zip(hs, lams)}
    if len(ones) > 1:
        raise UnboundedProblem(
            "weighted distortion values at 1 differ; cash transfers make the "
            "comonotonic objective unbounded below"
        )
    amap = dst.argmin_sets(hs, lams)
    env = amap.envelope

    fvals = [_frac(v) for v in X.values]
    if probs is None:
        ps = [Fraction(1, X.n)] * X.n
    else:
        ps = [_frac(p) for p in probs]
    mass: dict[Fraction, Fraction] = {}
    for v, p in zip(fvals, ps):
        mass[v] = mass.get(v, Fraction(0)) + p
    distinct = sorted(mass)

    # f_i at the lowest value: the level-1 tie split anchors the constants.
    base_w = _tie_weights(amap.at(1), n, tie_rule)
    f_at: dict[Fraction, list[Fraction]] = {distinct[0]: [w * distinct[0] for w in base_w]}
    surv = Fraction(1)
    for lo, hi in zip(distinct, distinct[1:]):
        surv -= mass[lo]
        w = _tie_weights(amap.at(surv), n, tie_rule)
        prev = f_at[lo]
        f_at[hi] = [prev[i] + w[i] * (hi - lo) for i in range(n)]

    parts = tuple(tuple(f_at[v][i] for v in fvals) for i in range(n))
    alloc = Allocation(parts, X)
    if probs is None:
        value = choquet(env, X)
    else:
        value = choquet_weighted(env, X.values, ps)
    return alloc, value


def _tail_sets(X: DiscreteRv, beta: Fraction) -> tuple[list[int], list[int]]:
    """Top and bottom beta-mass state index lists under the tie-broken order."""
    k = beta * X.n
    assert k.denominator == 1
    k = int(k)
    order = sorted(range(X.n), key=lambda s: (_frac(X.values[s]), s))
    bottom = order[:k]
    top = order[len(order) - k :] if k else []
    return top, bottom


def _partition_sizes(alphas: list[Fraction], beta: Fraction, total: Fraction, n_states: int):
    if total == 0:
        return [0] * len(alphas)
    ratios = [af * beta / total for af in alphas]
    sizes = [r * n_states for r in ratios]
    if any(c.denominator != 1 for c in sizes + [beta * n_states]):
        need = math.lcm(*(r.denominator for r in ratios + [beta]))
        suggested = math.lcm(n_states, need)
        raise GridIncompatible(
            f"tail masses {[str(r) for r in ratios]} are not multiples of 1/{n_states}; "
            f"the state count must be divisible by {need} (e.g. N={suggested})",
            suggested_n=suggested,
        )
    return [int(c) for c in sizes]


def _resolve_tail_frame(X, alphas, lams, cs, a_weights, c):
    """Shared validation for the tail constructors."""
    n = len(alphas)
    alphas = [_frac(a) for a in alphas]
    for a in alphas:
        if not (0 <= a < Fraction(1, 2)):
            raise ParamOutOfRange(f"tail level {a!r} outside [0, 1/2)")
    lams = [Fraction(1)] * n if lams is None else [_frac(l) for l in lams]
    alpha = sum(alphas, Fraction(0))
    beta = min(alpha, Fraction(1, 2))
    sizes = _partition_sizes(alphas, beta, alpha, X.n) if alpha > 0 else [0] * n

    lo, hi = median_interval(X)
    if c is None and cs is not None:
        c = sum((_frac(x) for x in cs), Fraction(0))
    if c is None:
        c = lo
    c = _frac(c)
    if not (lo <= c <= hi):
        raise MedianOutOfRange(f"split constant {c} outside the median interval [{lo}, {hi}]")
    if cs is None:
        cs = [c / n] * n
    else:
        cs = [_frac(x) for x in cs]
        if sum(cs, Fraction(0)) != c:
            raise ParamOutOfRange("per-agent constants must sum to the split constant")

    if a_weights is None:
        lam_min = min(lams)
        winners = [i for i, l in enumerate(lams) if l == lam_min]
        a_weights = [Fraction(1, len(winners)) if i in winners else Fraction(0) for i in range(n)]
    else:
        a_weights = [_frac(a) for a in a_weights]
        if any(a < 0 for a in a_weights) or sum(a_weights, Fraction(0)) != 1:
            raise ParamOutOfRange("middle weights must be nonnegative and sum to 1")
    return alphas, lams, alpha, beta, sizes, c, cs, a_weights


def _assign_tails(top, bottom, sizes, n):
    parts_a, parts_b = [], []
    ia = ib = 0
    for i in range(n):
        parts_a.append(frozenset(top[len(top) - ia - sizes[i] : len(top) - ia]))
        parts_b.append(frozenset(bottom[ib : ib + sizes[i]]))
        ia += sizes[i]
        ib += sizes[i]
    return tuple(parts_a), tuple(parts_b)


def iqd_allocation(
    X: DiscreteRv,
    alphas: Sequence,
    cs: Sequence | None = None,
    a_weights: Sequence | None = None,
    lams: Sequence | None = None,
    c=None,
) -> tuple[Allocation, TailAssignment, Fraction]:
    """Tail allocation for inter-quantile-difference agents.

    Agent i receives the full deviation X - c on its slice of the upper and
    lower beta-tails, the share ``a_weights[i]`` of the deviation in the
    middle, and the constant cs[i].  Defaults: c is the left median, the
    constants split it evenly, and the middle goes entirely to the agents
    with the smallest weight, which makes the allocation attain the
    group optimum sum(lam_i * IQD_{alpha_i}(X_i)) = min(lam) * IQD_{sum alpha}(X).
    """
    n = len(alphas)
    if n == 0:
        raise ParamOutOfRange("need at least one agent")
    alphas, lams, alpha, beta, sizes, c, cs, a_weights = _resolve_tail_frame(
        X, alphas, lams, cs, a_weights, c
    )
    top, bottom = _tail_sets(X, beta)
    parts_a, parts_b = _assign_tails(top, bottom, sizes, n)
    tails = TailAssignment(frozenset(top), frozenset(bottom), parts_a, parts_b, beta)

    in_tail = set(top) | set(bottom)
    fvals = [_frac(v) for v in X.values]
    parts = []
    for i in range(n):
        mine = parts_a[i] | parts_b[i]
        row = []
        for s in range(X.n):
            dev = fvals[s] - c
            if s in mine:
                row.append(dev + cs[i])
            elif s in in_tail:
                row.append(cs[i])
            else:
                row.append(a_weights[i] * dev + cs[i])
        parts.append(tuple(row))
    alloc = Allocation(tuple(parts), X)
    value = sum(
        (lams[i] * iqd(alloc.part_rvs[i], alphas[i]) for i in range(n)), Fraction(0)
    )
    return alloc, tails, value


def _classify_roles(agents: Sequence[AgentSpec]):
    """Split agents into IQD-shaped and concave location-invariant ones."""
    iqd_idx: list[int] = []
    iqd_alpha: dict[int, Fraction] = {}
    iqd_cap: dict[int, Fraction] = {}
    concave_idx: list[int] = []
    for i, ag in enumerate(agents):
        hit = dst.detect_iqd(ag.distortion)
        if hit is not None:
            a, height = hit
            iqd_idx.append(i)
            iqd_alpha[i] = a
            iqd_cap[i] = ag.weight * height
        elif dst.is_concave(ag.distortion) and dst.value_at_one(ag.distortion) == 0:
            concave_idx.append(i)
        else:
            raise NotConcave(
                f"agent {i}: unconstrained sharing is only solved for "
                "inter-quantile-difference agents and concave location-invariant ones"
            )
    return iqd_idx, iqd_alpha, iqd_cap, concave_idx


def _middle_switch_level(h_star: DistortionFunction, alpha: Fraction) -> Fraction:
    """Survival level where min(h*(t-a), h*(t+a)) switches branches.

    The difference h*(t-a) - h*(t+a) is nondecreasing for concave h*, so the
    sign change is an interval; its midpoint is the canonical split level
    (1/2 whenever h* is symmetric).
    """
    left = dst._shifted_with_padding(h_star, alpha)
    right = dst._shifted_with_padding(h_star, -alpha)
    amap = dst.argmin_sets([left, right])
    lo_end, hi_start = alpha, 1 - alpha
    for k in range(len(amap.interval_sets)):
        a, b = amap.breakpoints[k], amap.breakpoints[k + 1]
        if b <= alpha or a >= 1 - alpha:
            continue
        if amap.interval_sets[k] == frozenset({0}):
            lo_end = max(lo_end, min(b, 1 - alpha))
        elif amap.interval_sets[k] == frozenset({1}) and a < hi_start:
            hi_start = min(hi_start, max(a, alpha))
    if hi_start < lo_end:
        lo_end = hi_start
    return (lo_end + hi_start) / 2


def mixed_allocation(
    X: DiscreteRv,
    agents: Sequence[AgentSpec],
    tie_rule: str = "equal",
    c=None,
    cs: Sequence | None = None,
    a_weights: Sequence | None = None,
) -> tuple[Allocation, TailAssignment, Fraction]:
    """Optimal allocation for a mix of IQD agents and concave agents.

    The beta-tails of X go to the IQD agents (pairwise counter-monotonic on
    each tail); the middle band is shared comonotonically under the weighted
    envelope in which each IQD agent appears as its weight capping the
    others.  With the default split constant the aggregate welfare equals
    the Choquet integral of the tail-transformed envelope, exactly.

    The default split constant is the quantile at the branch-switch level
    of the capped envelope; for symmetric envelopes (all the named shapes)
    that is the left median.  A user-supplied ``c`` must lie in the median
    interval.
    """
    n = len(agents)
    if n == 0:
        raise ParamOutOfRange("need at least one agent")
    iqd_idx, iqd_alpha, iqd_cap, concave_idx = _classify_roles(agents)

    if not iqd_idx:
        if a_weights is not None:
            raise ParamOutOfRange("middle weights only apply when trimming agents are present")
        alloc, value = comonotonic_allocation(X, agents, tie_rule)
        return alloc, TailAssignment.empty(n), value
    if not concave_idx:
        alphas = [iqd_alpha[i] for i in range(n)]
        caps = [iqd_cap[i] for i in range(n)]
        return iqd_allocation(X, alphas, cs=cs, a_weights=a_weights, lams=caps, c=c)
    if a_weights is not None:
        raise ParamOutOfRange(
            "middle weights are free parameters of the pure trimming regime only; "
            "the mixed middle is shared comonotonically"
        )

    alpha = sum((iqd_alpha[i] for i in iqd_idx), Fraction(0))
    beta = min(alpha, Fraction(1, 2))
    alphas_all = [iqd_alpha.get(i, Fraction(0)) for i in range(n)]
    sizes = _partition_sizes(
        [alphas_all[i] for i in range(n)], beta, alpha, X.n
    ) if alpha > 0 else [0] * n

    # Inner sharing problem: concave agents keep their distortion, IQD
    # agents enter as a flat cap on (0,1) at their effective weight.
    inner_agents = []
    for i, ag in enumerate(agents):
        if i in iqd_alpha:
            inner_agents.append(AgentSpec(dst.make_named("range"), iqd_cap[i]))
        else:
            inner_agents.append(ag)
    h_star = dst.argmin_sets(
        [a.distortion for a in inner_agents], [a.weight for a in inner_agents]
    ).envelope

    if c is None and cs is None:
        t_star = _middle_switch_level(h_star, alpha)
        c_val = quantile(X, t_star, "left")
    else:
        lo, hi = median_interval(X)
        c_val = _frac(c) if c is not None else sum((_frac(x) for x in cs), Fraction(0))
        if not (lo <= c_val <= hi):
            raise MedianOutOfRange(
                f"split constant {c_val} outside the median interval [{lo}, {hi}]"
            )
    if cs is None:
        cs = [c_val / n] * n
    else:
        cs = [_frac(x) for x in cs]
        if sum(cs, Fraction(0)) != c_val:
            raise ParamOutOfRange("per-agent constants must sum to the split constant")

    top, bottom = _tail_sets(X, beta)
    parts_a, parts_b = _assign_tails(top, bottom, sizes, n)
    tails = TailAssignment(frozenset(top), frozenset(bottom), parts_a, parts_b, beta)
    in_tail = set(top) | set(bottom)

    fvals = [_frac(v) for v in X.values]
    middle_vals = tuple(Fraction(0) if s in in_tail else fvals[s] - c_val for s in range(X.n))
    inner_alloc, _ = comonotonic_allocation(DiscreteRv.of(middle_vals), inner_agents, tie_rule)

    parts = []
    for i in range(n):
        mine = parts_a[i] | parts_b[i]
        row = []
        for s in range(X.n):
            tail_part = fvals[s] - c_val if s in mine else Fraction(0)
            row.append(tail_part + _frac(inner_alloc.parts[i][s]) + cs[i])
        parts.append(tuple(row))
    alloc = Allocation(tuple(parts), X)
    value = sum(
        (agents[i].weight * choquet(agents[i].distortion, alloc.part_rvs[i]) for i in range(n)),
        Fraction(0),
    )
    return alloc, tails, value


# ---------------------------------------------------------------------------
# Comonotonic improvement
# ---------------------------------------------------------------------------


def _upper_hull_values(xs: list[Fraction], ys: list[Fraction]) -> list[Fraction]:
    """Least concave majorant of the points, evaluated back on the same grid."""
    hull: list[int] = []
    for k in range(len(xs)):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # Drop j when it lies on or below the chord from i to k.
            if (ys[j] - ys[i]) * (xs[k] - xs[i]) <= (ys[k] - ys[i]) * (xs[j] - xs[i]):
                hull.pop()
            else:
                break
        hull.append(k)
    out = []
    seg = 0
    for k in range(len(xs)):
        while xs[hull[seg + 1]] < xs[k]:
            seg += 1
        i, j = hull[seg], hull[seg + 1]
        out.append(ys[i] + (ys[j] - ys[i]) * (xs[k] - xs[i]) / (xs[j] - xs[i]))
    return out


def comonotonic_improvement(a: Allocation) -> Allocation:
    """Rearrange an allocation into a comonotonic one, agentwise convex-order smaller.

    Works on the top-sum curves over the mass axis: a part is an increasing
    function of the total iff its top-sum curve is concave, and it is below
    the original part in convex order iff the curve stays under the part's
    own sorted top-sum curve.  Peeling agents one at a time, the least
    concave majorant of (remaining curve minus the other agents' bounds) is
    always feasible: it is concave, respects the bounds, and leaves a
    concave remainder (at a hull vertex the majorant touches the constraint,
    whose slope there drops at least as fast).  States tied in the total are
    first averaged per agent, which only shrinks parts in convex order.
    """
    n = a.n_agents
    ftot = [_frac(v) for v in a.total.values]
    groups: dict[Fraction, list[int]] = {}
    for s, v in enumerate(ftot):
        groups.setdefault(v, []).append(s)
    xs_desc = sorted(groups, reverse=True)
    weights = [len(groups[v]) for v in xs_desc]

    # Mass grid (top-down cumulative state counts) and top-sum curves.
    masses = [Fraction(0)]
    s_curve = [Fraction(0)]
    for v, w in zip(xs_desc, weights):
        masses.append(masses[-1] + w)
        s_curve.append(s_curve[-1] + w * v)
    bounds = []
    for part in a.parts:
        desc = sorted((_frac(v) for v in part), reverse=True)
        prefix = [Fraction(0)]
        for v in desc:
            prefix.append(prefix[-1] + v)
        bounds.append([prefix[int(m)] for m in masses])

    remaining = list(s_curve)
    slopes: list[list[Fraction]] = []
    for i in range(n - 1):
        rest = [sum(bounds[l][j] for l in range(i + 1, n)) for j in range(len(masses))]
        target = [remaining[j] - rest[j] for j in range(len(masses))]
        t_curve = _upper_hull_values(masses, target)
        slopes.append(
            [(t_curve[j + 1] - t_curve[j]) / (masses[j + 1] - masses[j]) for j in range(len(weights))]
        )
        remaining = [remaining[j] - t_curve[j] for j in range(len(masses))]
    slopes.append(
        [(remaining[j + 1] - remaining[j]) / (masses[j + 1] - masses[j]) for j in range(len(weights))]
    )

    parts = []
    for i in range(n):
        row = [Fraction(0)] * a.total.n
        for k, v in enumerate(xs_desc):
            for s in groups[v]:
                row[s] = slopes[i][k]
        parts.append(tuple(row))
    return Allocation(tuple(parts), a.total)


# ---------------------------------------------------------------------------
# Welfare and scenario validation
# ---------------------------------------------------------------------------


def welfare(
    a: Allocation, agents: Sequence[AgentSpec], lams: Sequence | None = None
) -> tuple[tuple[Fraction, ...], Fraction]:
    """Per-agent riskmetric values of an allocation and their weighted sum.

    Agents carrying a belief are evaluated under it; everyone else under
    the equiprobable measure.
    """
    if len(agents) != a.n_agents:
        raise ParamOutOfRange("one agent per part required")
    lams = [ag.weight for ag in agents] if lams is None else [_frac(l) for l in lams]
    per = []
    for ag, part in zip(agents, a.parts):
        if ag.belief is not None:
            probs = getattr(ag.belief, "probs", ag.belief)
            per.append(choquet_weighted(ag.distortion, part, probs))
        else:
            per.append(choquet(ag.distortion, DiscreteRv.of(part)))
    total = sum((l * v for l, v in zip(lams, per)), Fraction(0))
    return tuple(per), total


@dataclass(frozen=True)
class ScenarioReport:
    """Feasibility flags for a sharing problem, from the values h_i(1)."""

    h_at_one: tuple[Fraction, ...]
    mixed_sign: bool
    unequal: bool
    messages: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not (self.mixed_sign or self.unequal)


def validate_scenario(agents: Sequence[AgentSpec]) -> ScenarioReport:
    """Check the sign conditions that make the sharing problem meaningful.

    Mixed signs of h_i(1) rule out Pareto optima outright; equal signs but
    unequal values make the comonotonic group objective unbounded unless
    the distortions are first normalized by |h_i(1)|.
    """
    ones = tuple(dst.value_at_one(ag.distortion) for ag in agents)
    signs = {(v > 0) - (v < 0) for v in ones}
    mixed = len(signs) > 1
    unequal = not mixed and len(set(ones)) > 1
    msgs = []
    if mixed:
        msgs.append(
            "values at 1 mix signs: no Pareto-optimal allocation exists "
            f"(h_i(1) = {[str(v) for v in ones]})"
        )
    if unequal:
        msgs.append(
            "values at 1 are equal-signed but differ: the comonotonic group "
            "objective is unbounded below; normalize each distortion by |h(1)| "
            "to study Pareto optima"
        )
    return ScenarioReport(ones, mixed, unequal, tuple(msgs))
