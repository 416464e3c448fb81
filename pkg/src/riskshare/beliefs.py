"""Heterogeneous beliefs for comonotonic sharing.

Agents may disagree on the state probabilities.  On a finite space the fix
is a change of distortion, not of allocation machinery: average the beliefs
into a common measure, then rewrite each agent's distortion as a staircase
over the common measure's survival levels of the total loss.  Evaluating
the transformed distortion under the common measure reproduces the agent's
original riskmetric exactly for every risk comonotonic with the total.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .allocate import AgentSpec, Allocation, comonotonic_allocation
from .distortion import DistortionFunction, _frac
from .errors import AbsContViolated, DensityViolated, IncompatibleGrids, ParamOutOfRange
from .riskmetric import DiscreteRv

__all__ = [
    "BeliefMeasure",
    "common_measure",
    "transform_distortion",
    "comonotonic_allocation_with_beliefs",
]


@dataclass(frozen=True)
class BeliefMeasure:
    """Per-state probabilities on the shared grid."""

    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.probs):
            raise ParamOutOfRange("probabilities must be nonnegative")
        if sum(self.probs, Fraction(0)) != 1:
            raise ParamOutOfRange("probabilities must sum to 1")

    @staticmethod
    def of(probs) -> "BeliefMeasure":
        return BeliefMeasure(tuple(_frac(p) for p in probs))

    @staticmethod
    def equiprobable(n: int) -> "BeliefMeasure":
        return BeliefMeasure(tuple(Fraction(1, n) for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.probs)


def common_measure(beliefs: Sequence[BeliefMeasure]) -> BeliefMeasure:
    """Arithmetic average of the beliefs.

    Every input is absolutely continuous with respect to the average, which
    is all the transform below needs.
    """
    beliefs = list(beliefs)
    if not beliefs:
        raise ParamOutOfRange("need at least one belief")
    n = beliefs[0].n
    if any(b.n != n for b in beliefs):
        raise IncompatibleGrids("beliefs live on different state grids")
    k = len(beliefs)
    return BeliefMeasure(
        tuple(sum((b.probs[s] for b in beliefs), Fraction(0)) / k for s in range(n))
    )


def transform_distortion(
    h: DistortionFunction, p0: BeliefMeasure, p: BeliefMeasure, X: DiscreteRv
) -> DistortionFunction:
    """Rewrite (h under p0) as a staircase distortion under p, pinned to X.

    The staircase samples h at p0-survival masses of X's upper level sets,
    placed at the matching p-survival levels.  The identity
    choquet_weighted(g, f(X), p) == choquet_weighted(h, f(X), p0) then holds
    exactly for every increasing f.  Requires p0 << p on charged states and
    distinct X values wherever p charges (the grid stand-in for a density).
    """
    if not (p0.n == p.n == X.n):
        raise IncompatibleGrids("belief grids must match the state grid")
    for s in range(X.n):
        if p0.probs[s] > 0 and p.probs[s] == 0:
            raise AbsContViolated(f"belief charges state {s} that the common measure misses")
    charged = [s for s in range(X.n) if p.probs[s] > 0]
    fvals = {s: _frac(X.values[s]) for s in charged}
    if len({fvals[s] for s in charged}) != len(charged):
        raise DensityViolated("total loss has tied values on charged states")

    order = sorted(charged, key=lambda s: fvals[s], reverse=True)
    breakpoints = [Fraction(0)]
    seg_values = []
    surv_p, surv_p0 = Fraction(0), Fraction(0)
    for s in order:
        seg_values.append(h.eval(surv_p0))
        surv_p += p.probs[s]
        surv_p0 += p0.probs[s]
        if surv_p < 1:
            breakpoints.append(surv_p)
    breakpoints.append(Fraction(1))
    coeffs = [(v, Fraction(0), Fraction(0)) for v in seg_values]
    point_values = seg_values + [h.point_values[-1]]
    return DistortionFunction.build(breakpoints, coeffs, point_values)


def comonotonic_allocation_with_beliefs(
    X: DiscreteRv, agents: Sequence[AgentSpec], tie_rule: str = "equal"
) -> tuple[Allocation, Fraction, BeliefMeasure, tuple[DistortionFunction, ...]]:
    """Comonotonic sharing with per-agent beliefs.

    Builds the averaged common measure, transforms every distortion, and
    solves the ordinary weighted-envelope problem under the common measure.
    Returns the allocation, its aggregate value, the common measure and the
    transformed distortions.
    """
    agents = list(agents)
    beliefs = [
        ag.belief if isinstance(ag.belief, BeliefMeasure)
        else BeliefMeasure.of(ag.belief) if ag.belief is not None
        else BeliefMeasure.equiprobable(X.n)
        for ag in agents
    ]
    common = common_measure(beliefs)
    transformed = tuple(
        transform_distortion(ag.distortion, b, common, X) for ag, b in zip(agents, beliefs)
    )
    plain = [AgentSpec(g, ag.weight) for g, ag in zip(transformed, agents)]
    alloc, value = comonotonic_allocation(X, plain, tie_rule, probs=common.probs)
    return alloc, value, common, transformed
