"""Closed-form group optima as representative distortion functions.

Each solved sharing regime admits a representative agent: a single
distortion function whose Choquet integral of the total equals the optimal
aggregate welfare.  Comonotonic sharing yields the weighted lower envelope;
IQD agents compose by summing their levels and taking the smallest weight;
the mixed regime applies the tail transform to the concave agents'
envelope.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import distortion as dst
from .allocate import AgentSpec, _classify_roles
from .distortion import DistortionFunction, _frac
from .errors import ParamOutOfRange, UnboundedProblem
from .riskmetric import DiscreteRv, choquet, iqd

__all__ = [
    "Regime",
    "InfconvResult",
    "infconv_comonotonic",
    "infconv_iqd",
    "infconv_mixed",
    "welfare_gap",
]


class Regime(enum.Enum):
    COMONOTONIC_ENVELOPE = "comonotonic_envelope"
    IQD_UNCONSTRAINED = "iqd_unconstrained"
    MIXED_UNCONSTRAINED = "mixed_unconstrained"


@dataclass(frozen=True)
class InfconvResult:
    """Representative distortion of a group optimum."""

    representative: DistortionFunction
    regime: Regime

    def value_at(self, X: DiscreteRv) -> Fraction:
        return choquet(self.representative, X)


def infconv_comonotonic(
    hs: Sequence[DistortionFunction], lams: Sequence | None = None
) -> InfconvResult:
    """Optimal comonotonic sharing: the weighted lower envelope.

    Requires all weighted values at 1 to coincide, otherwise cash transfers
    drive the objective to minus infinity.
    """
    hs = list(hs)
    if not hs:
        raise ParamOutOfRange("need at least one agent")
    lams = [Fraction(1)] * len(hs) if lams is None else [_frac(l) for l in lams]
    ones = {l * dst.value_at_one(h) for h, l in zip(hs, lams)}
    if len(ones) > 1:
        raise UnboundedProblem("weighted distortion values at 1 differ")
    env = dst.argmin_sets(hs, lams).envelope
    return InfconvResult(env, Regime.COMONOTONIC_ENVELOPE)


def infconv_iqd(alphas: Sequence, lams: Sequence | None = None) -> InfconvResult:
    """Unconstrained sharing among IQD agents: min-weight IQD at the summed level."""
    alphas = [_frac(a) for a in alphas]
    if not alphas:
        raise ParamOutOfRange("need at least one agent")
    for a in alphas:
        if not (0 <= a < Fraction(1, 2)):
            raise ParamOutOfRange(f"tail level {a!r} outside [0, 1/2)")
    lams = [Fraction(1)] * len(alphas) if lams is None else [_frac(l) for l in lams]
    if any(l < 0 for l in lams):
        raise ParamOutOfRange("weights must be nonnegative")
    total = sum(alphas, Fraction(0))
    if total >= Fraction(1, 2):
        rep = dst.zero_distortion()
    else:
        rep = dst.scale(dst.make_named("iqd", alpha=total), min(lams))
    return InfconvResult(rep, Regime.IQD_UNCONSTRAINED)


def infconv_mixed(agents: Sequence[AgentSpec]) -> InfconvResult:
    """Unconstrained sharing for IQD plus concave location-invariant agents.

    The representative is the tail transform of the concave agents' weighted
    envelope, at the summed IQD level, capped by the smallest IQD weight.
    Degenerate role sets delegate: no IQD agents reduces to the comonotonic
    envelope, no concave agents to the pure IQD formula.
    """
    agents = list(agents)
    if not agents:
        raise ParamOutOfRange("need at least one agent")
    iqd_idx, iqd_alpha, iqd_cap, concave_idx = _classify_roles(agents)
    if not iqd_idx:
        return infconv_comonotonic([a.distortion for a in agents], [a.weight for a in agents])
    if not concave_idx:
        return infconv_iqd(
            [iqd_alpha[i] for i in iqd_idx], [iqd_cap[i] for i in iqd_idx]
        )
    env = dst.argmin_sets(
        [agents[i].distortion for i in concave_idx],
        [agents[i].weight for i in concave_idx],
    ).envelope
    alpha = sum((iqd_alpha[i] for i in iqd_idx), Fraction(0))
    cap = min(iqd_cap[i] for i in iqd_idx)
    rep = dst.g_transform(env, alpha, cap)
    return InfconvResult(rep, Regime.MIXED_UNCONSTRAINED)


def welfare_gap(X: DiscreteRv, alphas: Sequence, lams: Sequence | None = None) -> Fraction:
    """Comonotonic-minus-unconstrained optimum for IQD agents.

    Always nonnegative; strictly positive on grids with distinct values when
    at least two levels are interior, since the comonotonic optimum keeps
    the largest single level while the unconstrained one sums them.
    """
    alphas = [_frac(a) for a in alphas]
    lams = [Fraction(1)] * len(alphas) if lams is None else [_frac(l) for l in lams]
    for a in alphas:
        if not (0 <= a < Fraction(1, 2)):
            raise ParamOutOfRange(f"tail level {a!r} outside [0, 1/2)")
    lam = min(lams)
    return lam * (iqd(X, max(alphas)) - iqd(X, sum(alphas, Fraction(0))))
