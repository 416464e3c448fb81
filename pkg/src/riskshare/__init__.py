"""Distortion riskmetrics and optimal risk sharing on finite state spaces.

The library evaluates signed Choquet integrals for distortion functions of
bounded variation, solves risk-sharing problems in closed form (comonotonic
envelopes, inter-quantile-difference tails, and their mixtures), constructs
the optimal allocations explicitly, and ships independent randomized and
brute-force oracles to verify every closed form.
"""

from .allocate import (
    AgentSpec,
    Allocation,
    ScenarioReport,
    TailAssignment,
    comonotonic_allocation,
    comonotonic_improvement,
    iqd_allocation,
    is_comonotonic,
    median_interval,
    mixed_allocation,
    validate_scenario,
    welfare,
)
from .beliefs import (
    BeliefMeasure,
    common_measure,
    comonotonic_allocation_with_beliefs,
    transform_distortion,
)
from .distortion import (
    ArgminMap,
    DistortionFunction,
    add,
    argmin_sets,
    detect_iqd,
    envelope_min,
    from_spec,
    g_transform,
    is_concave,
    make_named,
    normalize,
    scale,
    total_variation,
    value_at_one,
    zero_distortion,
)
from .infconv import (
    InfconvResult,
    Regime,
    infconv_comonotonic,
    infconv_iqd,
    infconv_mixed,
    welfare_gap,
)
from .riskmetric import (
    DiscreteRv,
    choquet,
    choquet_via_quantiles,
    choquet_weighted,
    convex_order_leq,
    distortion_weights,
    gd,
    integrated_quantile,
    iqd,
    mmd,
    quantile,
)
from .verify import (
    VerificationReport,
    bruteforce_infconv,
    dominance_check,
    monte_carlo_choquet,
    pareto_check,
    sample_allocations,
)

__version__ = "0.1.0"
