from fractions import Fraction as F

import numpy as np
import pytest

import riskshare as rs
from riskshare.errors import AbsContViolated, DensityViolated


def test_common_measure():
    b1 = rs.BeliefMeasure.of([1, 0])
    b2 = rs.BeliefMeasure.of([0, 1])
    assert rs.common_measure([b1, b2]).probs == (F(1, 2), F(1, 2))
    b3 = rs.BeliefMeasure.of([F(3, 10), F(7, 10)])
    b4 = rs.BeliefMeasure.of([F(1, 2), F(1, 2)])
    assert rs.common_measure([b3, b4]).probs == (F(2, 5), F(3, 5))
    assert rs.common_measure([b3]).probs == b3.probs


def test_transform_two_state_mean():
    X = rs.DiscreteRv.of([1, 0])
    p0 = rs.BeliefMeasure.of([F(3, 10), F(7, 10)])
    p = rs.BeliefMeasure.of([F(1, 2), F(1, 2)])
    g = rs.transform_distortion(rs.make_named("mean"), p0, p, X)
    assert g.eval(F(1, 4)) == 0
    assert g.eval(F(1, 2)) == F(3, 10)
    assert g.eval(F(3, 4)) == F(3, 10)
    assert rs.choquet_weighted(g, X.values, p.probs) == F(3, 10)


def test_transform_identity_belief_samples_h():
    X = rs.DiscreteRv.of([4, 2, 1, 3])
    p = rs.BeliefMeasure.equiprobable(4)
    h = rs.make_named("gd")
    g = rs.transform_distortion(h, p, p, X)
    for k in range(5):
        assert g.eval(F(k, 4)) == h.eval(F(k, 4))


def _random_increasing(rng, X):
    xs = sorted(set(X.values))
    fmap = {xs[0]: F(int(rng.integers(-3, 4)))}
    for a, b in zip(xs, xs[1:]):
        fmap[b] = fmap[a] + F(int(rng.integers(0, 4))) * (F(b) - F(a))
    return [fmap[v] for v in X.values]


def test_transform_identity_for_increasing_transforms():
    rng = np.random.default_rng(17)
    shapes = [
        rs.make_named("gd"),
        rs.make_named("mmd"),
        rs.make_named("iqd", alpha=F(1, 4)),
        rs.make_named("mean"),
        rs.make_named("meanplus", gamma=F(1, 2), inner="gd"),
    ]
    for trial in range(100):
        n = int(rng.integers(2, 9))
        X = rs.DiscreteRv.of([F(int(v)) for v in rng.permutation(n)])
        raw0 = [F(int(x)) for x in rng.integers(1, 6, n)]
        raw1 = [F(int(x)) for x in rng.integers(1, 6, n)]
        p0 = rs.BeliefMeasure.of([r / sum(raw0) for r in raw0])
        p1 = rs.BeliefMeasure.of([r / sum(raw1) for r in raw1])
        common = rs.common_measure([p0, p1])
        h = shapes[trial % len(shapes)]
        g = rs.transform_distortion(h, p0, common, X)
        fX = _random_increasing(rng, X)
        assert rs.choquet_weighted(h, fX, p0.probs) == rs.choquet_weighted(g, fX, common.probs)


def test_transform_errors():
    X = rs.DiscreteRv.of([1, 1, 0])
    p = rs.BeliefMeasure.equiprobable(3)
    with pytest.raises(DensityViolated):
        rs.transform_distortion(rs.make_named("gd"), p, p, X)
    X = rs.DiscreteRv.of([2, 1, 0])
    p0 = rs.BeliefMeasure.of([F(1, 2), F(1, 2), 0])
    p_null = rs.BeliefMeasure.of([0, F(1, 2), F(1, 2)])
    with pytest.raises(AbsContViolated):
        rs.transform_distortion(rs.make_named("gd"), p0, p_null, X)


def test_belief_welfare_equivalence_on_comonotonic_allocations():
    # per-agent welfare under own beliefs equals welfare of the transformed
    # distortions under the common measure, for shared increasing parts
    rng = np.random.default_rng(23)
    n_states = 8
    X = rs.DiscreteRv.of([F(int(v)) for v in rng.permutation(n_states)])
    raws = [[F(int(x)) for x in rng.integers(1, 5, n_states)] for _ in range(3)]
    beliefs = [rs.BeliefMeasure.of([r / sum(raw) for r in raw]) for raw in raws]
    hs = [rs.make_named("gd"), rs.make_named("mmd"), rs.make_named("iqd", alpha=F(1, 4))]
    agents = [rs.AgentSpec(h, 1, b) for h, b in zip(hs, beliefs)]
    common = rs.common_measure(beliefs)
    transformed = [rs.transform_distortion(h, b, common, X) for h, b in zip(hs, beliefs)]
    for alloc in rs.sample_allocations(X, 3, "comonotonic", 20, seed=5):
        for i in range(3):
            direct = rs.choquet_weighted(hs[i], alloc.parts[i], beliefs[i].probs)
            via = rs.choquet_weighted(transformed[i], alloc.parts[i], common.probs)
            assert direct == via


def test_belief_solver_consistency():
    rng = np.random.default_rng(29)
    X = rs.DiscreteRv.of([F(int(v)) for v in rng.permutation(6)])
    beliefs = [
        rs.BeliefMeasure.of([F(1, 6)] * 6),
        rs.BeliefMeasure.of([F(1, 12), F(1, 12), F(1, 6), F(1, 6), F(1, 4), F(1, 4)]),
    ]
    agents = [
        rs.AgentSpec(rs.make_named("gd"), F(2, 3), beliefs[0]),
        rs.AgentSpec(rs.make_named("mmd"), F(1, 3), beliefs[1]),
    ]
    alloc, value, common, transformed = rs.comonotonic_allocation_with_beliefs(X, agents)
    per, tot = rs.welfare(alloc, agents)  # evaluated under each agent's own belief
    assert tot == value
    assert rs.is_comonotonic(alloc)
