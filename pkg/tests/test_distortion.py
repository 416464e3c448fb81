from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import riskshare as rs
from riskshare.errors import DomainError, NotConcave, ParamOutOfRange


def test_named_values():
    gd = rs.make_named("gd")
    assert gd.eval(F(1, 2)) == F(1, 4)
    assert gd.eval(0) == 0
    assert gd.eval(F(1, 4)) == F(3, 16)  # 1/4 - 1/16
    mmd = rs.make_named("mmd")
    assert mmd.eval(F(1, 2)) == F(1, 2)
    mp = rs.make_named("meanplus", gamma=F(1, 2), inner="gd")
    assert mp.eval(1) == 1
    assert mp.eval(F(1, 2)) == F(1, 2) + F(1, 8)


def test_iqd_open_interval():
    h = rs.make_named("iqd", alpha=F(3, 10))
    assert h.eval(F(3, 10)) == 0
    assert h.eval(F(31, 100)) == 1
    assert h.eval(F(7, 10)) == 0
    assert h.eval(F(1, 2)) == 1
    with pytest.raises(ParamOutOfRange):
        rs.make_named("iqd", alpha=F(1, 2))
    with pytest.raises(ParamOutOfRange):
        rs.make_named("iqd", alpha=-0.1)


def test_eval_domain():
    with pytest.raises(DomainError):
        rs.make_named("gd").eval(1.5)


def test_scale_add_normalize():
    gd, mean = rs.make_named("gd"), rs.make_named("mean")
    assert rs.normalize(rs.scale(mean, 2)) == mean
    assert rs.normalize(gd) == gd
    assert rs.add(rs.scale(gd, F(1, 2)), mean) == rs.make_named("meanplus", gamma=F(1, 2), inner="gd")
    for h in (gd, mean, rs.scale(mean, 3), rs.scale(gd, 7)):
        assert rs.value_at_one(rs.normalize(h)) in (F(-1), F(0), F(1))
    with pytest.raises(ParamOutOfRange):
        rs.scale(gd, -1)


def test_envelope_crossings_insurance_pair():
    env = rs.envelope_min([rs.scale(rs.make_named("gd"), F(3, 5)), rs.scale(rs.make_named("mmd"), F(2, 5))])
    assert F(1, 3) in env.breakpoints
    assert F(2, 3) in env.breakpoints


def test_envelope_three_mixed_agents_first_crossing():
    # lam_1 h_1 = lam_2 h_2 solved by hand: linear terms cancel to t = 4/33
    lams = [F(31, 100), F(32, 100), F(37, 100)]
    hs = [rs.make_named("mix", a=a) for a in (F(1, 4), F(1, 2), F(3, 4))]
    env = rs.envelope_min([rs.scale(h, l) for h, l in zip(hs, lams)])
    interior = [b for b in env.breakpoints if 0 < b < 1]
    assert interior[0] == F(4, 33)
    assert abs(float(interior[0]) - 0.1212) < 1e-3


def test_envelope_singleton_and_laws():
    gd, mmd = rs.make_named("gd"), rs.make_named("mmd")
    assert rs.envelope_min([gd]) == gd
    assert rs.envelope_min([gd, gd]) == gd
    assert rs.envelope_min([gd, mmd]) == rs.envelope_min([mmd, gd])
    a = rs.envelope_min([rs.envelope_min([gd, mmd]), rs.make_named("mean")])
    b = rs.envelope_min([gd, rs.envelope_min([mmd, rs.make_named("mean")])])
    assert a == b


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_envelope_pointwise_min(t):
    hs = [
        rs.scale(rs.make_named("gd"), F(3, 5)),
        rs.scale(rs.make_named("mmd"), F(2, 5)),
        rs.scale(rs.make_named("iqd", alpha=F(1, 5)), F(1, 10)),
    ]
    env = rs.envelope_min(hs)
    assert env.eval(t) == min(h.eval(t) for h in hs)


def test_envelope_pointwise_min_dense_grid():
    rng = np.random.default_rng(0)
    hs = [
        rs.make_named("mix", a=F(1, 3)),
        rs.scale(rs.make_named("gd"), F(4, 5)),
        rs.scale(rs.make_named("iqd", alpha=F(1, 8)), F(1, 5)),
    ]
    env = rs.envelope_min(hs)
    for t in rng.random(10_000):
        tf = F(float(t))
        assert env.eval(tf) == min(h.eval(tf) for h in hs)


def test_argmin_sets():
    gd, mmd = rs.make_named("gd"), rs.make_named("mmd")
    amap = rs.argmin_sets([gd, gd])
    assert all(s == frozenset({0, 1}) for s in amap.interval_sets)

    amap = rs.argmin_sets([gd, mmd], [F(3, 5), F(2, 5)])
    assert amap.at(F(1, 6)) == frozenset({1})
    assert amap.at(F(1, 2)) == frozenset({0})
    assert amap.at(F(5, 6)) == frozenset({1})
    assert amap.at(F(1, 3)) == frozenset({0, 1})

    # unweighted GD sits strictly below MMD on all of (0,1)
    amap = rs.argmin_sets([gd, mmd])
    assert amap.at(F(1, 4)) == frozenset({0})
    assert amap.at(F(1, 2)) == frozenset({0})
    assert amap.at(0) == frozenset({0, 1})


def test_g_transform():
    mmd = rs.make_named("mmd")
    g = rs.g_transform(mmd, F(1, 4), 10)
    assert g.eval(F(1, 2)) == F(1, 4)
    assert g.eval(F(1, 4)) == 0
    assert g.eval(F(1, 8)) == 0
    assert rs.g_transform(mmd, F(3, 5), 1) == rs.zero_distortion()
    for h in (rs.make_named("gd"), mmd, rs.make_named("range")):
        assert rs.g_transform(h, 0, None) == h
    with pytest.raises(NotConcave):
        rs.g_transform(rs.make_named("iqd", alpha=F(1, 4)), F(1, 10), 1)
    with pytest.raises(NotConcave):
        rs.g_transform(rs.make_named("mean"), F(1, 10), 1)  # h(1) != 0


def test_g_transform_bounds():
    h = rs.make_named("mix", a=F(2, 5))
    alpha, lam = F(1, 8), F(1, 20)
    g = rs.g_transform(h, alpha, lam)
    rng = np.random.default_rng(1)
    for t in rng.random(2000):
        tf = F(float(t))
        v = g.eval(tf)
        assert v <= lam
        if tf <= alpha or tf >= 1 - alpha:
            assert v == 0
        else:
            assert v <= h.eval(tf - alpha)


def test_g_transform_of_range_is_iqd():
    # canonicalization: two construction paths, identical representation
    alpha = F(1, 5)
    assert rs.g_transform(rs.make_named("range"), alpha, None) == rs.make_named("iqd", alpha=alpha)


def test_concavity_and_variation():
    assert rs.is_concave(rs.make_named("gd"))
    assert rs.is_concave(rs.make_named("mmd"))
    assert rs.is_concave(rs.make_named("range"))
    assert rs.is_concave(rs.make_named("meanplus", gamma=2, inner="mmd"))
    assert not rs.is_concave(rs.make_named("iqd", alpha=F(1, 4)))
    assert rs.total_variation(rs.make_named("iqd", alpha=F(1, 4))) == 2
    assert rs.total_variation(rs.make_named("gd")) == F(1, 2)
    assert rs.total_variation(rs.make_named("mean")) == 1


def test_detect_iqd():
    assert rs.detect_iqd(rs.make_named("iqd", alpha=F(1, 5))) == (F(1, 5), F(1))
    assert rs.detect_iqd(rs.scale(rs.make_named("iqd", alpha=F(1, 5)), 3)) == (F(1, 5), F(3))
    assert rs.detect_iqd(rs.make_named("range")) == (F(0), F(1))
    assert rs.detect_iqd(rs.make_named("gd")) is None
    assert rs.detect_iqd(rs.zero_distortion()) is None


def test_record_round_trip():
    for h in (
        rs.make_named("gd"),
        rs.make_named("iqd", alpha=F(1, 4)),
        rs.scale(rs.make_named("mix", a=F(1, 3)), F(7, 11)),
        rs.g_transform(rs.make_named("mmd"), F(1, 8), F(1, 16)),
    ):
        assert rs.DistortionFunction.from_record(h.to_record()) == h


def test_from_spec_strings():
    assert rs.from_spec("gd") == rs.make_named("gd")
    assert rs.from_spec("iqd:1/4") == rs.make_named("iqd", alpha=F(1, 4))
    assert rs.from_spec("iqd:0.25") == rs.make_named("iqd", alpha=F(1, 4))
    assert rs.from_spec("mix:a=0.5:gd+mmd") == rs.make_named("mix", a=F(1, 2))
    assert rs.from_spec("meanplus:g=0.5:gd") == rs.make_named("meanplus", gamma=F(1, 2), inner="gd")
    with pytest.raises(ParamOutOfRange):
        rs.from_spec("nope")


def test_h_at_zero_enforced():
    with pytest.raises(ParamOutOfRange):
        rs.DistortionFunction.build((0, 1), ((0, 1, 0),), (1, 1))
