import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from rpdecay import hardy as hd
from rpdecay.errors import ParamError
from rpdecay.verify import hardy_sharpness, hardy_suite

NAMES = [f.name for f in hd.FAMILY]


def normalized(kind, tf, **params):
    lhs, rhs, C = hd.evaluate(kind, tf, **params)
    return hd.ratio(lhs, rhs)[0] / C


def test_c1_constant_example():
    lhs, rhs, C = hd.hardy_c1(hd.family_function("const"), 1.0, 5.0)
    assert lhs == pytest.approx(5.0) and rhs == pytest.approx(5.0)
    assert C == 4.0
    assert lhs / rhs / C == pytest.approx(0.25)


def test_c2_constant_example():
    # lhs = int r^-2 c^2 r^2 dr + R1 c^2 = c^2 R2 and rhs = R2^-1 c^2 R2^2 = c^2 R2
    c = 3.0
    tf = hd.TestFunction("c", lambda r: (c * np.ones_like(r), np.zeros_like(r), np.zeros_like(r)), (0, np.inf, np.inf))
    lhs, rhs, C = hd.hardy_c2(tf, 10.0, 100.0, k=1, d=3, a=0.0)
    assert lhs == pytest.approx(c * c * 100.0)
    assert rhs == pytest.approx(c * c * 100.0)
    assert C == 4.0


def test_c1_matches_adaptive_quadrature():
    tf = hd.family_function("gaussian(20,3)")
    lhs, rhs, _ = hd.hardy_c1(tf, 10.0, 60.0, "x^2")
    f = lambda x: tf(x)[0]  # noqa: E731
    fp = lambda x: tf(x)[1]  # noqa: E731
    lhs_q = quad(lambda x: 2 * x * f(x) ** 2, 10, 60, points=[20], limit=200)[0] + 100 * f(10.0) ** 2
    rhs_q = quad(lambda x: x**4 / (2 * x) * fp(x) ** 2, 10, 60, points=[20], limit=200)[0] + 3600 * f(60.0) ** 2
    assert lhs == pytest.approx(lhs_q, rel=1e-6)
    assert rhs == pytest.approx(rhs_q, rel=1e-6)


def test_constants():
    assert hd.hardy_constant(1, 3, 0.0) == 4.0
    assert hd.hardy_constant(2, 3, 1.0) == 4.0  # only one level: floor((3 - 1 + 1)/2) = 1
    assert hd.hardy_constant(2, 5, 0.0) == 20.0
    with pytest.raises(ParamError):
        hd.hardy_constant(1, 2, 0.0)


def test_c4_inverse_log():
    tf = hd.family_function("1/log r")
    assert hd.c4_applicable(tf)
    assert normalized("C4", tf, R=10.0) <= 1.0


def test_c4_sharpness_approaches_bound():
    vals = [hardy_sharpness(R0).extras["normalized"] for R0 in (1e2, 1e4, 1e6)]
    assert vals[0] < vals[1] < vals[2]
    assert vals[2] >= 0.5
    # limit of the probe family: sqrt(3) log 2 / 2
    assert vals[2] < math.sqrt(3) * math.log(2) / 2


def test_applicability():
    assert not hd.applicable("C1", hd.family_function("1/log r"), a=1.0, b=5.0)
    assert hd.applicable("C1", hd.family_function("1/log r"), a=2.0, b=5.0)
    assert not hd.applicable("C3", hd.family_function("const"), k=1, d=3, a=0.0)
    assert hd.applicable("C3", hd.family_function("r^-1"), k=1, d=3, a=0.0)
    assert not hd.applicable("C4", hd.family_function("sin r/r"))
    assert hd.applicable("C4", hd.family_function("r^-2"))


def test_vacuous_ratio():
    assert hd.ratio(0.0, 0.0) == (0.0, True)
    assert hd.ratio(1.0, 2.0) == (0.5, False)
    assert hd.ratio(1.0, 0.0) == (math.inf, False)


def test_errors():
    with pytest.raises(ParamError):
        hd.family_function("nope")
    with pytest.raises(ParamError):
        hd.evaluate("C9", hd.family_function("const"))
    with pytest.raises(ParamError):
        hd.hardy_c1(hd.family_function("const"), 5.0, 1.0)
    with pytest.raises(ParamError):
        hd.hardy_c1(hd.family_function("const"), weight="x^3")
    with pytest.raises(ParamError):
        hd.hardy_c2(hd.family_function("const"), k=3)


def test_suite_all_within_constant():
    reps = hardy_suite()
    assert len(reps) > 300
    assert max(r.extras["normalized"] for r in reps) <= 1.0


# property: every applicable family member, over random parameters ------------------

@given(st.sampled_from(NAMES), st.sampled_from(list(hd.C1_WEIGHTS)), st.floats(0.5, 20.0), st.floats(0.5, 50.0))
def test_c1_family(name, weight, a, span):
    tf = hd.family_function(name)
    params = dict(a=a, b=a + span, weight=weight)
    if hd.applicable("C1", tf, **params):
        assert normalized("C1", tf, **params) <= 1.0


@given(st.sampled_from(NAMES), st.sampled_from([1, 2]), st.sampled_from([3, 4, 5]), st.floats(0.0, 1.0),
       st.floats(2.0, 20.0), st.floats(1.5, 20.0))
def test_c2_family(name, k, d, a, R1, factor):
    tf = hd.family_function(name)
    params = dict(R1=R1, R2=R1 * factor, k=k, d=d, a=a)
    if hd.applicable("C2", tf, **params):
        assert normalized("C2", tf, **params) <= 1.0


@given(st.sampled_from(NAMES), st.sampled_from([1, 2]), st.floats(0.0, 1.0), st.floats(2.0, 30.0))
def test_c3_family(name, k, a, R1):
    tf = hd.family_function(name)
    params = dict(R1=R1, k=k, d=3, a=a)
    if hd.applicable("C3", tf, **params):
        assert normalized("C3", tf, **params) <= 1.0


@given(st.sampled_from(NAMES), st.floats(2.0, 1e6))
def test_c4_family(name, R):
    tf = hd.family_function(name)
    if hd.applicable("C4", tf, R=R):
        assert normalized("C4", tf, R=R) <= 1.0
