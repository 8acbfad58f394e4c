import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from rpdecay.background import (
    BackgroundSpec, angular_eigenvalue, areal_radius, chart, conformal_factor, hyperboloid_time,
    invert_tortoise, metric_sample, potential, tortoise,
)
from rpdecay.errors import DomainError, ParamError

MINK = BackgroundSpec.minkowski()
SCHW = BackgroundSpec.schwarzschild(1.0)
DEEP = BackgroundSpec.schwarzschild(1.0, eps_hor=1e-250)
VAIDYA = BackgroundSpec.glued_vaidya([(-np.inf, 1.0), (0.0, 0.8)], eps_hor=1e-250)


def rstar_oracle(mass, r):
    return r + 2 * mass * math.log(r / (2 * mass) - 1)


def test_areal_radius_examples():
    assert areal_radius(MINK, 1.0, 5.0) == 4.0
    assert areal_radius(SCHW, 0.0, 4.0) == pytest.approx(4.0, abs=1e-12)


def test_vaidya_continuity_at_junction():
    # v with r = 10 just before u1 = 0, from a bisection oracle on patch 0
    v = 0.0 + rstar_oracle(1.0, 10.0)
    before = chart(VAIDYA, 0.0, v, patch=0).r
    after = chart(VAIDYA, 0.0, v, patch=1).r
    r_bis = brentq(lambda r: rstar_oracle(1.0, r) - v, 2.0 + 1e-12, 100.0, xtol=1e-14)
    assert float(before) == pytest.approx(r_bis, abs=1e-10)
    assert abs(float(after) - 10.0) <= 1e-10


def test_junction_continuity_on_a_v_range():
    v = np.linspace(5.0, 400.0, 200)
    u = np.zeros_like(v)
    jump = np.abs(chart(VAIDYA, u, v, patch=0).r - chart(VAIDYA, u, v, patch=1).r)
    assert jump.max() <= 1e-10


def test_domain_errors():
    with pytest.raises(DomainError):
        areal_radius(MINK, 2.0, 1.0)
    with pytest.raises(DomainError):
        tortoise(SCHW, 2.0005)


def test_background_invariants():
    with pytest.raises(ParamError):
        BackgroundSpec("minkowski", mass=1.0)
    with pytest.raises(ParamError):
        BackgroundSpec.schwarzschild(0.0)
    with pytest.raises(ParamError):
        BackgroundSpec.schwarzschild(1.0, d=4)
    with pytest.raises(ParamError):
        BackgroundSpec.glued_vaidya([(-np.inf, 1.0), (0.0, 1.2)])
    with pytest.raises(ParamError):
        BackgroundSpec.glued_vaidya([(-np.inf, 1.0)])
    with pytest.raises(ParamError):
        BackgroundSpec.minkowski(eta_prime=2.0)


def test_tortoise_examples():
    assert tortoise(SCHW, 4.0) == pytest.approx(4.0, abs=1e-14)
    assert tortoise(MINK, 7.0) == 7.0
    # bisection oracle on r*(r) = -20, frozen
    assert invert_tortoise(DEEP, -20.0) == pytest.approx(2.000033402843701, rel=1e-13)


def test_tortoise_clamps_at_truncation():
    assert invert_tortoise(SCHW, -20.0) == pytest.approx(2.001)


@given(st.floats(min_value=2.0 + 1e-2, max_value=1e6))
def test_tortoise_round_trip(r):
    assert invert_tortoise(SCHW, tortoise(SCHW, r)) == pytest.approx(r, rel=1e-12, abs=1e-12)


def test_conformal_factor_examples():
    assert conformal_factor(MINK, 5.0) == 5.0
    assert conformal_factor(BackgroundSpec.minkowski(5), 3.0) == pytest.approx(9.0)
    assert conformal_factor(MINK, 1.0) == 1.0
    with pytest.raises(DomainError):
        conformal_factor(MINK, 0.0)


def test_hyperboloid_time_examples():
    assert hyperboloid_time(3.0, 4.0, 1.0) == pytest.approx(2.8)
    assert hyperboloid_time(0.0, 1.0, 1.0) == pytest.approx(-0.5)
    assert hyperboloid_time(2.0, 1e12, 1.0) == pytest.approx(2.0, abs=1e-11)


@given(st.floats(-100, 100), st.floats(1e-6, 1e8), st.floats(0.1, 1.9))
def test_hyperboloid_time_within_one_of_u(u, r, eta):
    assert abs(hyperboloid_time(u, r, eta) - u) <= 1.0


def test_potential_examples():
    assert potential(MINK, 1, 2.0) == pytest.approx(0.5)
    assert potential(SCHW, 0, 3.0) == pytest.approx(2.0 / 81.0)
    assert potential(BackgroundSpec.minkowski(5), 0, 1.0) == pytest.approx(2.0)


def test_potential_uses_local_patch_mass():
    r = 10.0
    assert potential(VAIDYA, 0, r, u=-1.0) == pytest.approx((1 - 2 / r) * 2 / r**3)
    assert potential(VAIDYA, 0, r, u=1.0) == pytest.approx((1 - 1.6 / r) * 1.6 / r**3)


@given(st.integers(0, 6), st.floats(2.01, 1e5), st.sampled_from(["minkowski", "schwarzschild"]))
def test_potential_nonnegative(ell, r, kind):
    bg = MINK if kind == "minkowski" else SCHW
    assert potential(bg, ell, r) >= 0.0


@pytest.mark.parametrize("bg", [MINK, SCHW])
@pytest.mark.parametrize("ell", [1, 2, 3])
def test_potential_far_field(bg, ell):
    r = 1e4
    lam = angular_eigenvalue(ell, bg.d)
    assert potential(bg, ell, r) == pytest.approx(lam / r**2, rel=1e-3)


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_potential_higher_dimension(ell):
    # d = 5: lambda = ell (ell + 3) plus the (d-1)(d-3)/4 = 2 shift
    r = 3.0
    assert potential(BackgroundSpec.minkowski(5), ell, r) == pytest.approx((ell * (ell + 3) + 2) / r**2)


def test_metric_sample_examples():
    s = metric_sample(MINK, 0.0, 10.0, 1.0)
    assert s.r == 10.0
    assert s.g_uv == -2.0
    assert s.omega == 10.0
    assert s.dtbar_du == pytest.approx(1 - 1 / 121)
    assert s.dtbar_du == pytest.approx(0.991736, abs=1e-6)
    v4 = rstar_oracle(1.0, 4.0)
    assert metric_sample(SCHW, 0.0, v4).g_uv == pytest.approx(-1.0)


def test_dtbar_du_positive_on_grid():
    # scan oracle: every node with r >= 1, eta' <= 1
    u = np.linspace(0, 50, 51)[:, None]
    v = np.linspace(1, 500, 500)[None, :]
    for bg in (MINK, SCHW):
        for eta in (0.5, 1.0):
            geo = chart(bg, u, v, clamp=True)
            q = eta * geo.r ** (eta - 1) / (1 + geo.r**eta) ** 2
            tu = 1 + q * geo.r_u
            assert np.all(tu[geo.r >= 1] > 0)


def test_monotonicity():
    v = np.linspace(3.0, 200.0, 300)
    for bg in (MINK, SCHW):
        r = chart(bg, np.zeros_like(v), v).r
        assert np.all(np.diff(r) > 0)
    u = np.linspace(0.0, 20.0, 100)
    r = chart(SCHW, u, np.full_like(u, 60.0)).r
    t = hyperboloid_time(u, r)
    assert np.all(np.diff(t) > 0)
