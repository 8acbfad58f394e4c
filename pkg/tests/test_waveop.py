import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rpdecay import presets
from rpdecay.background import BackgroundSpec, tortoise
from rpdecay.errors import ShapeError, UnsupportedError
from rpdecay.evolve import ModeField, NullGrid, evolve, gaussian_profile
from rpdecay.waveop import (
    commutator_order, commuted_correction_dsigma, commuted_correction_du, commuted_correction_dv,
    err_constant, err_envelope, main_sum_dv, residual,
)

MINK = BackgroundSpec.minkowski()
SCHW = presets.background("schwarzschild")
CORRECTIONS = (commuted_correction_dv, commuted_correction_du, commuted_correction_dsigma)


@pytest.fixture(scope="module")
def mink_l1():
    case = presets.local_case("minkowski")
    f = evolve(MINK, 1, case.grid, case.data)
    U, V = np.meshgrid(case.grid.u, case.grid.v, indexing="ij")
    return f, V - U


def test_free_wave_residual_vanishes():
    G = gaussian_profile(1.0, 20.0, 3.0)
    g = NullGrid.span(0, 10, 12, 40, 0.1)
    U, V = np.meshgrid(g.u, g.v, indexing="ij")
    f = ModeField(0, g, G(V) - G(U), MINK)
    assert residual(MINK, 0, f).sup() <= 1e-12


def test_zero_field_zero_everything():
    g = NullGrid.span(0, 5, 10, 20, 0.1)
    f = ModeField(1, g, np.zeros((g.Nu, g.Nv)), SCHW)
    assert residual(SCHW, 1, f).sup() == 0.0
    for fn in CORRECTIONS:
        assert not fn(SCHW, 1, 1, f).any()


def test_shape_error():
    g = NullGrid.span(0, 5, 10, 20, 0.1)
    f = ModeField(0, g, np.zeros((g.Nu, g.Nv)), MINK)
    f.values = np.zeros((3, 3))
    with pytest.raises(ShapeError):
        residual(MINK, 0, f)


def test_spec_residual_second_order():
    # the diamond update solves a slightly different cell equation; the
    # centred operator sees a truncation error that shrinks by 4 per halving
    case = presets.local_case("schwarzschild")
    errs = []
    for h in (0.1, 0.05):
        g = NullGrid.span(0, 20, 0, 40, h)
        errs.append(residual(SCHW, 0, evolve(SCHW, 0, g, case.data)).sup())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_dv_correction_examples(mink_l1):
    f, r = mink_l1
    assert not commuted_correction_dv(MINK, 0, 1, evolve(MINK, 0, f.grid, presets.local_case("minkowski").data)).any()
    assert np.max(np.abs(commuted_correction_dv(MINK, 1, 1, f) + 4 * r**-3 * f.values)) <= 1e-15
    assert np.max(np.abs(main_sum_dv(MINK, 1, 1, f) + 4 * r**-3 * f.values)) <= 1e-15


def test_dsigma_correction_examples(mink_l1):
    f, r = mink_l1
    du, dv = f.derivatives()
    Psi = math.sqrt(2.0)
    expected = Psi * (r**-2 * (du - dv) + 2 * r**-3 * f.values)
    assert np.max(np.abs(commuted_correction_dsigma(MINK, 1, 1, f) - expected)) <= 1e-15
    f0 = ModeField(0, f.grid, f.values, MINK)
    assert not commuted_correction_dsigma(MINK, 0, 1, f0).any()
    assert not commuted_correction_dsigma(SCHW, 0, 2, ModeField(0, f.grid, f.values, SCHW)).any()


def test_du_correction(mink_l1):
    f, r = mink_l1
    assert not commuted_correction_du(MINK, 0, 1, ModeField(0, f.grid, f.values, MINK)).any()
    # ell >= 1: d_u of the angular term lambda r^-2 is kept (+4 r^-3 psi for ell = 1)
    assert np.max(np.abs(commuted_correction_du(MINK, 1, 1, f) - 4 * r**-3 * f.values)) <= 1e-15


@pytest.mark.parametrize("fn", CORRECTIONS)
def test_l_above_two_unsupported(fn, mink_l1):
    with pytest.raises(UnsupportedError):
        fn(MINK, 1, 3, mink_l1[0])


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2), st.integers(1, 2))
def test_linearity(a, b, ell, l):
    g = NullGrid.span(0, 4, 10, 16, 0.2)
    rng = np.random.default_rng(ell + 10 * l)
    x, y = rng.normal(size=(2, g.Nu, g.Nv))
    fx, fy, fz = (ModeField(ell, g, z, SCHW) for z in (x, y, a * x + b * y))
    ops = [lambda f: residual(SCHW, ell, f).values] + [lambda f, fn=fn: fn(SCHW, ell, l, f) for fn in CORRECTIONS]
    for op in ops:
        lhs = op(fz)
        rhs = a * op(fx) + b * op(fy)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))


@pytest.mark.parametrize("kind,ell", [("dv", 1), ("du", 0), ("dsigma", 1)])
def test_commuted_identity_closure_schwarzschild(kind, ell):
    case = presets.commutator_case("schwarzschild")
    st_ = commutator_order(SCHW, ell, case.data, case.grid, kind, 1, case.region)
    assert st_.order >= 1.8


def test_minkowski_l0_dv_closure_exact():
    case = presets.commutator_case("minkowski")
    assert commutator_order(MINK, 0, case.data, case.grid, "dv", 1, case.region).exact


def test_err_envelope_minkowski_zero():
    slots = err_envelope(MINK, 0.0, 10.0)
    assert len(slots) == 9
    assert all(s.actual == 0.0 for s in slots)
    zeroth = next(s for s in slots if s.name == "0")
    assert zeroth.envelope == pytest.approx(1e-3)


def test_err_envelope_schwarzschild_shape():
    # the only live slot is 2M f r^-3; its constant stays at 2M f <= 2M
    rs = np.array([10.0, 100.0, 1e3, 1e4])
    consts = []
    for r in rs:
        slots = err_envelope(SCHW, 0.0, tortoise(SCHW, r))
        live = [s for s in slots if s.actual != 0.0]
        assert [s.name for s in live] == ["0"]
        assert live[0].actual == pytest.approx(2 * (1 - 2 / r) / r**3)
        consts.append(err_constant(SCHW, 0.0, tortoise(SCHW, r)))
    assert max(consts) <= 2.0
    assert np.all(np.diff(consts) >= 0)
