import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rpdecay import presets
from rpdecay.background import BackgroundSpec
from rpdecay.errors import DomainError, NumericalError, ParamError, ShapeError
from rpdecay.evolve import (
    CharacteristicData, ModeField, NullGrid, convergence_order, convergence_study, derivatives, evolve,
    gaussian_profile,
)
from rpdecay.waveop import residual

MINK = BackgroundSpec.minkowski()
SCHW = presets.background("schwarzschild")


def test_grid_validation():
    with pytest.raises(ParamError):
        NullGrid(0, 0, 0.0, 10, 10)
    with pytest.raises(ParamError):
        NullGrid(0, 0, 0.1, 1, 10)
    g = NullGrid.span(0, 1, 2, 5, 0.25)
    assert (g.Nu, g.Nv) == (5, 13)
    assert g.v1 == pytest.approx(5.0)
    assert g.refine(2).Nv == 25


def test_free_wave_reproduces_two_profile_sum():
    # grid away from r = 0, arbitrary data on both segments
    g = NullGrid.span(0, 10, 20, 60, 0.1)
    rng = np.random.default_rng(3)
    row0 = rng.normal(size=g.Nv)
    col0 = rng.normal(size=g.Nu)
    col0[0] = row0[0]
    f = evolve(MINK, 0, g, CharacteristicData(row0, col0))
    closed = row0[None, :] + col0[:, None] - row0[0]
    assert np.max(np.abs(f.values - closed)) <= 1e-12


def test_dalembert_reflection():
    G = gaussian_profile(1.0, 15.0, 2.0)
    g = NullGrid.span(0, 30, 0, 60, 0.05)
    f = evolve(MINK, 0, g, CharacteristicData.dalembert(G))
    U, V = np.meshgrid(g.u, g.v, indexing="ij")
    mask = V >= U
    assert np.max(np.abs(f.values - (G(V) - G(U)))[mask]) <= 1e-12


def test_corner_compatibility():
    g = NullGrid.span(0, 1, 0, 1, 0.1)
    with pytest.raises(ParamError):
        CharacteristicData(lambda v: v + 1.0, lambda u: u).sample(g)
    with pytest.raises(ShapeError):
        CharacteristicData(np.zeros(3), np.zeros(g.Nu)).sample(g)


def test_domain_and_numerical_errors():
    data = CharacteristicData.gaussian(1.0, 5.0, 1.0)
    with pytest.raises(DomainError):
        evolve(BackgroundSpec.schwarzschild(1.0), 0, NullGrid.span(0, 300, 0, 10, 0.5), data)
    bad = CharacteristicData(lambda v: np.full(v.shape, 1e308), lambda u: np.full(u.shape, 1e308))
    with pytest.raises(NumericalError):
        evolve(SCHW, 2, NullGrid.span(0, 3, 0, 300, 0.5), bad)


def test_schwarzschild_order():
    case = presets.local_case("schwarzschild")
    assert convergence_order(SCHW, 1, case.data, case.grid) == pytest.approx(2.0, abs=0.2)


def test_convergence_order_examples():
    case = presets.local_case("minkowski")
    study = convergence_study(MINK, 0, case.data, case.grid)
    assert study.exact and math.isinf(study.order)
    assert convergence_order(MINK, 2, case.data, case.grid) == pytest.approx(2.0, abs=0.2)
    case = presets.local_case("schwarzschild")
    assert convergence_order(SCHW, 0, case.data, case.grid) == pytest.approx(2.0, abs=0.2)


def test_convergence_needs_callable_data():
    g = NullGrid.span(0, 1, 5, 6, 0.1)
    data = CharacteristicData(np.zeros(g.Nv), np.zeros(g.Nu))
    with pytest.raises(ParamError):
        convergence_order(MINK, 0, data, g)


def test_derivative_examples():
    g = NullGrid.span(0, 5, 10, 20, 0.1)
    V = np.broadcast_to(g.v[None, :], (g.Nu, g.Nv)).copy()
    du, dv = derivatives(ModeField(0, g, V, MINK))
    assert np.max(np.abs(dv - 1.0)) <= 1e-12
    assert np.max(np.abs(du)) == 0.0
    du, dv = derivatives(ModeField(0, g, np.zeros((g.Nu, g.Nv))))
    assert not du.any() and not dv.any()


def test_derivative_second_order():
    G = gaussian_profile(1.0, 15.0, 2.0)

    def err(h):
        g = NullGrid.span(0, 5, 10, 20, h)
        U, V = np.meshgrid(g.u, g.v, indexing="ij")
        _, dv = derivatives(ModeField(0, g, G(V) - G(U)))
        exact = -2 * (V - 15.0) / 4.0 * G(V)
        return np.max(np.abs(dv - exact))

    assert math.log2(err(0.1) / err(0.05)) == pytest.approx(2.0, abs=0.2)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    g = NullGrid.span(0, 8, 0, 24, 0.2)
    d1 = CharacteristicData.gaussian(1.0, 8.0, 2.0)
    d2 = CharacteristicData.bump(1.0, 4.0, 12.0)
    f1 = evolve(SCHW, 1, g, d1).values
    f2 = evolve(SCHW, 1, g, d2).values
    row1, col1 = d1.sample(g)
    row2, col2 = d2.sample(g)
    comb = CharacteristicData(a * row1 + b * row2, a * col1 + b * col2)
    f = evolve(SCHW, 1, g, comb).values
    scale = 1 + abs(a) + abs(b)
    assert np.max(np.abs(f - (a * f1 + b * f2))) <= 1e-12 * scale


@pytest.mark.parametrize("bg", [MINK, SCHW], ids=["minkowski", "schwarzschild"])
@given(k=st.integers(1, 20))
def test_translation_covariance(bg, k):
    g = NullGrid.span(0, 10, 12, 40, 0.1)
    G = gaussian_profile(1.0, 20.0, 2.0)
    corner = float(G(12.0))
    base = evolve(bg, 1, g, CharacteristicData(G, lambda u: np.full(np.shape(u), corner)))
    shifted = CharacteristicData(lambda v: G(v - k * g.h), lambda u: np.full(np.shape(u), corner))
    moved = evolve(bg, 1, g.shift(k), shifted)
    # r on the shifted lattice differs from the original only by rounding
    assert np.max(np.abs(moved.values - base.values)) <= 1e-13


def test_vaidya_junction():
    case = presets.local_case("glued-vaidya")
    f = evolve(case.bg, 0, case.grid, case.data)
    u1 = case.bg.junctions[0]
    i = int(round((u1 - case.grid.u0) / case.grid.h))
    jump = np.max(np.abs(f.values[i + 1] - f.values[i]))
    assert jump <= 10 * case.grid.h * np.max(np.abs(f.dv))
    errs = []
    for h in (0.1, 0.05):
        g = NullGrid.span(0, 20, 0, 40, h)
        errs.append(residual(case.bg, 0, evolve(case.bg, 0, g, case.data)).sup())
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.2)


def test_export_csv(tmp_path):
    g = NullGrid.span(0, 1, 5, 6, 0.5)
    f = evolve(MINK, 0, g, CharacteristicData.gaussian(1.0, 5.5, 1.0, v0=5.0))
    path = tmp_path / "f.csv"
    f.export_csv(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "u,v,r,psi,dpsi_du,dpsi_dv"
    assert len(lines) == 1 + g.Nu * g.Nv
    first = [float(x) for x in lines[1].split(",")]
    assert first[:3] == [0.0, 5.0, 5.0]
