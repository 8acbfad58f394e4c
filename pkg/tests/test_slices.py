import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rpdecay import presets
from rpdecay.background import BackgroundSpec
from rpdecay.errors import EmptySlice, ParamError
from rpdecay.evolve import CharacteristicData, ModeField, NullGrid, evolve
from rpdecay.slices import (
    SLICE_HEADER, coarea_weight, cutoff, extract_slice, harvest, harvest_field, slice_roots, smoothstep,
    sup_weighted,
)

MINK = BackgroundSpec.minkowski()
SCHW = presets.background("schwarzschild")

_trapz = getattr(np, "trapezoid", None) or np.trapz


def fixed_point_r(v, tau, eta=1.0):
    r = v - tau
    for _ in range(200):
        r = v - tau - 1.0 / (1.0 + r**eta)
    return r


@pytest.fixture(scope="module")
def schw_field():
    g = NullGrid.span(0, 30, 0, 120, 0.1)
    return evolve(SCHW, 1, g, CharacteristicData.gaussian(1.0, 10.0, 2.0))


def test_root_example():
    g = NullGrid.span(0, 20, 0, 60, 0.1)
    cols, u = slice_roots(MINK, g, 10.0, 1.0, 1.0)
    j = int(np.argmin(np.abs(g.v[cols] - 20.0)))
    r_fp = fixed_point_r(20.0, 10.0)
    assert r_fp == pytest.approx(9.908326913195983, abs=1e-12)  # frozen oracle value
    assert u[j] == pytest.approx(20.0 - r_fp, abs=1e-11)
    assert u[j] == pytest.approx(10.09167, abs=1e-5)


def test_slice_approaches_tau_monotonically():
    g = NullGrid.span(0, 20, 0, 400, 0.1)
    _, u = slice_roots(MINK, g, 10.0, 1.0, 1.0)
    gap = u - 10.0
    assert np.all(gap > 0)
    assert np.all(np.diff(gap) < 0)
    assert gap[-1] < 3e-3


def test_slice_respects_cutoff_floor():
    g = NullGrid.span(0, 20, 0, 100, 0.1)
    cols, u = slice_roots(MINK, g, 10.0, 1.0, 10.0)
    assert np.min(g.v[cols] - u) >= 9.0 - 1e-9


def test_zero_field_slice():
    g = NullGrid.span(0, 20, 0, 60, 0.1)
    f = ModeField(0, g, np.zeros((g.Nu, g.Nv)), SCHW)
    sl = extract_slice(f, 10.0)
    assert len(sl) > 0
    for q in ("psi", "psi_u", "psi_v", "psi_uu", "psi_uv", "psi_vv"):
        assert not getattr(sl, q).any()
    assert sup_weighted(sl, 1.0) == 0.0


def test_empty_slice():
    g = NullGrid.span(0, 20, 0, 60, 0.1)
    f = ModeField(0, g, np.zeros((g.Nu, g.Nv)), MINK)
    with pytest.raises(EmptySlice):
        extract_slice(f, 500.0)


def test_coarea_weight_examples():
    assert coarea_weight(MINK, (0.0, 10.0), 1.0) == pytest.approx(100 * 121 / 120)
    assert coarea_weight(MINK, (0.0, 10.0), 1.0) == pytest.approx(100.8333, abs=1e-4)
    r = 1e7
    assert coarea_weight(MINK, (0.0, r), 1.0) / r**2 == pytest.approx(1.0, abs=1e-12)


def test_coarea_identity():
    # tau-integral of slice integrals against a 2-D quadrature over the lens
    def f(u, v):
        return np.exp(-(((u - 10) / 2) ** 2) - ((v - 40) / 4) ** 2)

    uu = np.linspace(0, 20, 2001)
    vv = np.linspace(20, 60, 4001)
    U, V = np.meshgrid(uu, vv, indexing="ij")
    direct = _trapz(_trapz(f(U, V) * (V - U) ** 2, vv, axis=1), uu)
    g = NullGrid.span(0, 20, 20, 60, 0.02)
    taus = np.arange(-1.0, 21.0, 0.05)
    per = []
    for t in taus:
        cols, u = slice_roots(MINK, g, t, 1.0, 1.0)
        v = g.v[cols]
        per.append(_trapz(f(u, v) * coarea_weight(MINK, (u, v)), v))
    assert _trapz(per, taus) == pytest.approx(direct, rel=1e-6)


def test_sup_weighted_of_omega():
    g = NullGrid.span(0, 20, 0, 80, 0.1)
    U, V = np.meshgrid(g.u, g.v, indexing="ij")
    f = ModeField(0, g, V - U, MINK)  # psi = Omega = r
    sl = extract_slice(f, 10.0)
    assert sup_weighted(sl, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_sup_weighted_decays(schw_field):
    vals = [sup_weighted(extract_slice(schw_field, t, R_cut=3.0), 1.0) for t in (20.0, 25.0, 29.0)]
    assert vals[0] > vals[1] > vals[2]


def test_streaming_matches_stored(schw_field):
    taus = (12.0, 20.0, 27.5)
    hv = harvest(SCHW, 1, schw_field.grid, CharacteristicData.gaussian(1.0, 10.0, 2.0), taus, walls=(40.0,))
    for t in taus:
        a = hv.slices[t]
        b = extract_slice(schw_field, t)
        for q in ("u", "psi", "psi_u", "psi_v", "psi_uu", "psi_uv", "psi_vv"):
            assert np.max(np.abs(getattr(a, q) - getattr(b, q))) <= 1e-13
    u, v, vals = hv.walls[40.0].arrays()
    assert np.allclose(v - u, 40.0)
    assert u.size == schw_field.grid.Nu


def test_slice_values_linear_in_field(schw_field):
    g = schw_field.grid
    other = ModeField(1, g, np.cos(0.1 * g.v)[None, :] * np.ones((g.Nu, 1)), SCHW)
    both = ModeField(1, g, 2.0 * schw_field.values - 3.0 * other.values, SCHW)
    h1 = harvest_field(schw_field, (15.0,)).slices[15.0]
    h2 = harvest_field(other, (15.0,)).slices[15.0]
    h3 = harvest_field(both, (15.0,)).slices[15.0]
    for q in ("psi", "psi_v", "psi_uv"):
        comb = 2.0 * getattr(h1, q) - 3.0 * getattr(h2, q)
        assert np.max(np.abs(getattr(h3, q) - comb)) <= 1e-12


def test_slice_derivatives_second_order():
    G = presets.gaussian_profile(1.0, 30.0, 3.0)

    def err(h):
        g = NullGrid.span(0, 20, 0, 60, h)
        U, V = np.meshgrid(g.u, g.v, indexing="ij")
        sl = extract_slice(ModeField(0, g, G(V) - G(U), MINK), 10.0)
        exact = -2 * (sl.v - 30.0) / 9.0 * G(sl.v)
        return np.max(np.abs(sl.psi_v - exact))

    assert np.log2(err(0.1) / err(0.05)) == pytest.approx(2.0, abs=0.3)


def test_theta_for_rejects_low_radius(schw_field):
    sl = extract_slice(schw_field, 15.0, R_cut=10.0)
    with pytest.raises(ParamError):
        sl.theta_for(5.0)


def test_export_csv(tmp_path, schw_field):
    sl = extract_slice(schw_field, 15.0)
    path = tmp_path / "s.csv"
    sl.export_csv(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == SLICE_HEADER
    assert len(lines) == len(sl) + 1


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.5, 40))
def test_cutoff_bounded_and_monotone(r1, r2, R):
    lo, hi = sorted((r1, r2))
    a, b = cutoff(lo, R), cutoff(hi, R)
    assert 0.0 <= a <= b <= 1.0


def test_smoothstep_ends():
    assert smoothstep(0.0) == 0.0
    assert smoothstep(1.0) == 1.0
    assert smoothstep(0.5) == 0.5
