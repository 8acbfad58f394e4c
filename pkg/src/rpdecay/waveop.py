"""Discrete mode operator, commuted equations and the Err-term envelope.

Sign conventions.  ``residual`` evaluates R[psi] = d_u d_v psi + W psi on
cell centres.  The conformal wave operator acting on one mode is -R, and
the commutator corrections below are quoted for that operator:

    -R[D^l psi] = D^l(-R[psi]) + correction.
"""

import math
from dataclasses import dataclass

import numpy as np

from .background import (
    angular_eigenvalue,
    chart,
    dim_shift,
    mode_coefficient_derivs,
)
from .errors import ShapeError, UnsupportedError
from .evolve import _reflect_offset, cell_coefficients, derivatives, diag_coefficients, evolve


@dataclass(frozen=True)
class OperatorResidual:
    values: np.ndarray
    grid: object
    scheme_order: int = 2

    def sup(self, region=None):
        return float(np.max(np.abs(region_view(self.grid, self.values, region))))


def _cell_W(bg, ell, grid):
    h = grid.h
    if bg.static:
        diag = _reflect_offset(bg, grid)
        cdiag = diag_coefficients(bg, ell, grid, reflect=diag)
        i = np.arange(grid.Nu - 1)[:, None]
        j = np.arange(grid.Nv - 1)[None, :]
        c = cdiag[j - i + grid.Nu - 2]
        if diag is not None:
            c = np.where(j - i - diag > 0, c, 0.0)
        return 2.0 * c / h**2
    return 2.0 * cell_coefficients(bg, ell, grid, 0, grid.Nu - 1) / h**2


def _operator(values, w_cell, h):
    s, e = values[:-1, :-1], values[:-1, 1:]
    w, n = values[1:, :-1], values[1:, 1:]
    return (n - e - w + s) / h**2 + w_cell * 0.25 * (n + e + w + s)


def residual(bg, ell, field):
    """R[psi] on cell centres, shape (Nu-1, Nv-1)."""
    g = field.grid
    if field.values.shape != (g.Nu, g.Nv):
        raise ShapeError("field values do not match the grid")
    vals = _operator(field.values, _cell_W(bg, ell, g), g.h)
    return OperatorResidual(vals, g)


def region_view(grid, cell_values, region):
    """Restrict a cell-centred array to centres inside (u_a, u_b, v_a, v_b)."""
    if region is None:
        return cell_values
    ua, ub, va, vb = region
    uc = grid.u0 + (np.arange(cell_values.shape[0]) + 0.5) * grid.h
    vc = grid.v0 + (np.arange(cell_values.shape[1]) + 0.5) * grid.h
    iu = (uc >= ua) & (uc <= ub)
    iv = (vc >= va) & (vc <= vb)
    return cell_values[np.ix_(iu, iv)]


# exact background derivatives -----------------------------------------------------

def _w_derivs(bg, ell, u, v):
    out = list(mode_coefficient_derivs(bg, ell, u, v))
    if not bg.static:
        # second derivatives by central differences of the analytic first ones
        step = 1e-4
        _, wu_p, wv_p, *_ = mode_coefficient_derivs(bg, ell, u + step, v)
        _, wu_m, wv_m, *_ = mode_coefficient_derivs(bg, ell, u - step, v)
        _, wu_vp, wv_vp, *_ = mode_coefficient_derivs(bg, ell, u, v + step)
        _, wu_vm, wv_vm, *_ = mode_coefficient_derivs(bg, ell, u, v - step)
        out[3] = (wu_p - wu_m) / (2 * step)
        out[4] = (wu_vp - wu_vm) / (2 * step)
        out[5] = (wv_vp - wv_vm) / (2 * step)
    return out


def _node_geometry(bg, field):
    g = field.grid
    uu, vv = np.meshgrid(g.u, g.v, indexing="ij")
    live = np.ones(uu.shape, bool)
    if bg.kind == "minkowski":
        live = vv - uu > 0.5 * g.h
    return uu, vv, live


def _check_l(l):
    if l not in (1, 2):
        raise UnsupportedError("commuted corrections are implemented for l in {1, 2}")


def commuted_correction_dv(bg, ell, l, field):
    """sum_j C(l,j) (d_v^j W) d_v^(l-j) psi on the nodes."""
    _check_l(l)
    uu, vv, live = _node_geometry(bg, field)
    out = np.zeros(uu.shape)
    if not live.any():
        return out
    w = _w_derivs(bg, ell, uu[live], vv[live])
    _, dv = derivatives(field)
    dpsi = {0: field.values[live], 1: dv[live]}
    dvw = {1: w[2], 2: w[5]}
    acc = 0.0
    for j in range(1, l + 1):
        acc = acc + math.comb(l, j) * dvw[j] * dpsi[l - j]
    out[live] = acc
    return out


def commuted_correction_du(bg, ell, l, field):
    """sum_j C(l,j) (d_u^j W) d_u^(l-j) psi on the nodes.

    Nonzero on Minkowski for ell >= 1: it is the O(r^-3) angular term.
    """
    _check_l(l)
    uu, vv, live = _node_geometry(bg, field)
    out = np.zeros(uu.shape)
    if not live.any():
        return out
    w = _w_derivs(bg, ell, uu[live], vv[live])
    du, _ = derivatives(field)
    dpsi = {0: field.values[live], 1: du[live]}
    duw = {1: w[1], 2: w[3]}
    acc = 0.0
    for j in range(1, l + 1):
        acc = acc + math.comb(l, j) * duw[j] * dpsi[l - j]
    out[live] = acc
    return out


def angular_amplitude(ell, l, d=3):
    """sigma_l with |d_sigma^l Y|^2 integrated over the sphere equal to sigma_l^2."""
    lam = angular_eigenvalue(ell, d)
    if l == 0:
        return 1.0
    if l == 1:
        return math.sqrt(lam)
    if l == 2:
        return math.sqrt(max(lam * (lam - (d - 2)), 0.0))
    raise UnsupportedError("angular amplitude only for l <= 2")


def commuted_correction_dsigma(bg, ell, l, field):
    """Correction for D = r^-1 grad_S applied l times, with Psi = sigma_l psi."""
    _check_l(l)
    uu, vv, live = _node_geometry(bg, field)
    out = np.zeros(uu.shape)
    sig = angular_amplitude(ell, l, bg.d)
    if sig == 0.0 or not live.any():
        return out
    geo = chart(bg, uu[live], vv[live])
    du, dv = derivatives(field)
    r = geo.r
    psi = field.values[live]
    first = l * r ** (-l - 1) * (geo.r_u * dv[live] + geo.r_v * du[live])
    zeroth = (l * (l + 1) * r ** (-l - 2) * geo.r_u * geo.r_v - l * r ** (-l - 1) * geo.r_uv) * psi
    out[live] = sig * (first - zeroth)
    return out


def main_sum_dv(bg, ell, l, field):
    """The explicit Minkowski-type sum with (j+1)! r^(-2-j) coefficients; Err = exact - main."""
    _check_l(l)
    uu, vv, live = _node_geometry(bg, field)
    out = np.zeros(uu.shape)
    if not live.any():
        return out
    r = chart(bg, uu[live], vv[live]).r
    kappa = angular_eigenvalue(ell, bg.d) + dim_shift(bg.d)
    _, dv = derivatives(field)
    dpsi = {0: field.values[live], 1: dv[live]}
    acc = 0.0
    for j in range(1, l + 1):
        acc = acc + (-1) ** (j + 1) * math.comb(l, j) * math.factorial(j + 1) * r ** (-2.0 - j) * (-kappa) * dpsi[l - j]
    out[live] = acc
    return out


CORRECTIONS = {"dv": commuted_correction_dv, "du": commuted_correction_du, "dsigma": commuted_correction_dsigma}


def _apply_D(bg, ell, field, kind, l):
    g = field.grid
    vals = field.values
    if kind == "dsigma":
        uu, vv, live = _node_geometry(bg, field)
        out = np.zeros_like(vals)
        sig = angular_amplitude(ell, l, bg.d)
        if sig:
            out[live] = sig * chart(bg, uu[live], vv[live]).r ** (-l) * vals[live]
        return out
    axis = 1 if kind == "dv" else 0
    for _ in range(l):
        vals = np.gradient(vals, g.h, axis=axis, edge_order=2)
    return vals


def _apply_D_cells(bg, ell, grid, cells, kind, l):
    if kind == "dsigma":
        uc = grid.u0 + (np.arange(cells.shape[0]) + 0.5) * grid.h
        vc = grid.v0 + (np.arange(cells.shape[1]) + 0.5) * grid.h
        uu, vv = np.meshgrid(uc, vc, indexing="ij")
        out = np.zeros_like(cells)
        live = vv - uu > 0.5 * grid.h if bg.kind == "minkowski" else np.ones(uu.shape, bool)
        sig = angular_amplitude(ell, l, bg.d)
        if sig:
            out[live] = sig * chart(bg, uu[live], vv[live]).r ** (-l) * cells[live]
        return out
    axis = 1 if kind == "dv" else 0
    for _ in range(l):
        cells = np.gradient(cells, grid.h, axis=axis, edge_order=2)
    return cells


def _to_cells(a):
    return 0.25 * (a[:-1, :-1] + a[:-1, 1:] + a[1:, :-1] + a[1:, 1:])


def commutator_closure(bg, ell, field, kind, l):
    """-R[D^l psi] - D^l(-R[psi]) - correction on cell centres (O(h^2) away from edges)."""
    if kind not in CORRECTIONS:
        raise UnsupportedError(f"unknown commutator {kind!r}")
    _check_l(l)
    g = field.grid
    w_cell = _cell_W(bg, ell, g)
    dfield = _apply_D(bg, ell, field, kind, l)
    lhs = -_operator(dfield, w_cell, g.h)
    res = -_operator(field.values, w_cell, g.h)
    corr = _to_cells(CORRECTIONS[kind](bg, ell, l, field))
    return lhs - _apply_D_cells(bg, ell, g, res, kind, l) - corr


@dataclass(frozen=True)
class CommutatorStudy:
    kind: str
    l: int
    ell: int
    errors: tuple
    orders: tuple
    exact: bool

    @property
    def order(self):
        return math.inf if self.exact else self.orders[-1]


def commutator_order(bg, ell, data, base_grid, kind, l, region, levels=3, rounding=1e-9):
    """Sup of the closure over a fixed physical region at h, h/2, h/4."""
    errs = []
    scales = []
    g = base_grid
    for n in range(levels):
        f = evolve(bg, ell, g, data)
        c = commutator_closure(bg, ell, f, kind, l)
        errs.append(float(np.max(np.abs(region_view(g, c, region)))))
        scales.append(float(np.max(np.abs(f.values))))
        g = g.refine(2)
    scale = max(1.0, max(scales))
    exact = all(e <= rounding * scale for e in errs)
    orders = tuple(
        math.log2(a / b) if b > 0 and a > 0 else math.inf for a, b in zip(errs, errs[1:])
    )
    return CommutatorStudy(kind, l, int(ell), tuple(errs), orders, exact)


# Err envelope ---------------------------------------------------------------------

ERR_SLOTS = (
    ("uu", 2.0, True),
    ("vv", 1.0, False),
    ("us", 2.0, True),
    ("vs", 2.0, False),
    ("ss", 3.0, True),
    ("u", 2.0, True),
    ("v", 1.0, True),
    ("s", 2.0, True),
    ("0", 3.0, False),
)


@dataclass(frozen=True)
class ErrSlot:
    name: str
    power: float
    envelope: float
    actual: float

    @property
    def ratio(self):
        return self.actual / self.envelope


def err_envelope(bg, u, v):
    """Actual Err coefficients of the exact mode operator next to r^-power envelopes.

    The exact operator is d_u d_v psi + f V' (lambda r^-2 + 2M r^-3) psi.
    The angular factor f V' is absorbed into the sphere metric, so the
    only surviving slot is the zeroth-order one, 2M f V' / r^3.
    """
    geo = chart(bg, u, v)
    r = float(geo.r)
    out = []
    for name, base, with_a in ERR_SLOTS:
        power = base + (bg.a if with_a else 0.0)
        actual = 0.0
        if name == "0":
            actual = float(2 * geo.mass * geo.f * geo.vp / r**3)
        out.append(ErrSlot(name, power, r**-power, actual))
    return out


def err_constant(bg, u, v):
    return max(s.ratio for s in err_envelope(bg, u, v))


__all__ = [
    "OperatorResidual",
    "residual",
    "commuted_correction_dv",
    "commuted_correction_du",
    "commuted_correction_dsigma",
    "commutator_closure",
    "commutator_order",
    "err_envelope",
    "main_sum_dv",
]
