"""Characteristic (diamond) evolution of one spherical-harmonic mode.

The grid stores psi[i, j] = psi(u0 + i h, v0 + j h).  For the cell with
south corner (i, j) the scheme reads

    psi_N = psi_E + psi_W - psi_S - (h^2/2) W_c (psi_E + psi_W)

with N = (i+1, j+1), W = (i+1, j), E = (i, j+1) and W_c the mode
coefficient at the cell centre.  It is the centred discretisation of
d_u d_v psi = -W psi with psi_c replaced by the mean of psi_E and psi_W.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .background import GLUED_VAIDYA, MINKOWSKI, chart, mode_coefficient
from .errors import DomainError, NumericalError, ParamError, ShapeError


@dataclass(frozen=True)
class NullGrid:
    u0: float
    v0: float
    h: float
    Nu: int
    Nv: int

    def __post_init__(self):
        if not self.h > 0:
            raise ParamError("grid spacing must be positive")
        if self.Nu < 2 or self.Nv < 2:
            raise ParamError("grid needs at least two nodes per direction")

    @classmethod
    def span(cls, u0, u1, v0, v1, h):
        """Grid covering [u0, u1] x [v0, v1] (upper ends rounded to the lattice)."""
        nu = int(round((u1 - u0) / h)) + 1
        nv = int(round((v1 - v0) / h)) + 1
        return cls(float(u0), float(v0), float(h), nu, nv)

    @property
    def u(self):
        return self.u0 + self.h * np.arange(self.Nu)

    @property
    def v(self):
        return self.v0 + self.h * np.arange(self.Nv)

    @property
    def u1(self):
        return self.u0 + self.h * (self.Nu - 1)

    @property
    def v1(self):
        return self.v0 + self.h * (self.Nv - 1)

    def refine(self, factor=2):
        return NullGrid(
            self.u0, self.v0, self.h / factor, (self.Nu - 1) * factor + 1, (self.Nv - 1) * factor + 1
        )

    def shift(self, k):
        """Same grid translated by k nodes along both null directions."""
        return NullGrid(self.u0 + k * self.h, self.v0 + k * self.h, self.h, self.Nu, self.Nv)


def gaussian_profile(amplitude, center, width):
    def g(x):
        return amplitude * np.exp(-(((np.asarray(x, float) - center) / width) ** 2))

    return g


def bump_profile(amplitude, lo, hi):
    def g(x):
        y = (2 * np.asarray(x, float) - lo - hi) / (hi - lo)
        out = np.zeros_like(y)
        inside = np.abs(y) < 1
        out[inside] = amplitude * np.exp(1 - 1 / (1 - y[inside] ** 2))
        return out

    return g


@dataclass(frozen=True)
class CharacteristicData:
    """psi on the two initial null segments u = u0 and v = v0.

    Each profile is a callable of one variable or a sampled array.
    """

    on_v_axis: object
    on_u_axis: object
    family: str = "custom"
    params: tuple = ()

    @classmethod
    def gaussian(cls, amplitude=1.0, center=10.0, width=2.0, v0=0.0):
        """Ingoing Gaussian A exp(-((v - c)/s)^2) on u = u0; constant on v = v0."""
        g = gaussian_profile(amplitude, center, width)
        corner = float(g(v0))
        return cls(g, lambda u: np.full(np.shape(u), corner), "gaussian", (amplitude, center, width))

    @classmethod
    def bump(cls, amplitude=1.0, lo=5.0, hi=15.0, v0=0.0):
        """Compactly supported smooth bump on u = u0; constant on v = v0."""
        g = bump_profile(amplitude, lo, hi)
        corner = float(g(np.array([v0]))[0])
        return cls(g, lambda u: np.full(np.shape(u), corner), "bump", (amplitude, lo, hi))

    @classmethod
    def dalembert(cls, profile, u0=0.0, v0=0.0):
        """Data of the free wave G(v) - G(u) (the r = 0 reflection of G)."""
        gv0 = float(profile(np.array([v0]))[0])
        gu0 = float(profile(np.array([u0]))[0])
        return cls(
            lambda v: profile(v) - gu0,
            lambda u: gv0 - profile(u),
            "dalembert",
        )

    def sample(self, grid):
        def one(prof, x, n):
            if callable(prof):
                out = np.asarray(prof(x), float)
                out = np.broadcast_to(out, x.shape).copy()
            else:
                out = np.asarray(prof, float).copy()
            if out.shape != (n,):
                raise ShapeError(f"profile has shape {out.shape}, expected ({n},)")
            return out

        row0 = one(self.on_v_axis, grid.v, grid.Nv)
        col0 = one(self.on_u_axis, grid.u, grid.Nu)
        if abs(row0[0] - col0[0]) > 1e-12:
            raise ParamError("characteristic data violate corner compatibility")
        col0[0] = row0[0]
        return row0, col0

    @property
    def refinable(self):
        return callable(self.on_v_axis) and callable(self.on_u_axis)


@dataclass
class ModeField:
    ell: int
    grid: NullGrid
    values: np.ndarray
    bg: object = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.values.shape != (self.grid.Nu, self.grid.Nv):
            raise ShapeError("values do not match the grid")

    @property
    def du(self):
        return self.derivatives()[0]

    @property
    def dv(self):
        return self.derivatives()[1]

    def derivatives(self):
        if "d1" not in self._cache:
            self._cache["d1"] = derivatives(self)
        return self._cache["d1"]

    @property
    def r(self):
        if "r" not in self._cache:
            if self.bg is None:
                raise ParamError("field has no background attached")
            g = self.grid
            self._cache["r"] = chart(self.bg, g.u[:, None], g.v[None, :]).r
        return self._cache["r"]

    def scaled(self, c):
        return ModeField(self.ell, self.grid, c * self.values, self.bg)

    def export_csv(self, path):
        g = self.grid
        du, dv = self.derivatives()
        uu, vv = np.meshgrid(g.u, g.v, indexing="ij")
        r = self.r if self.bg is not None else np.full(uu.shape, np.nan)
        table = np.column_stack([a.ravel() for a in (uu, vv, r, self.values, du, dv)])
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header="u,v,r,psi,dpsi_du,dpsi_dv", comments="")


def derivatives(field):
    """Centred differences inside, second-order one-sided at the edges."""
    vals = field.values
    return _diff(vals, field.grid.h, 0), _diff(vals, field.grid.h, 1)


def _diff(a, h, axis):
    # differences taken first, so constant lines give exactly zero
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    if a.shape[0] >= 3:
        out[0] = (4 * (a[1] - a[0]) - (a[2] - a[0])) / (2 * h)
        out[-1] = (4 * (a[-1] - a[-2]) - (a[-1] - a[-3])) / (2 * h)
    else:
        out[0] = out[-1] = (a[-1] - a[0]) / h
    return np.moveaxis(out, 0, axis)


# cell coefficients ---------------------------------------------------------------

def _reflect_offset(bg, grid):
    """Column offset of the r = 0 diagonal for Minkowski grids reaching the axis."""
    if bg.kind != MINKOWSKI:
        return None
    lowest = grid.v0 - grid.u1
    if lowest > 0:
        return None
    k0 = (grid.u0 - grid.v0) / grid.h
    if abs(k0 - round(k0)) > 1e-9:
        raise DomainError("r = 0 must lie on a grid diagonal for the reflecting inner boundary")
    return int(round(k0))


def diag_coefficients(bg, ell, grid, reflect=None):
    """h^2/2 W at cell centres of a static background, indexed by j - i + Nu - 2."""
    n = grid.Nu + grid.Nv - 3
    k = np.arange(n)
    rstar = grid.v0 - grid.u0 + (k - (grid.Nu - 2)) * grid.h
    c = np.zeros(n)
    live = rstar > 0.5 * grid.h if reflect is not None else np.ones(n, bool)
    w = mode_coefficient(bg, ell, np.zeros(live.sum()), rstar[live])
    c[live] = 0.5 * grid.h**2 * w
    return c


def cell_coefficients(bg, ell, grid, i0, i1):
    """h^2/2 W for cell rows i0..i1-1 (general backgrounds).

    Cells cut by a junction u = u_j use the u-weighted mean of the
    coefficients on either side.
    """
    h = grid.h
    uc = grid.u0 + (np.arange(i0, i1) + 0.5) * h
    vc = grid.v0 + (np.arange(grid.Nv - 1) + 0.5) * h
    uu, vv = np.meshgrid(uc, vc, indexing="ij")
    w = mode_coefficient(bg, ell, uu, vv)
    if bg.kind == GLUED_VAIDYA:
        tol = 1e-9 * h
        for row, ucell in enumerate(uc):
            lo, hi = ucell - 0.5 * h, ucell + 0.5 * h
            cuts = [uj for uj in bg.junctions if lo + tol < uj < hi - tol]
            if not cuts:
                continue
            edges = [lo] + cuts + [hi]
            k_first = int(bg.patch_of(lo + tol))
            acc = np.zeros(grid.Nv - 1)
            for n, (a, b) in enumerate(zip(edges, edges[1:])):
                geo = chart(bg, np.full(vc.shape, ucell), vc, patch=k_first + n)
                acc += (b - a) / h * mode_coefficient(bg, ell, None, None, geo=geo)
            w[row] = acc
    return 0.5 * h**2 * w


# evolution -----------------------------------------------------------------------

def _default_block(backend):
    return 256 if backend == "numba" else 512


def _fill_block(bg, grid, psi, i0, cdiag, ell, diag, backend):
    """Fill psi[1:] where psi[0] is grid row i0."""
    nb = psi.shape[0]
    bdiag = _kernels.NO_DIAG if diag is None else i0 + diag
    if cdiag is not None:
        _kernels.fill_rows_diag(psi, cdiag, grid.Nu - 2 - i0, bdiag, backend=backend)
    else:
        cc = cell_coefficients(bg, ell, grid, i0, i0 + nb - 1)
        _kernels.fill_rows_full(psi, cc, bdiag, backend=backend)
    if not np.isfinite(psi).all():
        raise NumericalError("non-finite value during evolution")


def _prepare(bg, ell, grid, data):
    if ell < 0 or int(ell) != ell:
        raise ParamError("ell must be a nonnegative integer")
    diag = _reflect_offset(bg, grid)
    row0, col0 = data.sample(grid)
    if diag is not None:
        j_axis = diag
        if 0 <= j_axis < grid.Nv and abs(row0[j_axis]) > 1e-12:
            raise ParamError("data must vanish at r = 0 for the reflecting boundary")
        row0[: max(0, min(grid.Nv, j_axis + 1))] = 0.0
    if bg.static:
        cdiag = diag_coefficients(bg, ell, grid, reflect=diag)
    else:
        cdiag = None
        chart(bg, np.array([grid.u1 - 0.5 * grid.h]), np.array([grid.v0 + 0.5 * grid.h]))
    return diag, row0, col0, cdiag


def sweep(bg, ell, grid, data, block=None, backend=None):
    """Evolve without storing the grid.

    Yields ``(i0, rows)`` with ``rows[k]`` the solution on grid row i0 + k;
    rows arrive in increasing u and every row is yielded exactly once.
    """
    backend = backend or _kernels.backend()
    block = block or _default_block(backend)
    diag, row0, col0, cdiag = _prepare(bg, ell, grid, data)
    yield 0, row0[None, :].copy()
    prev = row0
    i0 = 0
    while i0 < grid.Nu - 1:
        nb = min(block, grid.Nu - 1 - i0)
        psi = np.empty((nb + 1, grid.Nv))
        psi[0] = prev
        psi[1:, 0] = col0[i0 + 1 : i0 + nb + 1]
        _fill_block(bg, grid, psi, i0, cdiag, ell, diag, backend)
        yield i0 + 1, psi[1:]
        prev = psi[-1]
        i0 += nb


def evolve(bg, ell, grid, data, backend=None, block=None):
    """Fill the whole grid and return a :class:`ModeField`."""
    backend = backend or _kernels.backend()
    block = block or _default_block(backend)
    diag, row0, col0, cdiag = _prepare(bg, ell, grid, data)
    values = np.empty((grid.Nu, grid.Nv))
    values[0] = row0
    values[:, 0] = col0
    if diag is not None:
        for i in range(1, grid.Nu):
            d = i + diag
            if d >= 0:
                values[i, : min(d + 1, grid.Nv)] = 0.0
    i0 = 0
    while i0 < grid.Nu - 1:
        nb = min(block, grid.Nu - 1 - i0)
        _fill_block(bg, grid, values[i0 : i0 + nb + 1], i0, cdiag, ell, diag, backend)
        i0 += nb
    return ModeField(int(ell), grid, values, bg)


@dataclass(frozen=True)
class ConvergenceStudy:
    order: float
    diff_coarse: float
    diff_fine: float
    exact: bool
    h: float


def convergence_study(bg, ell, data, base_grid, rounding=1e-12):
    if not data.refinable:
        raise ParamError("convergence study needs callable data profiles")
    g1 = base_grid
    f1 = evolve(bg, ell, g1, data).values
    f2 = evolve(bg, ell, g1.refine(2), data).values[::2, ::2]
    f4 = evolve(bg, ell, g1.refine(4), data).values[::4, ::4]
    e1 = float(np.max(np.abs(f1 - f2)))
    e2 = float(np.max(np.abs(f2 - f4)))
    scale = max(1.0, float(np.max(np.abs(f4))))
    if e1 <= rounding * scale and e2 <= rounding * scale:
        return ConvergenceStudy(math.inf, e1, e2, True, g1.h)
    if e2 == 0.0:
        return ConvergenceStudy(math.inf, e1, e2, False, g1.h)
    return ConvergenceStudy(math.log2(e1 / e2), e1, e2, False, g1.h)


def convergence_order(bg, ell, data, base_grid):
    """log2 of successive self-differences at h, h/2, h/4 on the common nodes.

    Returns ``math.inf`` when both differences sit at rounding level.
    """
    return convergence_study(bg, ell, data, base_grid).order
