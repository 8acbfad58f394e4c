"""Hyperboloidal slices {tbar = tau} through an evolved mode.

A slice is sampled on the grid columns v_j.  On each column the root of
u - 1/(1 + r(u, v_j)^eta') = tau is found by safeguarded Newton and the
field is interpolated linearly in u between the two enclosing rows, so
slice values are linear in the field.

Fields too large to store are handled by :class:`Harvester`, which eats
rows in increasing u (straight from :func:`rpdecay.evolve.sweep`) and keeps
only a four-row window.  It also records traces along walls v - u = const
and whole rows at requested u.
"""

from dataclasses import dataclass, field

import numpy as np

from .background import chart, conformal_factor, dtbar, mode_coefficient
from .errors import DegenerateSlice, EmptySlice, ParamError, RootFindError

SLICE_HEADER = "tau,v,u,r,psi,dpsi_du,dpsi_dv,w,theta"
QUANTITIES = ("psi", "psi_u", "psi_v", "psi_uu", "psi_uv", "psi_vv")


def smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def smoothstep_prime(x):
    inside = (x > 0) & (x < 1)
    return np.where(inside, 6.0 * x * (1.0 - x), 0.0)


def cutoff(r, R):
    """theta_R = s(r - R): 0 for r <= R, 1 for r >= R + 1."""
    return smoothstep(np.asarray(r, float) - R)


def cutoff_gradient(r, r_u, r_v, R):
    """Euclidean size of (d_u theta, d_v theta) in the (u, v) chart."""
    return smoothstep_prime(np.asarray(r, float) - R) * np.sqrt(r_u**2 + r_v**2)


@dataclass
class Slice:
    tau: float
    eta_prime: float
    R_cut: float
    ell: int
    h: float
    bg: object
    cols: np.ndarray
    v: np.ndarray
    u: np.ndarray
    r: np.ndarray
    psi: np.ndarray
    psi_u: np.ndarray
    psi_v: np.ndarray
    psi_uu: np.ndarray
    psi_uv: np.ndarray
    psi_vv: np.ndarray
    r_u: np.ndarray
    r_v: np.ndarray
    W: np.ndarray
    tu: np.ndarray
    tv: np.ndarray
    w: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray

    def __len__(self):
        return self.v.size

    @property
    def d(self):
        return self.bg.d

    @property
    def slope(self):
        """du/dv along the slice (negative)."""
        return -self.tv / self.tu

    @property
    def v_range(self):
        return float(self.v[0]), float(self.v[-1])

    @property
    def samples(self):
        return list(zip(self.v, self.u, self.r, self.psi, self.psi_u, self.psi_v, self.w, self.theta))

    def theta_for(self, R):
        if R < self.R_cut - 1:
            raise ParamError("cutoff radius below the retained part of the slice")
        if R == self.R_cut:
            return self.theta, self.dtheta
        return cutoff(self.r, R), cutoff_gradient(self.r, self.r_u, self.r_v, R)

    def truncate(self, r_max):
        keep = self.r <= r_max
        return self.select(keep)

    def select(self, keep):
        kw = {}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            kw[name] = val[keep] if isinstance(val, np.ndarray) else val
        return Slice(**kw)

    def scaled(self, c):
        kw = {name: getattr(self, name) for name in self.__dataclass_fields__}
        for q in QUANTITIES:
            kw[q] = c * kw[q]
        return Slice(**kw)

    def export_csv(self, path):
        table = np.column_stack(
            [np.full(self.v.shape, self.tau), self.v, self.u, self.r, self.psi, self.psi_u, self.psi_v, self.w, self.theta]
        )
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header=SLICE_HEADER, comments="")


def coarea_weight(bg, sample, eta_prime=None):
    """w = Omega^2 / (d tbar/du), so that du dv Omega^2 = dtau (w dv)."""
    u, v = (sample.u, sample.v) if hasattr(sample, "u") else sample
    eta = bg.eta_prime if eta_prime is None else eta_prime
    geo = chart(bg, u, v)
    tu, _ = dtbar(geo.r, geo.r_u, geo.r_v, eta)
    if np.any(tu <= 0):
        raise DegenerateSlice("d tbar/du must be positive")
    out = conformal_factor(bg, geo.r) ** 2 / tu
    return out if np.ndim(out) else float(out)


def sup_weighted(sl, q):
    """max over the slice of r^q (psi/Omega)^2."""
    if len(sl) == 0:
        raise EmptySlice("empty slice")
    phi = sl.psi / conformal_factor(sl.bg, sl.r)
    return float(np.max(sl.r**q * phi**2))


# root finding --------------------------------------------------------------------

def slice_roots(bg, grid, tau, eta_prime, R_cut, max_iter=60):
    """Columns j and the slice crossing u_j on each, restricted to r >= R_cut - 1."""
    r_min = max(R_cut - 1.0, 0.0)
    u_top = tau + 1.0 / (1.0 + r_min**eta_prime)
    v = grid.v
    cols = np.arange(grid.Nv)
    live = v > tau
    cols, v = cols[live], v[live]

    def g(u, full=False):
        geo = chart(bg, u, v, clamp=True)
        tu, _ = dtbar(geo.r, geo.r_u, geo.r_v, eta_prime)
        out = u - 1.0 / (1.0 + geo.r**eta_prime) - tau, tu
        return out + (geo,) if full else out

    hi = np.full(v.shape, u_top)
    g_hi, _, geo = g(hi, full=True)
    # the bracket top must be a real point, not one pushed onto the truncation radius
    floor = max(bg.eps(max(bg.patch_mass(k) for k in range(bg.npatch))), 1e-300)
    ok = (g_hi >= 0) & (geo.x > floor)
    cols, v, hi = cols[ok], v[ok], hi[ok]
    lo = np.full(v.shape, float(tau))
    u = 0.5 * (lo + hi)
    for _ in range(max_iter):
        gv, dg = g(u)
        if np.all(np.abs(gv) <= 1e-13 * max(1.0, abs(tau))):
            break
        pos = gv > 0
        hi = np.where(pos, u, hi)
        lo = np.where(pos, lo, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            un = u - gv / dg
        bad = ~((un > lo) & (un < hi)) | ~np.isfinite(un)
        u = np.where(bad, 0.5 * (lo + hi), un)
    else:
        raise RootFindError(f"slice tau={tau} root find did not converge")
    inside = (u >= grid.u0) & (u <= grid.u1)
    return cols[inside], u[inside]


# finite-difference stencils -------------------------------------------------------

def _stencils(k, n):
    """Row offsets and weights (units h, h^2) for first and second derivatives at index k."""
    if n < 3:
        first = ([0, 1], [-1.0, 1.0]) if k == 0 else ([-1, 0], [-1.0, 1.0])
        return first, ([0], [np.nan])
    if 0 < k < n - 1:
        return ([-1, 1], [-0.5, 0.5]), ([-1, 0, 1], [1.0, -2.0, 1.0])
    sgn = 1 if k == 0 else -1
    first = ([0, sgn, 2 * sgn], [-1.5 * sgn, 2.0 * sgn, -0.5 * sgn])
    if n < 4:
        second = ([0, sgn, 2 * sgn], [1.0, -2.0, 1.0])
    else:
        second = ([0, sgn, 2 * sgn, 3 * sgn], [2.0, -5.0, 4.0, -1.0])
    return first, second


def _apply(getter, k, stencil, scale):
    offs, wts = stencil
    out = 0.0
    for o, c in zip(offs, wts):
        out = out + c * getter(k + o)
    return out / scale


def _col_deriv(values_at, cols, nv, h, order):
    """d/dv (order 1) or d^2/dv^2 (order 2) at columns, values_at(idx) gives the row."""
    out = np.empty(cols.shape)
    mid = (cols > 0) & (cols < nv - 1)
    groups = [(mid, 1), (cols == 0, 0), (cols == nv - 1, nv - 1)]
    for mask, rep in groups:
        if not mask.any():
            continue
        c = cols[mask]
        st = _stencils(rep, nv)[order - 1]
        base = c - rep
        out[mask] = _apply(lambda j: values_at(base + j), rep, st, h**order)
    return out


def derivative_values(rows, k, nu, nv, h, cols):
    """(psi, psi_u, psi_v, psi_uu, psi_uv, psi_vv) on row k at the given columns.

    ``rows`` maps row index to the full row array.
    """
    st1, st2 = _stencils(k, nu)
    psi = rows[k][cols]
    u_row = lambda idx: _apply(lambda i: rows[i][idx], k, st1, h)
    psi_u = u_row(cols)
    psi_uu = _apply(lambda i: rows[i][cols], k, st2, h * h)
    psi_v = _col_deriv(lambda idx: rows[k][idx], cols, nv, h, 1)
    psi_vv = _col_deriv(lambda idx: rows[k][idx], cols, nv, h, 2)
    psi_uv = _col_deriv(u_row, cols, nv, h, 1)
    return np.array([psi, psi_u, psi_v, psi_uu, psi_uv, psi_vv])


# harvester -----------------------------------------------------------------------

@dataclass
class _SliceJob:
    tau: float
    cols: np.ndarray
    u: np.ndarray
    floor: np.ndarray
    alpha: np.ndarray
    acc: np.ndarray
    kmin: int
    kmax: int


@dataclass
class WallTrace:
    """Field along the diagonal v - u = c, one entry per grid row crossing it."""

    c: float
    u: list = field(default_factory=list)
    vals: list = field(default_factory=list)

    def arrays(self):
        u = np.asarray(self.u)
        vals = np.array(self.vals).T if self.vals else np.zeros((6, 0))
        return u, u + self.c, vals


class Harvester:
    """Collect slices, wall traces and rows from a stream of grid rows."""

    def __init__(self, bg, ell, grid, taus=(), eta_prime=None, R_cut=10.0, walls=(), rows=(), on_slice=None):
        self.bg, self.ell, self.grid = bg, int(ell), grid
        self.eta = bg.eta_prime if eta_prime is None else float(eta_prime)
        self.R_cut = float(R_cut)
        self.on_slice = on_slice
        self.slices = {}
        self.walls = {float(c): WallTrace(float(c)) for c in walls}
        self.row_index = sorted({int(i) for i in rows})
        self.rows = {}
        self._jobs = sorted((self._job(t) for t in taus), key=lambda j: j.kmin)
        self._active = []
        self._buf = {}
        self._next = 0
        self._seen = -1

    def _job(self, tau):
        g = self.grid
        cols, u = slice_roots(self.bg, g, tau, self.eta, self.R_cut)
        if cols.size == 0:
            raise EmptySlice(f"slice tau={tau} does not meet the grid")
        pos = (u - g.u0) / g.h
        floor = np.minimum(np.floor(pos).astype(np.int64), g.Nu - 2)
        alpha = pos - floor
        order = np.argsort(floor, kind="stable")
        return _SliceJob(
            float(tau), cols[order], u[order], floor[order], alpha[order],
            np.zeros((6, cols.size)), int(floor[order][0]), int(floor[order][-1]),
        )

    def feed(self, i0, block):
        for n in range(block.shape[0]):
            i = i0 + n
            if i != self._seen + 1:
                raise ValueError("rows must arrive in order")
            self._buf[i] = block[n]
            self._seen = i
            self._drain()

    def _ready(self, k):
        nu = self.grid.Nu
        (o1, _), (o2, _) = _stencils(k, nu)
        return k + max(o1 + o2) <= self._seen

    def _drain(self):
        while self._next < self.grid.Nu and self._ready(self._next):
            self._process(self._next)
            self._next += 1
            for old in [i for i in self._buf if i < self._next - 4]:
                del self._buf[old]

    def finish(self):
        if self._seen != self.grid.Nu - 1:
            raise ValueError("harvester finished before the last row")
        self._drain()
        return self

    def _process(self, k):
        g = self.grid
        while self._jobs and self._jobs[0].kmin <= k:
            self._active.append(self._jobs.pop(0))
        done = []
        for job in self._active:
            for target, wfun in ((k, lambda a: 1.0 - a), (k - 1, lambda a: a)):
                a, b = np.searchsorted(job.floor, [target, target + 1])
                if a == b:
                    continue
                dvals = derivative_values(self._buf, k, g.Nu, g.Nv, g.h, job.cols[a:b])
                job.acc[:, a:b] += wfun(job.alpha[a:b]) * dvals
            if k >= job.kmax + 1:
                done.append(job)
        for job in done:
            self._active.remove(job)
            self._finalize(job)
        uk = g.u0 + k * g.h
        for trace in self.walls.values():
            p = (uk + trace.c - g.v0) / g.h
            j = int(np.floor(p))
            if j < 0 or j > g.Nv - 2:
                continue
            beta = p - j
            dv = derivative_values(self._buf, k, g.Nu, g.Nv, g.h, np.array([j, j + 1]))
            trace.u.append(uk)
            trace.vals.append((1 - beta) * dv[:, 0] + beta * dv[:, 1])
        if k in self.row_index:
            self.rows[k] = np.array(self._buf[k])

    def _finalize(self, job):
        sl = build_slice(self.bg, self.ell, self.grid, job.tau, self.eta, self.R_cut, job.cols, job.u, job.acc)
        if self.on_slice is not None:
            self.slices[job.tau] = self.on_slice(sl)
        else:
            self.slices[job.tau] = sl


def build_slice(bg, ell, grid, tau, eta_prime, R_cut, cols, u, vals):
    order = np.argsort(cols)
    cols, u, vals = cols[order], u[order], vals[:, order]
    v = grid.v[cols]
    geo = chart(bg, u, v)
    tu, tv = dtbar(geo.r, geo.r_u, geo.r_v, eta_prime)
    if np.any(tu <= 0):
        raise DegenerateSlice("slice is not a graph over v (d tbar/du <= 0)")
    w = conformal_factor(bg, geo.r) ** 2 / tu
    return Slice(
        tau=float(tau), eta_prime=float(eta_prime), R_cut=float(R_cut), ell=int(ell), h=grid.h, bg=bg,
        cols=cols, v=v, u=u, r=geo.r,
        psi=vals[0], psi_u=vals[1], psi_v=vals[2], psi_uu=vals[3], psi_uv=vals[4], psi_vv=vals[5],
        r_u=geo.r_u, r_v=geo.r_v, W=mode_coefficient(bg, ell, None, None, geo=geo),
        tu=tu, tv=tv, w=w,
        theta=cutoff(geo.r, R_cut), dtheta=cutoff_gradient(geo.r, geo.r_u, geo.r_v, R_cut),
    )


def harvest_field(field, taus=(), eta_prime=None, R_cut=10.0, walls=(), rows=(), on_slice=None):
    """Run a :class:`Harvester` over a stored :class:`ModeField`."""
    hv = Harvester(field.bg, field.ell, field.grid, taus, eta_prime, R_cut, walls, rows, on_slice)
    hv.feed(0, field.values)
    return hv.finish()


def harvest(bg, ell, grid, data, taus=(), eta_prime=None, R_cut=10.0, walls=(), rows=(), on_slice=None,
            block=None, backend=None):
    """Evolve and harvest in one streaming pass (the grid is never stored)."""
    from .evolve import sweep

    hv = Harvester(bg, ell, grid, taus, eta_prime, R_cut, walls, rows, on_slice)
    for i0, block_rows in sweep(bg, ell, grid, data, block=block, backend=backend):
        hv.feed(i0, block_rows)
    return hv.finish()


def extract_slice(field, tau, eta_prime=None, R_cut=10.0):
    if field.bg is None:
        raise ParamError("field has no background attached")
    hv = Harvester(field.bg, field.ell, field.grid, (tau,), eta_prime, R_cut)
    job = hv._jobs[0]
    g = field.grid
    rows = {}
    for k in range(job.kmin, job.kmax + 2):
        (o1, _), (o2, _) = _stencils(k, g.Nu)
        for i in range(k + min(o1 + o2), k + max(o1 + o2) + 1):
            rows[i] = field.values[i]
        for target, wfun in ((k, lambda a: 1.0 - a), (k - 1, lambda a: a)):
            a, b = np.searchsorted(job.floor, [target, target + 1])
            if a < b:
                dvals = derivative_values(rows, k, g.Nu, g.Nv, g.h, job.cols[a:b])
                job.acc[:, a:b] += wfun(job.alpha[a:b]) * dvals
    return build_slice(field.bg, field.ell, g, job.tau, hv.eta, hv.R_cut, job.cols, job.u, job.acc)
