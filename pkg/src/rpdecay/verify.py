"""Ratio checks, decay fits, radiation-field extraction and the Hardy suite.

Analytic constants are never asserted.  Every check reports a
measured ratio lhs/rhs, and stability of that ratio under h -> h/2 stands
in for "C does not depend on the data or the resolution".

A :class:`Run` bundles a background, mode, grid and data.  Checks stream
the evolution through :class:`rpdecay.slices.Harvester` and keep only
per-slice scalars, so long Schwarzschild runs never hold the full field.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.interpolate import BarycentricInterpolator

from . import energies as en
from . import hardy as hd
from .background import GLUED_VAIDYA, chart, tortoise
from .energies import trapz, trapz_window, wall_crossing, wall_samples
from .errors import InsufficientData, InsufficientRadius, NonpositiveValue, ParamError, UnsupportedError
from .evolve import evolve
from .slices import harvest, harvest_field, sup_weighted

REPORT_HEADER = "name,p,delta,eta,R,tau1,tau2,h,lhs,rhs,ratio"
FIT_HEADER = "series,window_a,window_b,exponent,stderr"
RADIATION_HEADER = "u,value,error,transversal"


# runs -----------------------------------------------------------------------------

@dataclass
class Run:
    bg: object
    ell: int
    grid: object
    data: object
    field: object = None
    backend: str = None
    block: int = None

    @property
    def h(self):
        return self.grid.h

    def harvest(self, taus=(), walls=(), rows=(), eta_prime=None, R_cut=10.0, on_slice=None):
        if self.field is not None:
            return harvest_field(self.field, taus, eta_prime, R_cut, walls, rows, on_slice)
        return harvest(
            self.bg, self.ell, self.grid, self.data, taus, eta_prime, R_cut, walls, rows, on_slice,
            block=self.block, backend=self.backend,
        )

    def evolve(self):
        if self.field is None:
            self.field = evolve(self.bg, self.ell, self.grid, self.data, backend=self.backend, block=self.block)
        return self.field

    def refined(self, factor=2):
        return replace(self, grid=self.grid.refine(factor), field=None)

    def scaled(self, c):
        """Same run with the data multiplied by c."""
        d = self.data
        on_v = _scale_profile(d.on_v_axis, c)
        on_u = _scale_profile(d.on_u_axis, c)
        data = type(d)(on_v, on_u, d.family, d.params)
        fld = None if self.field is None else self.field.scaled(c)
        return replace(self, data=data, field=fld)


def _scale_profile(prof, c):
    if callable(prof):
        return lambda x: c * prof(x)
    return c * np.asarray(prof, float)


def default_wall(run, tau_max):
    """Outermost diagonal v - u = c that stays inside the grid up to tau_max."""
    g = run.grid
    return g.v1 - tau_max - 1.0 - 2.0 * g.h


def _tau_list(pairs, dtau):
    taus = set()
    for t1, t2 in pairs:
        if not t2 > t1:
            raise ParamError("tau pairs need tau2 > tau1")
        n = max(int(round((t2 - t1) / dtau)), 1)
        taus.update(np.round(np.linspace(t1, t2, n + 1), 12).tolist())
    return sorted(taus)


def _window(values, taus, t1, t2):
    t = np.array(taus)
    keep = (t >= t1 - 1e-9) & (t <= t2 + 1e-9)
    return trapz(np.asarray(values)[keep], t[keep])


# reports --------------------------------------------------------------------------

@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def vacuous(self):
        return self.lhs == 0.0 and self.rhs == 0.0

    @property
    def ratio(self):
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs <= 0 else math.inf

    def row(self):
        p = self.params
        keys = ("p", "delta", "eta", "R", "tau1", "tau2", "h")
        return [self.name] + [p.get(k, float("nan")) for k in keys] + [self.lhs, self.rhs, self.ratio]


def write_reports_csv(path, reports):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(REPORT_HEADER + "\n")
        for rep in reports:
            fh.write(",".join(en._fmt(x) for x in rep.row()) + "\n")


def max_ratio(reports):
    vals = [r.ratio for r in reports if not r.vacuous]
    return max(vals) if vals else 0.0


def refinement_change(coarse, fine):
    """Relative change of the matrix maximum between two resolutions."""
    a, b = max_ratio(coarse), max_ratio(fine)
    if a == 0 and b == 0:
        return 0.0
    return abs(b - a) / max(abs(a), abs(b))


# hierarchy ------------------------------------------------------------------------

def _hier_terms(sl, ps, k, delta, eta, R, ell, c_wall):
    sl = sl.select(sl.v - sl.u <= c_wall)
    out = {"tau": sl.tau}
    for p in ps:
        out[p] = (
            en.higher_energy(sl, p, k, delta, ell, R),
            en.bulk_energy_density(sl, p, delta, eta, R, ell, k),
            en.cutoff_density(sl, p, R, ell, k),
        )
    return out


def check_hierarchy(run, p_list, tau_pairs, delta=0.5, eta=None, R=10.0, k=1, dtau=0.5, c_wall=None,
                    eta_prime=None):
    """One report per (p, tau pair).

    lhs = E_bound(tau2) + int bulk + wall proxy for the boundary energy at I+,
    rhs = E_bound(tau1) + int cutoff terms (no source here).
    """
    ell = run.ell
    eta = 0.5 * run.bg.a if eta is None else eta
    ps = [float(p) for p in p_list]
    for p in ps:
        en._check_p(p, 2 * k - 2, 2 * k)
    en._check_delta(delta)
    en._check_eta(eta, run.bg.a)
    taus = _tau_list(tau_pairs, dtau)
    c_wall = default_wall(run, taus[-1]) if c_wall is None else c_wall
    R_cut = min(R, 10.0)
    hv = run.harvest(
        taus, walls=(c_wall,), eta_prime=eta_prime, R_cut=R_cut,
        on_slice=lambda sl: _hier_terms(sl, ps, k, delta, eta, R, ell, c_wall),
    )
    terms = [hv.slices[t] for t in taus]
    ws = wall_samples(run.bg, hv.walls[c_wall], ell)
    eta_p = run.bg.eta_prime if eta_prime is None else eta_prime
    reports = []
    for p in ps:
        eb = [t[p][0] for t in terms]
        bulk = [t[p][1] for t in terms]
        cut = [t[p][2] for t in terms]
        for t1, t2 in tau_pairs:
            i1, i2 = taus.index(round(t1, 12)), taus.index(round(t2, 12))
            ua, ub = wall_crossing(ws, t1, eta_p), wall_crossing(ws, t2, eta_p)
            scri = en.scri_energy(ws, p, k, delta, ell, ua, ub)
            b = _window(bulk, taus, t1, t2)
            c = _window(cut, taus, t1, t2)
            lhs = eb[i2] + b + scri
            rhs = eb[i1] + c
            reports.append(InequalityReport(
                f"hierarchy_k{k}", lhs, rhs,
                dict(p=p, delta=delta, eta=eta, R=R, tau1=t1, tau2=t2, h=run.h),
                dict(bulk=b, cutoff=c, scri=scri, e_bound_1=eb[i1], e_bound_2=eb[i2], lhs_without_scri=lhs - scri,
                     r_wall=float(ws.r[0]) if ws.r.size else float("nan")),
            ))
    return reports


# boundedness ----------------------------------------------------------------------

def _bnd_terms(sl, R, ell, c_wall):
    sl = sl.select(sl.v - sl.u <= c_wall)
    return {
        "tau": sl.tau,
        "flux": en.jt_flux(sl, ell, R),
        "radiating": en.radiating_bulk_density(sl, R, ell),
        "cutoff": en.jt_cutoff_density(sl, R, ell),
    }


def _mass_nonincreasing(bg):
    if bg.kind != GLUED_VAIDYA:
        return False
    ms = [bg.patch_mass(k) for k in range(bg.npatch)]
    return all(b <= a for a, b in zip(ms, ms[1:]))


def check_boundedness(run, tau_pairs, R=10.0, dtau=0.5, c_wall=None, eta_prime=None, drop_radiating=None):
    """flux(tau2) + wall outflow <= C (flux(tau1) + radiating bulk + cutoff terms).

    With a mass that never increases (glued Vaidya) a second report without
    the radiating bulk is added; ``drop_radiating`` forces it on or off.
    """
    ell = run.ell
    taus = _tau_list(tau_pairs, dtau)
    c_wall = default_wall(run, taus[-1]) if c_wall is None else c_wall
    hv = run.harvest(
        taus, walls=(c_wall,), eta_prime=eta_prime, R_cut=min(R, 10.0),
        on_slice=lambda sl: _bnd_terms(sl, R, ell, c_wall),
    )
    terms = [hv.slices[t] for t in taus]
    ws = wall_samples(run.bg, hv.walls[c_wall], ell)
    eta_p = run.bg.eta_prime if eta_prime is None else eta_prime
    if drop_radiating is None:
        drop_radiating = _mass_nonincreasing(run.bg)
    reports = []
    for t1, t2 in tau_pairs:
        i1, i2 = taus.index(round(t1, 12)), taus.index(round(t2, 12))
        ua, ub = wall_crossing(ws, t1, eta_p), wall_crossing(ws, t2, eta_p)
        out = en.wall_outflow(ws, ell, ua, ub)
        rad = _window([t["radiating"] for t in terms], taus, t1, t2)
        cut = _window([t["cutoff"] for t in terms], taus, t1, t2)
        lhs = terms[i2]["flux"] + out
        params = dict(R=R, tau1=t1, tau2=t2, h=run.h)
        extras = dict(outflow=out, radiating=rad, cutoff=cut, flux_1=terms[i1]["flux"], flux_2=terms[i2]["flux"])
        reports.append(InequalityReport("boundedness", lhs, terms[i1]["flux"] + rad + cut, params, extras))
        if drop_radiating:
            reports.append(InequalityReport(
                "boundedness_no_radiating", lhs, terms[i1]["flux"] + cut, dict(params), dict(extras)))
    return reports


# Morawetz -------------------------------------------------------------------------

def check_morawetz(run, window, eta=None, R=10.0, variant="basic", R_c=None, dtau=0.5, c_wall=None,
                   eta_prime=None, radiating=True):
    ell = run.ell
    eta = 0.5 * run.bg.a if eta is None else eta
    if variant == "improved" and R_c is None:
        R_c = 2.0 * R
    en._check_morawetz(run.bg, eta, R, variant, R_c)
    t1, t2 = window
    taus = _tau_list([window], dtau)
    c_wall = default_wall(run, taus[-1]) if c_wall is None else c_wall

    def per_slice(sl):
        sl = sl.select(sl.v - sl.u <= c_wall)
        return en.morawetz_terms(sl, eta, R, ell, variant, R_c)

    hv = run.harvest(taus, walls=(c_wall,), eta_prime=eta_prime, R_cut=min(R, 10.0), on_slice=per_slice)
    terms = [hv.slices[t] for t in taus]
    ws = wall_samples(run.bg, hv.walls[c_wall], ell)
    eta_p = run.bg.eta_prime if eta_prime is None else eta_prime
    wall_term = en.morawetz_wall(ws, ell, wall_crossing(ws, t1, eta_p), wall_crossing(ws, t2, eta_p))
    lhs, rhs = en.morawetz_combine(terms, variant, R_c, wall_term, radiating)
    return InequalityReport(
        f"morawetz_{variant}", lhs, rhs,
        dict(eta=eta, R=R, tau1=t1, tau2=t2, h=run.h),
        dict(R_c=R_c, wall=wall_term),
    )


# discrete divergence theorem ------------------------------------------------------

@dataclass
class DivergenceResult:
    residual: float
    energy: float
    parts: dict

    @property
    def relative(self):
        return self.residual / self.energy if self.energy > 0 else 0.0


def _flux_between(sl, ell, c_in, c_out):
    dens = en.jt_density(sl, ell, np.ones_like(sl.v))
    x = sl.v - sl.u
    if not (x[0] <= c_in and c_out <= x[-1]):
        raise ParamError(f"slice tau={sl.tau} does not span the lens")
    v_in = float(np.interp(c_in, x, sl.v))
    v_out = float(np.interp(c_out, x, sl.v))
    return trapz_window(sl.v, dens, v_in, v_out)


def divergence_residual(run, taus, r_window, eta_prime=None):
    """|F(tau2) - F(tau1) + out(outer) - out(inner)| on the lens between two slices and two r-walls.

    F is the unweighted T-flux through the slice part inside the walls and
    out(c) the flux leaving through the wall v - u = c.  The bulk term
    (W_u + W_v) psi^2 vanishes on static backgrounds, the only ones accepted.
    The normalising energy is the total flux crossing the lens boundary.
    """
    bg, ell = run.bg, run.ell
    if not bg.static:
        raise UnsupportedError("divergence check needs a static background (r-walls are diagonals only there)")
    t1, t2 = taus
    c_in, c_out = (float(tortoise(bg, r)) for r in r_window)
    hv = run.harvest(
        (t1, t2), walls=(c_in, c_out), eta_prime=eta_prime, R_cut=max(r_window[0] - 2.0, 1.0),
        on_slice=lambda sl: _flux_between(sl, ell, c_in, c_out),
    )
    F1, F2 = hv.slices[t1], hv.slices[t2]
    eta_p = bg.eta_prime if eta_prime is None else eta_prime
    outs = []
    for c in (c_in, c_out):
        ws = wall_samples(bg, hv.walls[c], ell)
        outs.append(en.wall_outflow(ws, ell, wall_crossing(ws, t1, eta_p), wall_crossing(ws, t2, eta_p)))
    out_in, out_out = outs
    residual = abs(F2 - F1 + out_out - out_in)
    energy = abs(F1) + abs(F2) + abs(out_in) + abs(out_out)
    return DivergenceResult(residual, energy, dict(flux_1=F1, flux_2=F2, out_inner=out_in, out_outer=out_out))


# decay ----------------------------------------------------------------------------

DECAY_QUANTITIES = ("e_en", "sup_r2phi2", "sup_phi2_inner")


def _decay_terms(sl, ell, inner_r, m):
    q = sl.bg.d - 1
    inner = sl.select(sl.r <= inner_r)
    return {
        "e_en": en.nondeg_energy(sl, ell, m),
        "sup_r2phi2": sup_weighted(sl, q),
        "sup_phi2_inner": sup_weighted(inner, 0) if len(inner) else 0.0,
        "tail": en.tail_fraction(sl, en.nondeg_density(sl, ell, m)),
    }


def decay_series(run, taus, R_cut=3.0, inner_r=20.0, m=1, eta_prime=None):
    """Per-slice E_en, sup r^{d-1} phi^2 and sup over r <= inner_r of phi^2."""
    taus = [float(t) for t in taus]
    ell = run.ell
    hv = run.harvest(taus, eta_prime=eta_prime, R_cut=R_cut, on_slice=lambda sl: _decay_terms(sl, ell, inner_r, m))
    t = np.array(taus)
    out = {name: (t, np.array([hv.slices[x][name] for x in taus])) for name in DECAY_QUANTITIES}
    out["tail"] = (t, np.array([hv.slices[x]["tail"] for x in taus]))
    return out


@dataclass
class DecayFit:
    tau: np.ndarray
    values: np.ndarray
    window: tuple
    exponent: float
    stderr: float
    intercept: float
    name: str = ""

    def row(self):
        return [self.name, self.window[0], self.window[1], self.exponent, self.stderr]


def default_fit_window(tau):
    """Last factor-4 span of the run, with the first 20% treated as transient."""
    tau = np.asarray(tau, float)
    t0, t1 = float(tau[0]), float(tau[-1])
    lo = t0 + 0.2 * (t1 - t0)
    return max(lo, t1 / 4.0), t1


def fit_decay(series, window=None, name=""):
    """OLS slope of log(value) against log(tau) over the window."""
    if isinstance(series, tuple) and len(series) == 2 and np.ndim(series[0]) == 1:
        tau, vals = (np.asarray(a, float) for a in series)
    else:
        arr = np.asarray(series, float)
        tau, vals = arr[:, 0], arr[:, 1]
    if window is None:
        window = default_fit_window(tau)
    ta, tb = window
    keep = (tau >= ta - 1e-12) & (tau <= tb + 1e-12)
    if keep.sum() < 8:
        raise InsufficientData(f"{int(keep.sum())} points in window [{ta}, {tb}], need 8")
    t, y = tau[keep], vals[keep]
    if np.any(y <= 0) or np.any(t <= 0):
        raise NonpositiveValue("decay fit needs positive tau and values")
    res = stats.linregress(np.log(t), np.log(y))
    return DecayFit(t, y, (float(ta), float(tb)), float(res.slope), float(res.stderr), float(res.intercept), name)


def write_fits_csv(path, fits):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(FIT_HEADER + "\n")
        for f in fits:
            fh.write(",".join(en._fmt(x) for x in f.row()) + "\n")


# radiation field ------------------------------------------------------------------

@dataclass
class RadiationField:
    u: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    ladders: np.ndarray  # extrapolants from ladders ending at r_max/4, r_max/2, r_max
    alternate: np.ndarray  # ladder (3/16, 3/8, 3/4) r_max, i.e. {1.5r, 3r, 6r} next to {r, 2r, 4r}
    transversal: np.ndarray  # r d_r psi at r_max/4, r_max/2, r_max
    r_max: np.ndarray
    ell: int = 0
    d: int = 3

    @property
    def cauchy_ratios(self):
        """|E2 - E1| / |E3 - E2| per row; >= 2 when successive extrapolants contract."""
        d1 = np.abs(self.ladders[:, 1] - self.ladders[:, 0])
        d2 = np.abs(self.ladders[:, 2] - self.ladders[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(d2 > 0, d1 / d2, np.inf)

    @property
    def path_independent(self):
        tol = self.errors + 1e-14 * (1 + np.abs(self.values))
        return bool(np.all(np.abs(self.alternate - self.values) <= 2 * tol))

    @property
    def transversal_bounded(self):
        t = np.abs(self.transversal)
        floor = 1e-9 * (1.0 + np.max(np.abs(self.values), initial=0.0))
        return bool(np.all(t[:, 2] <= 2.0 * np.maximum(t[:, 0], t[:, 1]) + floor))

    def export_csv(self, path):
        table = np.column_stack([self.u, self.values, self.errors, self.transversal[:, 2]])
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header=RADIATION_HEADER, comments="")


def _lagrange4(x, y, x0):
    j = int(np.searchsorted(x, x0))
    lo = min(max(j - 2, 0), x.size - 4)
    return float(BarycentricInterpolator(x[lo:lo + 4], y[lo:lo + 4])(x0))


def _richardson(radii, vals):
    """Value at 1/r = 0 of the quadratic in 1/r through three points."""
    A = np.vander(1.0 / np.asarray(radii), 3, increasing=True)
    return float(np.linalg.solve(A, vals)[0])


def _row_radiation(bg, grid, row, u):
    v = grid.v
    geo = chart(bg, np.full(v.shape, u), v, clamp=True)
    r = geo.r
    r_max = float(r[-1])
    psi_v = np.gradient(row, grid.h, edge_order=2)

    def at(rr):
        if bg.static:
            vv = u + float(tortoise(bg, rr))
        else:
            vv = float(np.interp(rr, r, v))
        return _lagrange4(v, row, vv), _lagrange4(v, psi_v, vv), _lagrange4(v, geo.r_v, vv)

    def ladder(radii):
        return _richardson(radii, [at(x)[0] for x in radii])

    lads = [ladder([top / 4.0, top / 2.0, top]) for top in (r_max / 4.0, r_max / 2.0, r_max)]
    alt = ladder([3 * r_max / 16.0, 3 * r_max / 8.0, 3 * r_max / 4.0])
    trans = []
    for x in (r_max / 4.0, r_max / 2.0, r_max):
        _, pv, rv = at(x)
        trans.append(x * pv / rv)
    return lads, alt, trans, r_max


def extract_radiation_field(run, u_list, r_ext=200.0, ell=None):
    """Phi at I+ along rows u = const by Richardson extrapolation in 1/r.

    Three dyadic radii per ladder, ladders ending at r_max/4, r_max/2 and
    r_max; the error estimate is the last difference of extrapolants.
    """
    g = run.grid
    idx = sorted({int(round((u - g.u0) / g.h)) for u in u_list})
    if not idx or idx[0] < 0 or idx[-1] > g.Nu - 1:
        raise ParamError("u-list outside the grid")
    hv = run.harvest(rows=idx)
    us, vals, errs, lads, alts, trans, rmax = [], [], [], [], [], [], []
    for i in idx:
        u = g.u0 + i * g.h
        lad, alt, tr, r_max = _row_radiation(run.bg, g, hv.rows[i], u)
        if r_max < r_ext:
            raise InsufficientRadius(f"row u={u:g} reaches r={r_max:g} < {r_ext:g}")
        us.append(u)
        vals.append(lad[2])
        errs.append(abs(lad[2] - lad[1]))
        lads.append(lad)
        alts.append(alt)
        trans.append(tr)
        rmax.append(r_max)
    return RadiationField(
        np.array(us), np.array(vals), np.array(errs), np.array(lads), np.array(alts), np.array(trans),
        np.array(rmax), run.ell if ell is None else ell, run.bg.d,
    )


# Hardy ----------------------------------------------------------------------------

def hardy(kind, params=None, fn="const"):
    """Quadrature check of one Hardy inequality for one test function."""
    params = dict(params or {})
    tf = hd.family_function(fn) if isinstance(fn, str) else fn
    lhs, rhs, C = hd.evaluate(kind, tf, **params)
    ratio, vacuous = hd.ratio(lhs, rhs)
    rep = InequalityReport(
        f"hardy_{kind.upper()}:{tf.name}", lhs, rhs, {},
        dict(constant=C, normalized=ratio / C, applicable=hd.applicable(kind, tf, **params), **params),
    )
    return rep


HARDY_CASES = {
    "C1": [dict(weight=w, a=a, b=b) for w in ("x", "x^2", "1/x") for a, b in ((1.0, 5.0), (10.0, 60.0))],
    "C2": [dict(k=k, a=a, d=3, R1=R1, R2=R2) for k in (1, 2) for a in (0.0, 1.0, 2.0)
           for R1, R2 in ((10.0, 100.0), (2.0, 30.0))],
    "C3": [dict(k=k, a=a, d=3, R1=R1) for k in (1, 2) for a in (0.0, 1.0, 2.0) for R1 in (10.0, 2.0)],
    "C4": [dict(R=R) for R in (2.0, 10.0, 100.0, 1e6)],
}


def hardy_suite(kinds=("C1", "C2", "C3", "C4"), cases=None):
    """Every applicable (case, family member) pair; vacuous 0 <= 0 instances included."""
    cases = HARDY_CASES if cases is None else cases
    out = []
    for kind in kinds:
        for params in cases[kind]:
            for tf in hd.FAMILY:
                if hd.applicable(kind, tf, **params):
                    out.append(hardy(kind, params, tf))
    return out


def hardy_sharpness(R0=1e6):
    lhs, rhs, C = hd.c4_sharpness(R0)
    ratio, _ = hd.ratio(lhs, rhs)
    return InequalityReport("hardy_C4_sharpness", lhs, rhs, {}, dict(constant=C, normalized=ratio / C, R0=R0))
