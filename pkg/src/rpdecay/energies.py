"""Weighted energy functionals on slices, walls and lenses, in mode form.

Everything is written for the mode amplitude psi (the Omega-rescaled
field) with unit-normalised harmonics, so angular integrals reduce to

    |r^-1 d_sigma Phi|^2  ->  lambda r^-2 psi^2
    |d_sigma^2 Phi|^2     ->  lambda (lambda - (d - 2)) psi^2

Spacetime integrals over a lens are iterated as dtau followed by dv along
each slice.  Pieces written as du dv integrals carry the factor 1/(d tbar/du);
those weighted by Omega^2 use the coarea weight w of the slice.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .background import angular_eigenvalue, chart, mode_coefficient
from .errors import ParamError
from .slices import smoothstep
from .waveop import angular_amplitude

ENERGY_HEADER = "tau,p,delta,eta,ell,name,value,h"

_trapz = getattr(np, "trapezoid", None) or np.trapz


def trapz(y, x):
    if len(x) < 2:
        return 0.0
    return float(_trapz(y, x))


def trapz_window(x, y, xa, xb):
    """Integral over [xa, xb] of the piecewise-linear interpolant of (x, y)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2:
        return 0.0
    xa, xb = max(xa, x[0]), min(xb, x[-1])
    if xb <= xa:
        return 0.0
    inner = (x > xa) & (x < xb)
    xs = np.concatenate([[xa], x[inner], [xb]])
    ys = np.concatenate([[np.interp(xa, x, y)], y[inner], [np.interp(xb, x, y)]])
    return trapz(ys, xs)


def _check_p(p, lo, hi):
    if not lo < p <= hi:
        raise ParamError(f"p = {p} outside ({lo}, {hi}]")


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ParamError("delta must lie in (0, 1)")


def _check_eta(eta, a):
    if not 0.0 < eta < a:
        raise ParamError("eta must lie in (0, a)")


def _W(s, ell):
    if getattr(s, "ell", None) == ell and getattr(s, "W", None) is not None:
        return s.W
    geo = chart(s.bg, s.u, s.v)
    return mode_coefficient(s.bg, ell, None, None, geo=geo)


# blocks of the commuted hierarchy ------------------------------------------------

def blocks(k):
    """(j, k1, k2, k3) with j = 1..k and k1 + k2 + k3 = j - 1."""
    out = []
    for j in range(1, k + 1):
        for k1 in range(j):
            for k2 in range(j - k1):
                out.append((j, k1, k2, j - 1 - k1 - k2))
    return out


def _dpsi(s, nv, nu):
    table = {
        (0, 0): s.psi, (1, 0): s.psi_v, (0, 1): s.psi_u,
        (2, 0): s.psi_vv, (1, 1): s.psi_uv, (0, 2): s.psi_uu,
    }
    return table[(nv, nu)]


@dataclass
class BlockTerms:
    X0: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    Xu: np.ndarray
    Y: np.ndarray
    Y_u: np.ndarray
    Y_v: np.ndarray


def block_terms(s, ell, k1, k2, k3):
    """Mode form of r^{-k2-k3} d_v^k1 d_sigma^k2 d_u^k3 psi and its companions."""
    d = s.bg.d
    sig = angular_amplitude(ell, k2, d)
    sig1 = angular_amplitude(ell, k2 + 1, d) if k2 + 1 <= 2 else math.sqrt(angular_eigenvalue(ell, d)) ** (k2 + 1)
    r = s.r
    m = k2 + k3
    base = _dpsi(s, k1, k3)
    X0 = sig * r**-m * base
    X1 = sig * r**-m * _dpsi(s, k1 + 1, k3)
    X2 = sig1 * r ** (-m - 1) * base
    Xu = sig * r**-m * _dpsi(s, k1, k3 + 1)
    Y = sig * r**-k2 * base
    Y_u = sig * (r**-k2 * _dpsi(s, k1, k3 + 1) - k2 * r ** (-k2 - 1) * s.r_u * base)
    Y_v = sig * (r**-k2 * _dpsi(s, k1 + 1, k3) - k2 * r ** (-k2 - 1) * s.r_v * base)
    return BlockTerms(X0, X1, X2, Xu, Y, Y_u, Y_v)


# J^T flux -------------------------------------------------------------------------

def jt_density(sl, ell, theta=None, Y=None, Y_u=None, Y_v=None):
    W = _W(sl, ell)
    Y = sl.psi if Y is None else Y
    Y_u = sl.psi_u if Y_u is None else Y_u
    Y_v = sl.psi_v if Y_v is None else Y_v
    theta = sl.theta if theta is None else theta
    A = Y_v**2 + W * Y**2
    B = Y_u**2 + W * Y**2
    return 0.5 * theta * (A + B * np.abs(sl.slope))


def jt_flux(sl, ell, R=None):
    """Flux of the T-current through the slice: 1/2 int theta (A + B |du/dv|) dv.

    A = psi_v^2 + W psi^2 and B = psi_u^2 + W psi^2 are the components of the
    conserved current d_u A + d_v B = (W_u + W_v) psi^2.
    """
    theta = sl.theta if R is None else sl.theta_for(R)[0]
    return trapz(jt_density(sl, ell, theta), sl.v)


# bound / bulk energies ------------------------------------------------------------

def higher_energy(sl, p, k, delta, ell, R=None):
    """E_bound^{(p,k)} for k in {1, 2}."""
    if k not in (1, 2):
        raise ParamError("higher_energy supports k in {1, 2}")
    _check_p(p, 2 * k - 2, 2 * k)
    _check_delta(delta)
    theta, _ = sl.theta_for(sl.R_cut if R is None else R)
    r, d, eta_p = sl.r, sl.bg.d, sl.eta_prime
    total = 0.0
    for j, k1, k2, k3 in blocks(k):
        b = block_terms(sl, ell, k1, k2, k3)
        s = 2 * (k - j)
        zeroth = (d - 3) * r ** (p - 2 - s) + np.minimum(r ** (p - 2 - s), r ** (-delta - s))
        dens = theta * (r ** (p - s) * b.X1**2 + r ** (-1 - eta_p) * (r ** (p - s) * b.X2**2 + zeroth * b.X0**2))
        total += trapz(dens, sl.v)
        total += trapz(jt_density(sl, ell, theta, b.Y, b.Y_u, b.Y_v), sl.v)
    return total


def bound_energy(sl, p, delta, R, ell):
    _check_p(p, 0.0, 2.0)
    return higher_energy(sl, p, 1, delta, ell, R)


def bulk_energy_density(sl, p, delta, eta, R, ell, k=1):
    """Slice density of E_bulk^{(p-1,k)}; integrate over tau for the lens bulk."""
    if k not in (1, 2):
        raise ParamError("bulk density supports k in {1, 2}")
    _check_p(p, 2 * k - 2, 2 * k)
    _check_delta(delta)
    _check_eta(eta, sl.bg.a)
    theta, _ = sl.theta_for(R)
    r, d = sl.r, sl.bg.d
    dens = 0.0
    for j, k1, k2, k3 in blocks(k):
        b = block_terms(sl, ell, k1, k2, k3)
        s = 2 * (k - j)
        ang = (2 * k - p) * r ** (p - 1 - s) + r ** (p - 1 - delta - s)
        zeroth = (2 * k - p) * (d - 3) * r ** (p - 3 - s) + np.minimum(r ** (p - 3 - s), r ** (-1 - delta - s))
        dens = dens + p * r ** (p - 1 - s) * b.X1**2 + ang * b.X2**2 + zeroth * b.X0**2 + r ** (-1 - eta) * b.Xu**2
    return trapz(theta * dens / sl.tu, sl.v)


def gradient_sq(s, ell, order):
    """|d^j psi|^2 in mode form for j = 0, 1, 2."""
    lam = angular_eigenvalue(ell, s.bg.d)
    r = s.r
    if order == 0:
        return s.psi**2
    if order == 1:
        return s.psi_u**2 + s.psi_v**2 + lam * r**-2 * s.psi**2
    sig2 = angular_amplitude(ell, 2, s.bg.d) ** 2
    return (
        s.psi_uu**2 + 2 * s.psi_uv**2 + s.psi_vv**2
        + lam * r**-2 * (s.psi_u**2 + s.psi_v**2) + sig2 * r**-4 * s.psi**2
    )


def cutoff_density(sl, p, R, ell, k=1):
    """Slice density of sum_j int |d theta| r^{p-2(k-j)} |d^j psi|^2 du dv."""
    _, dth = sl.theta_for(R)
    r = sl.r
    dens = 0.0
    for j in range(k + 1):
        dens = dens + r ** (p - 2 * (k - j)) * gradient_sq(sl, ell, j)
    return trapz(dth * dens / sl.tu, sl.v)


# wall (I+ proxy) ------------------------------------------------------------------

@dataclass
class WallSamples:
    """Wall trace with geometry attached; quacks like a slice for block_terms."""

    bg: object
    u: np.ndarray
    v: np.ndarray
    r: np.ndarray
    r_u: np.ndarray
    r_v: np.ndarray
    psi: np.ndarray
    psi_u: np.ndarray
    psi_v: np.ndarray
    psi_uu: np.ndarray
    psi_uv: np.ndarray
    psi_vv: np.ndarray
    ell: int = None
    W: np.ndarray = None


def wall_samples(bg, trace, ell=None):
    u, v, vals = trace.arrays()
    geo = chart(bg, u, v)
    W = mode_coefficient(bg, ell, None, None, geo=geo) if ell is not None else None
    return WallSamples(bg, u, v, geo.r, geo.r_u, geo.r_v, *vals, ell=ell, W=W)


def wall_outflow(ws, ell, ua, ub, Y=None, Y_u=None, Y_v=None):
    """T-flux leaving through the wall for u in [ua, ub]: 1/2 int (B - A) du."""
    Y_u = ws.psi_u if Y_u is None else Y_u
    Y_v = ws.psi_v if Y_v is None else Y_v
    return trapz_window(ws.u, 0.5 * (Y_u**2 - Y_v**2), ua, ub)


def scri_energy(ws, p, k, delta, ell, ua, ub):
    """Largest-radius wall proxy for the boundary energy at null infinity."""
    _check_delta(delta)
    r, d = ws.r, ws.bg.d
    total = 0.0
    for j, k1, k2, k3 in blocks(k):
        b = block_terms(ws, ell, k1, k2, k3)
        s = 2 * (k - j)
        zeroth = (d - 3) * r ** (p - 2 - s) + np.minimum(r ** (p - 2 - s), r ** (-delta - s))
        total += trapz_window(ws.u, r ** (p - s) * b.X2**2 + zeroth * b.X0**2, ua, ub)
        total += wall_outflow(ws, ell, ua, ub, b.Y, b.Y_u, b.Y_v)
    return total


# Morawetz -------------------------------------------------------------------------

def _phi_parts(s):
    """phi = psi / Omega and its null derivatives."""
    d = s.bg.d
    k = 0.5 * (d - 1)
    om = s.r**k
    phi = s.psi / om
    phi_u = s.psi_u / om - k * s.r_u / s.r * phi
    phi_v = s.psi_v / om - k * s.r_v / s.r * phi
    return phi, phi_u, phi_v


def improved_profile(r, R_c, eta):
    """f_imp(r) and its r-derivative: (r^eta/(1 + r^eta)) R_c g(r/R_c).

    g(x) = x for x <= 1 and g' = 1 - s(x - 1) after, so g is smooth, increasing,
    concave and constant (= 3/2) for x >= 2.
    """
    x = np.asarray(r, float) / R_c
    y = np.clip(x - 1.0, 0.0, 1.0)
    g = np.where(x <= 1, x, 1.0 + y - (y**3 - 0.5 * y**4))
    g = np.where(x >= 2, 1.5, g)
    gp = 1.0 - smoothstep(x - 1.0)
    f = r**eta / (1 + r**eta)
    fp = eta * r ** (eta - 1) / (1 + r**eta) ** 2
    return f * R_c * g, fp * R_c * g + f * gp


def morawetz_weights(r, eta, variant="basic", R_c=None):
    """Weights of (|d_u phi|^2 + |d_v phi|^2, lambda r^-2 phi^2, phi^2) in the bulk."""
    if variant == "basic":
        return r ** (-1 - eta), r**-1.0, r ** (-3 - eta)
    if variant == "improved":
        F, Fp = improved_profile(r, R_c, eta)
        return Fp, F / r, Fp / r**2
    raise ParamError(f"unknown Morawetz variant {variant!r}")


def morawetz_bulk_density(sl, eta, R, ell, variant="basic", R_c=None):
    theta, _ = sl.theta_for(R)
    lam = angular_eigenvalue(ell, sl.bg.d)
    phi, phi_u, phi_v = _phi_parts(sl)
    w1, w2, w3 = morawetz_weights(sl.r, eta, variant, R_c)
    dens = theta * (w1 * (phi_u**2 + phi_v**2) + w2 * lam * sl.r**-2 * phi**2 + w3 * phi**2)
    return trapz(dens * sl.w, sl.v)


def morawetz_cutoff_density(sl, eta, R, ell, variant="basic", R_c=None):
    _, dth = sl.theta_for(R)
    lam = angular_eigenvalue(ell, sl.bg.d)
    phi, phi_u, phi_v = _phi_parts(sl)
    weight = 1.0 if variant == "basic" else improved_profile(sl.r, R_c, eta)[0]
    dens = dth * weight * (phi_u**2 + phi_v**2 + lam * sl.r**-2 * phi**2 + sl.r**-2 * phi**2)
    return trapz(dens * sl.w, sl.v)


def morawetz_radiating_density(sl, R, ell):
    theta, _ = sl.theta_for(R)
    lam = angular_eigenvalue(ell, sl.bg.d)
    phi, _, phi_v = _phi_parts(sl)
    dens = theta / sl.r * (phi_v**2 + lam * sl.r**-2 * phi**2 + sl.r**-2 * phi**2)
    return trapz(dens * sl.w, sl.v)


def morawetz_boundary(sl, R, ell):
    theta, _ = sl.theta_for(R)
    lam = angular_eigenvalue(ell, sl.bg.d)
    phi, phi_u, phi_v = _phi_parts(sl)
    r = sl.r
    dens = theta * (phi_v**2 + lam * r**-2 * phi**2 + r ** (-1 - sl.eta_prime) * phi_u**2 + r**-2 * phi**2)
    return trapz(dens * r ** (sl.bg.d - 1), sl.v)


def morawetz_wall(ws, ell, ua, ub):
    lam = angular_eigenvalue(ell, ws.bg.d)
    phi, phi_u, phi_v = _phi_parts(ws)
    r = ws.r
    dens = (phi_u**2 + phi_v**2 + lam * r**-2 * phi**2 + r**-2 * phi**2) * r ** (ws.bg.d - 1)
    return trapz_window(ws.u, dens, ua, ub)


def morawetz_terms(sl, eta, R, ell, variant="basic", R_c=None):
    """Per-slice pieces of the Morawetz pair; small enough to keep for a whole run."""
    return {
        "tau": sl.tau,
        "bulk": morawetz_bulk_density(sl, eta, R, ell, variant, R_c),
        "cutoff": morawetz_cutoff_density(sl, eta, R, ell, variant, R_c),
        "radiating": morawetz_radiating_density(sl, R, ell),
        "boundary": morawetz_boundary(sl, R, ell),
    }


def morawetz_combine(terms, variant="basic", R_c=None, wall_term=0.0, radiating=True):
    taus = np.array([t["tau"] for t in terms])
    lhs = trapz([t["bulk"] for t in terms], taus)
    rhs = trapz([t["cutoff"] for t in terms], taus)
    rhs += terms[0]["boundary"] + terms[-1]["boundary"] + wall_term
    if radiating:
        scale = 1.0 if variant == "basic" else R_c
        rhs += scale * trapz([t["radiating"] for t in terms], taus)
    return lhs, rhs


def _check_morawetz(bg, eta, R, variant, R_c):
    _check_eta(eta, bg.a)
    if variant == "improved" and (R_c is None or R_c < R):
        raise ParamError("improved variant needs R_c >= R")


def morawetz_pair(slices, eta, R, ell, variant="basic", R_c=None, wall=None, radiating=True):
    """(lhs, rhs) from slices ordered in tau covering [tau_1, tau_2].

    ``wall`` is an optional :class:`WallSamples` for the outer boundary.
    With ``radiating`` False the radiating-error bulk is left out.
    """
    if len(slices) < 2:
        raise ParamError("need at least two slices")
    _check_morawetz(slices[0].bg, eta, R, variant, R_c)
    terms = [morawetz_terms(s, eta, R, ell, variant, R_c) for s in slices]
    wall_term = 0.0
    if wall is not None:
        ua = wall_crossing(wall, slices[0].tau, slices[0].eta_prime)
        ub = wall_crossing(wall, slices[-1].tau, slices[0].eta_prime)
        wall_term = morawetz_wall(wall, ell, ua, ub)
    return morawetz_combine(terms, variant, R_c, wall_term, radiating)


def wall_crossing(ws, tau, eta_prime):
    """u at which the wall meets the slice {tbar = tau}."""
    t = ws.u - 1.0 / (1.0 + ws.r**eta_prime)
    if t.size == 0 or not t[0] <= tau <= t[-1]:
        raise ParamError(f"wall does not reach the slice tau={tau}")
    return float(np.interp(tau, t, ws.u))


# boundedness pieces ---------------------------------------------------------------

def radiating_bulk_density(sl, R, ell):
    theta, _ = sl.theta_for(R)
    lam = angular_eigenvalue(ell, sl.bg.d)
    r = sl.r
    dens = theta / r * (sl.psi_v**2 + lam * r**-2 * sl.psi**2 + r**-2 * sl.psi**2)
    return trapz(dens / sl.tu, sl.v)


def jt_cutoff_density(sl, R, ell):
    _, dth = sl.theta_for(R)
    lam = angular_eigenvalue(ell, sl.bg.d)
    r = sl.r
    dens = dth * (sl.psi_u**2 + sl.psi_v**2 + lam * r**-2 * sl.psi**2 + sl.psi**2 / r)
    return trapz(dens / sl.tu, sl.v)


# non-degenerate energy ------------------------------------------------------------

def nondeg_density(sl, ell, m=1):
    if m not in (1, 2):
        raise ParamError("nondeg_energy supports m in {1, 2}")
    lam = angular_eigenvalue(ell, sl.bg.d)
    r = sl.r
    slope = sl.slope
    L1 = sl.psi_v + slope * sl.psi_u
    T1 = sl.psi_u + sl.psi_v
    dens = L1**2 + lam * r**-2 * sl.psi**2 + r**-2 * T1**2 + r**-2 * sl.psi**2
    if m == 2:
        v = sl.v
        L2 = np.gradient(L1, v, edge_order=2) if v.size > 2 else np.zeros_like(v)
        LT = np.gradient(T1, v, edge_order=2) if v.size > 2 else np.zeros_like(v)
        T2 = sl.psi_uu + 2 * sl.psi_uv + sl.psi_vv
        hess = lam * (lam - (sl.bg.d - 2))
        dens = dens + L2**2 + 2 * lam * r**-2 * L1**2 + hess * r**-4 * sl.psi**2
        dens = dens + LT**2 + lam * r**-2 * T1**2 + r**-2 * T2**2
    return dens


def nondeg_energy(sl, ell, m=1):
    """E_en: slice-tangential (L = d_v + u' d_u) and T = d_u + d_v derivatives up to order m."""
    return trapz(nondeg_density(sl, ell, m), sl.v)


def tail_fraction(sl, density):
    """Share of the slice integral from the outermost decade of r."""
    total = trapz(density, sl.v)
    if total <= 0 or sl.r.size < 3:
        return 0.0
    mask = sl.r >= sl.r[-1] / 10.0
    return trapz(density[mask], sl.v[mask]) / total


# radiation field energy -----------------------------------------------------------

def radiation_energy(rad, u_window, p, k, ell=None):
    """sum_k1 sigma_k1^2 int (d_u^{k-k1} Phi_I)^2 du with r^{p-2k} at I+ set to 1 (p = 2k) or 0 (p < 2k)."""
    if k < 0 or int(k) != k:
        raise ParamError("k must be a nonnegative integer")
    if p > 2 * k:
        raise ParamError("p must not exceed 2k")
    if p < 2 * k:
        return 0.0
    ell = rad.ell if ell is None else ell
    u = np.asarray(rad.u, float)
    vals = np.asarray(rad.values, float)
    ua, ub = u_window
    total = 0.0
    derivs = [vals]
    for _ in range(k):
        derivs.append(np.gradient(derivs[-1], u, edge_order=2))
    for k1 in range(k + 1):
        sig = angular_amplitude(ell, k1, 3 if rad.d is None else rad.d) if k1 <= 2 else 0.0
        if sig == 0.0:
            continue
        total += sig**2 * trapz_window(u, derivs[k - k1] ** 2, ua, ub)
    return total


# reports --------------------------------------------------------------------------

@dataclass
class EnergyReport:
    tau: float
    p: float
    delta: float
    eta: float
    ell: int
    values: dict = field(default_factory=dict)
    quadrature_h: float = float("nan")

    def rows(self):
        for name, value in self.values.items():
            yield (self.tau, self.p, self.delta, self.eta, self.ell, name, value, self.quadrature_h)


def energy_report(sl, p, delta, eta, R, ell):
    vals = {
        "e_bound": bound_energy(sl, p, delta, R, ell) if 0 < p <= 2 else float("nan"),
        "e_bulk_density": bulk_energy_density(sl, p, delta, eta, R, ell) if 0 < p <= 2 else float("nan"),
        "jt_flux": jt_flux(sl, ell, R),
        "e_en": nondeg_energy(sl, ell, 1),
    }
    if np.all(np.isfinite(sl.psi_vv)):
        p2 = p + 2 if p <= 2 else p
        vals["e_bound_k2"] = higher_energy(sl, p2, 2, delta, ell, R)
        vals["e_bulk_k2"] = bulk_energy_density(sl, p2, delta, eta, R, ell, k=2)
        vals["e_en_2"] = nondeg_energy(sl, ell, 2)
    return EnergyReport(sl.tau, p, delta, eta, ell, vals, sl.h)


def write_energy_csv(path, reports):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(ENERGY_HEADER + "\n")
        for rep in reports:
            for row in rep.rows():
                fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x
