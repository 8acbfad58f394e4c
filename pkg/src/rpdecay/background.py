"""Model spacetimes and their geometric scalars.

Conventions: t = u + v and r* = v - u, so a function of v alone is an
ingoing wave.  Every function here is vectorised over numpy arrays and is a
pure function of its arguments.

A glued Vaidya background is a sequence of Schwarzschild patches separated
by the outgoing null lines u = u_j.  Patch k carries its own advanced time
V_k(v); the map is fixed by requiring r to be continuous across each
junction, which gives

    V_1(v) = v,    V_k(v) = u_k + r*_k( r_{k-1}(V_{k-1}(v) - u_k) ),

and in patch k the areal radius is r = r_k(V_k(v) - u).
"""

from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from .errors import ConvergenceError, DomainError, ParamError

MINKOWSKI = "minkowski"
SCHWARZSCHILD = "schwarzschild"
GLUED_VAIDYA = "glued_vaidya"
KINDS = (MINKOWSKI, SCHWARZSCHILD, GLUED_VAIDYA)


@dataclass(frozen=True)
class BackgroundSpec:
    kind: str
    d: int = 3
    mass: float = 0.0
    mass_steps: tuple = ()
    eta_prime: float = 1.0
    a: float = 1.0
    eps_hor: float = None
    _us: tuple = field(default=(), repr=False, compare=False)
    _ms: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        kind = str(self.kind).lower().replace("-", "_")
        if kind in ("gluedvaidya", "vaidya"):
            kind = GLUED_VAIDYA
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ParamError(f"unknown background kind {self.kind!r}")
        if int(self.d) != self.d or self.d < 3:
            raise ParamError("dimension d must be an integer >= 3")
        if not 0.0 < self.a <= 1.0:
            raise ParamError("a must lie in (0, 1]")
        if not 0.0 < self.eta_prime < 1.0 + self.a:
            raise ParamError("eta_prime must lie in (0, 1 + a)")
        if self.eps_hor is not None and self.eps_hor < 0:
            raise ParamError("eps_hor must be nonnegative")
        if kind == MINKOWSKI:
            if self.mass != 0.0 or self.mass_steps:
                raise ParamError("Minkowski has zero mass")
            us, ms = (-np.inf,), (0.0,)
        elif kind == SCHWARZSCHILD:
            if self.d != 3:
                raise ParamError("Schwarzschild requires d = 3")
            if not self.mass > 0.0:
                raise ParamError("Schwarzschild requires mass > 0")
            us, ms = (-np.inf,), (float(self.mass),)
        else:
            if self.d != 3:
                raise ParamError("GluedVaidya requires d = 3")
            steps = tuple((float(u), float(m)) for u, m in self.mass_steps)
            if len(steps) < 2:
                raise ParamError("GluedVaidya needs at least two mass steps")
            us = (-np.inf,) + tuple(u for u, _ in steps[1:])
            ms = tuple(m for _, m in steps)
            if any(b <= a for a, b in zip(us, us[1:])):
                raise ParamError("junction positions must increase")
            if any(b >= a for a, b in zip(ms, ms[1:])):
                raise ParamError("masses must strictly decrease across junctions")
            if ms[-1] < 0 or ms[0] <= 0:
                raise ParamError("masses must be nonnegative, first mass positive")
            object.__setattr__(self, "mass_steps", steps)
        object.__setattr__(self, "_us", us)
        object.__setattr__(self, "_ms", ms)

    @classmethod
    def minkowski(cls, d=3, **kw):
        return cls(MINKOWSKI, d=d, **kw)

    @classmethod
    def schwarzschild(cls, mass=1.0, **kw):
        return cls(SCHWARZSCHILD, mass=mass, **kw)

    @classmethod
    def glued_vaidya(cls, steps, **kw):
        return cls(GLUED_VAIDYA, mass_steps=tuple(steps), **kw)

    @property
    def static(self):
        return self.kind != GLUED_VAIDYA

    @property
    def npatch(self):
        return len(self._ms)

    @property
    def junctions(self):
        return self._us[1:]

    def patch_mass(self, k=0):
        return self._ms[k]

    def eps(self, mass):
        if mass <= 0:
            return 0.0
        if self.eps_hor is None:
            return 1e-3 * max(self._ms)
        return float(self.eps_hor)

    def patch_of(self, u):
        """Index of the patch containing u (junction lines belong to the later patch)."""
        return np.searchsorted(np.asarray(self._us[1:]), np.asarray(u, float), side="right")


def angular_eigenvalue(ell, d=3):
    return ell * (ell + d - 2)


def dim_shift(d=3):
    return (d - 1) * (d - 3) / 4.0


# tortoise coordinate ---------------------------------------------------------

def _rstar_of_x(mass, x):
    x = np.asarray(x, float)
    if mass == 0:
        return x.copy()
    return 2 * mass + x + 2 * mass * np.log(x / (2 * mass))


def _x_of_rstar(mass, rstar, max_iter=100):
    """Return x = r - 2M solving r*(r) = rstar, by Newton in log x."""
    rs = np.asarray(rstar, float)
    if mass == 0:
        return rs.copy()
    m2 = 2.0 * mass
    far = rs > 2 * m2
    with np.errstate(invalid="ignore"):
        y = np.where(far, np.log(np.where(far, rs - m2, 1.0)), np.log(m2) + (rs - m2) / m2)
    lm2 = np.log(m2)
    for _ in range(max_iter):
        ey = np.exp(y)
        fval = m2 + ey + m2 * (y - lm2) - rs
        dy = fval / (ey + m2)
        y = y - dy
        if np.all(np.abs(dy) <= 1e-15 * np.maximum(1.0, np.abs(y))):
            return np.exp(y)
    raise ConvergenceError("tortoise inversion did not converge in %d Newton steps" % max_iter)


def tortoise(bg, r, patch=0):
    """r* = r + 2M ln(r/2M - 1) for the mass of the given patch."""
    mass = bg.patch_mass(patch)
    r = np.asarray(r, float)
    x = r - 2 * mass
    if np.any(x <= bg.eps(mass)):
        raise DomainError("radius inside the truncated domain r <= 2M + eps_hor")
    out = _rstar_of_x(mass, x)
    return out if out.ndim else float(out)


def invert_tortoise(bg, rstar, patch=0, clamp=True):
    """Inverse of :func:`tortoise`; results below 2M + eps_hor are clamped."""
    mass = bg.patch_mass(patch)
    x = _x_of_rstar(mass, rstar)
    eps = bg.eps(mass)
    if clamp:
        x = np.maximum(x, eps)
    out = 2 * mass + x
    return out if out.ndim else float(out)


# chart -------------------------------------------------------------------------

def _patch_vmap(bg, k, v, clamp=False):
    """(V_k, V_k', V_k'') at advanced time v."""
    v = np.asarray(v, float)
    vk, d1, d2 = v.copy(), np.ones_like(v), np.zeros_like(v)
    for j in range(1, k + 1):
        m_prev, m_new, uj = bg._ms[j - 1], bg._ms[j], bg._us[j]
        xj = _x_of_rstar(m_prev, vk - uj)
        rj = 2 * m_prev + xj
        if clamp:
            rj = np.maximum(rj, 2 * m_new * (1 + 1e-12) + 1e-300)
        elif np.any(rj - 2 * m_new <= 0):
            raise DomainError("junction radius below the horizon of the next patch")
        f_prev = xj / rj
        f_new = 1 - 2 * m_new / rj
        rho = f_prev / f_new
        fp_prev, fp_new = 2 * m_prev / rj**2, 2 * m_new / rj**2
        rho_r = (fp_prev * f_new - f_prev * fp_new) / f_new**2
        drj = f_prev * d1
        vk = uj + _rstar_of_x(m_new, rj - 2 * m_new)
        d2 = rho_r * drj * d1 + rho * d2
        d1 = rho * d1
    return vk, d1, d2


def chart(bg, u, v, patch=None, clamp=False):
    """Geometric scalars at (u, v).

    Returns a namespace with r, x = r - 2M, f = 1 - 2M/r, the partial
    derivatives r_u, r_v, r_uv, the metric coefficient g_uv, the local mass
    and the advanced-time map derivatives vp, vpp (1 and 0 when static).
    With ``clamp`` points below the truncation radius are pushed onto it
    instead of raising.
    """
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    if bg.kind == GLUED_VAIDYA:
        ks = np.full(u.shape, patch) if patch is not None else bg.patch_of(u)
    else:
        ks = np.zeros(u.shape, int)
    shape = u.shape
    out = {n: np.empty(shape) for n in ("r", "x", "f", "vp", "vpp", "mass")}
    for k in np.unique(ks):
        sel = ks == k
        mass = bg._ms[k]
        if bg.kind == GLUED_VAIDYA:
            vk, d1, d2 = _patch_vmap(bg, int(k), v[sel], clamp)
        else:
            vk, d1, d2 = v[sel], np.ones(sel.sum()), np.zeros(sel.sum())
        rs = vk - u[sel]
        x = _x_of_rstar(mass, rs)
        if clamp:
            x = np.maximum(x, max(bg.eps(mass), 1e-300))
        elif np.any(~(x > bg.eps(mass))):
            if mass == 0:
                raise DomainError("point with v <= u lies outside the Minkowski chart")
            raise DomainError("point inside the truncated domain r <= 2M + eps_hor")
        r = 2 * mass + x
        out["r"][sel], out["x"][sel] = r, x
        out["f"][sel] = x / r
        out["vp"][sel], out["vpp"][sel] = d1, d2
        out["mass"][sel] = mass
    r, f, mass = out["r"], out["f"], out["mass"]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        fr = 2 * mass / r**2
    ns = SimpleNamespace(**out)
    ns.patch = ks
    ns.r_u = -f
    ns.r_v = f * ns.vp
    ns.r_uv = -fr * f * ns.vp
    ns.g_uv = -2.0 * f * ns.vp
    return ns


def areal_radius(bg, u, v):
    r = chart(bg, u, v).r
    return r if r.ndim else float(r)


def conformal_factor(bg, r):
    r = np.asarray(r, float)
    if np.any(r <= 0):
        raise DomainError("conformal factor needs r > 0")
    out = r ** ((bg.d - 1) / 2.0)
    return out if out.ndim else float(out)


def hyperboloid_time(u, r, eta_prime=1.0):
    out = np.asarray(u, float) - 1.0 / (1.0 + np.asarray(r, float) ** eta_prime)
    return out if out.ndim else float(out)


def dtbar(r, r_u, r_v, eta_prime=1.0):
    """Partial derivatives (d tbar/du, d tbar/dv) of the hyperboloidal time."""
    q = eta_prime * r ** (eta_prime - 1) / (1 + r**eta_prime) ** 2
    return 1.0 + q * r_u, q * r_v


# potentials --------------------------------------------------------------------

def _radial_parts(bg, ell, r, mass):
    """V = f*g with f = 1 - 2M/r and g = kappa r^-2 + 2M r^-3; returns f, g and derivatives."""
    kappa = angular_eigenvalue(ell, bg.d) + dim_shift(bg.d)
    f = 1 - 2 * mass / r
    f1 = 2 * mass / r**2
    f2 = -4 * mass / r**3
    g = kappa / r**2 + 2 * mass / r**3
    g1 = -2 * kappa / r**3 - 6 * mass / r**4
    g2 = 6 * kappa / r**4 + 24 * mass / r**5
    return f, f1, f2, g, g1, g2


def potential(bg, ell, r, u=None):
    """Mode potential V_ell(r) with the local mass (patch chosen by u for GluedVaidya)."""
    if ell < 0 or int(ell) != ell:
        raise ParamError("ell must be a nonnegative integer")
    r = np.asarray(r, float)
    if bg.kind == GLUED_VAIDYA and u is not None:
        mass = np.asarray(bg._ms)[bg.patch_of(u)]
    else:
        mass = bg.patch_mass(0)
    mass = np.asarray(mass, float)
    if np.any(r - 2 * mass <= (bg.eps(float(np.max(mass))) if np.max(mass) > 0 else 0.0)):
        raise DomainError("potential evaluated outside the domain")
    f, _, _, g, _, _ = _radial_parts(bg, ell, r, mass)
    out = f * g
    return out if out.ndim else float(out)


def mode_coefficient(bg, ell, u, v, geo=None):
    """Coefficient W in the mode equation d_u d_v psi = -W psi."""
    geo = geo if geo is not None else chart(bg, u, v)
    kappa = angular_eigenvalue(ell, bg.d) + dim_shift(bg.d)
    g = kappa / geo.r**2 + 2 * geo.mass / geo.r**3
    return geo.vp * geo.f * g


def mode_coefficient_derivs(bg, ell, u, v, geo=None):
    """W and its partial derivatives up to second order.

    Returns (W, W_u, W_v, W_uu, W_uv, W_vv).  Second derivatives are only
    available on static backgrounds (NaN otherwise).
    """
    geo = geo if geo is not None else chart(bg, u, v)
    f, f1, f2, g, g1, g2 = _radial_parts(bg, ell, geo.r, geo.mass)
    f = geo.f
    vr = f * g
    vr1 = f1 * g + f * g1
    vr2 = f2 * g + 2 * f1 * g1 + f * g2
    w = geo.vp * vr
    w_u = geo.vp * vr1 * geo.r_u
    w_v = geo.vpp * vr + geo.vp * vr1 * geo.r_v
    if bg.static:
        # W is a function of r* = v - u with d r/d r* = f
        d2 = (vr2 * f + vr1 * f1) * f
        return w, w_u, w_v, d2, -d2, d2
    nan = np.full_like(w, np.nan)
    return w, w_u, w_v, nan, nan, nan


@dataclass(frozen=True)
class MetricSample:
    r: float
    g_uv: float
    omega: float
    lapse_sq: float
    dtbar_du: float


def metric_sample(bg, u, v, eta_prime=None):
    """Metric data at one point; lapse_sq = -1/g(d tbar, d tbar)."""
    eta = bg.eta_prime if eta_prime is None else eta_prime
    geo = chart(bg, u, v)
    tu, tv = dtbar(geo.r, geo.r_u, geo.r_v, eta)
    lapse_sq = -geo.g_uv / (2.0 * tu * tv)
    return MetricSample(
        r=float(geo.r),
        g_uv=float(geo.g_uv),
        omega=float(conformal_factor(bg, geo.r)),
        lapse_sq=float(lapse_sq),
        dtbar_du=float(tu),
    )
