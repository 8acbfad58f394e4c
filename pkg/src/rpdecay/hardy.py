"""One-dimensional quadrature checks of four Hardy-type inequalities.

C1  int g' u^2 + g(a) u(a)^2 <= C (int g^2/g' u'^2 + g(b) u(b)^2)   (g increasing;
    mirrored for decreasing g), C = 4.
C2  radial weighted Hardy on an annulus R1 <= r <= R2 in R^d.
C3  the same on a Minkowski hyperboloid {tbar = tau}, r >= R1, in the v variable.
C4  critical inequality int_R^2R r^-1 psi^2 <= C (int_R^inf r^-1 psi^2)^1/2 (int_R^inf r psi'^2)^1/2,
    C = 2.

Test functions come from :data:`FAMILY`; each carries decay exponents
(p0, p1, p2) with |psi^(l)| ~ r^-p_l, which decide where a check applies.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParamError

_trapz = getattr(np, "trapezoid", None) or np.trapz

INF = math.inf


@dataclass(frozen=True)
class TestFunction:
    __test__ = False  # keep pytest from collecting it

    name: str
    fn: object
    decay: tuple
    oscillatory: bool = False
    log_form: object = None  # x = log r -> (psi, r psi'), for slow tails
    r_floor: float = 0.0  # singular at or below this radius

    def __call__(self, r):
        with np.errstate(over="ignore", under="ignore"):
            return self.fn(np.asarray(r, float))


def _power(n):
    def f(r):
        return r**-n, -n * r ** (-n - 1), n * (n + 1) * r ** (-n - 2)

    return f


def _gauss(c, s):
    def f(r):
        z = np.clip((r - c) / s, -40.0, 40.0)
        g = np.exp(-(z**2))
        return g, -2 * z / s * g, (4 * z**2 - 2) / s**2 * g

    return f


def _bump(lo, hi):
    kap = 2.0 / (hi - lo)

    def f(r):
        y = (2 * r - lo - hi) / (hi - lo)
        inside = np.abs(y) < 1
        yy = np.where(inside, y, 0.0)
        den = 1 - yy**2
        b = np.where(inside, np.exp(1 - 1 / den), 0.0)
        q1 = -2 * yy / den**2
        q2 = -2 / den**2 - 8 * yy**2 / den**3
        return b, b * q1 * kap, b * (q1**2 + q2) * kap**2

    return f


def _const(r):
    return np.ones_like(r), np.zeros_like(r), np.zeros_like(r)


def _inv_log(r):
    L = np.log(r)
    return 1 / L, -1 / (r * L**2), 1 / (r**2 * L**2) + 2 / (r**2 * L**3)


def _log_over_r(r):
    L = np.log(r)
    return L / r, (1 - L) / r**2, (2 * L - 3) / r**3


def _sinc(r):
    s, c = np.sin(r), np.cos(r)
    return s / r, c / r - s / r**2, -s / r - 2 * c / r**2 + 2 * s / r**3


FAMILY = (
    TestFunction("const", _const, (0.0, INF, INF)),
    TestFunction("r^-1", _power(1), (1.0, 2.0, 3.0)),
    TestFunction("r^-2", _power(2), (2.0, 3.0, 4.0)),
    TestFunction("r^-3", _power(3), (3.0, 4.0, 5.0)),
    TestFunction("gaussian(20,3)", _gauss(20.0, 3.0), (INF, INF, INF)),
    TestFunction("gaussian(50,10)", _gauss(50.0, 10.0), (INF, INF, INF)),
    TestFunction("gaussian(15,1)", _gauss(15.0, 1.0), (INF, INF, INF)),
    TestFunction("bump[15,40]", _bump(15.0, 40.0), (INF, INF, INF)),
    TestFunction("bump[12,25]", _bump(12.0, 25.0), (INF, INF, INF)),
    TestFunction("1/log r", _inv_log, (1e-6, 1 + 1e-6, 2 + 1e-6),
                 log_form=lambda x: (1 / x, -1 / x**2), r_floor=1.0),
    TestFunction("log r/r", _log_over_r, (1 - 1e-6, 2 - 1e-6, 3 - 1e-6)),
    TestFunction("sin r/r", _sinc, (1.0, 1.0, 1.0), oscillatory=True),
)

FAMILY_BY_NAME = {f.name: f for f in FAMILY}


def family_function(name):
    try:
        return FAMILY_BY_NAME[name]
    except KeyError:
        raise ParamError(f"unknown test function {name!r}") from None


# C1 ------------------------------------------------------------------------------

C1_WEIGHTS = {
    "x": (lambda x: x, lambda x: np.ones_like(x), True),
    "x^2": (lambda x: x**2, lambda x: 2 * x, True),
    "1/x": (lambda x: 1 / x, lambda x: -1 / x**2, False),
}


def hardy_c1(fn, a=1.0, b=5.0, weight="x", n=10_000):
    if not 0 < a < b:
        raise ParamError("C1 needs 0 < a < b")
    if weight not in C1_WEIGHTS:
        raise ParamError(f"unknown C1 weight {weight!r}")
    g, gp, increasing = C1_WEIGHTS[weight]
    x = np.linspace(a, b, n)
    u, du, _ = fn(x)
    if increasing:
        lhs = _trapz(gp(x) * u**2, x) + g(a) * u[0] ** 2
        rhs = _trapz(g(x) ** 2 / gp(x) * du**2, x) + g(b) * u[-1] ** 2
    else:
        lhs = _trapz(-gp(x) * u**2, x) + g(b) * u[-1] ** 2
        rhs = _trapz(-(g(x) ** 2) / gp(x) * du**2, x) + g(a) * u[0] ** 2
    return float(lhs), float(rhs), 4.0


# C2 ------------------------------------------------------------------------------

def hardy_levels(d, a):
    return int(math.floor((d - 1 + a) / 2))


def hardy_constant(k, d, a):
    top = min(hardy_levels(d, a), k)
    if top < 1:
        raise ParamError("need floor((d-1+a)/2) >= 1")
    return float(sum(4**j for j in range(1, top + 1)))


def _check_k(k):
    if k not in (1, 2):
        raise ParamError("k must be 1 or 2")


def hardy_c2(fn, R1=10.0, R2=100.0, k=1, d=3, a=0.0, n=10_000):
    _check_k(k)
    if not 0 < R1 < R2:
        raise ParamError("C2 needs 0 < R1 < R2")
    C = hardy_constant(k, d, a)
    J = hardy_levels(d, a)
    r = np.linspace(R1, R2, n)
    derivs = fn(r)
    lhs = 0.0
    for j in range(1, min(J, k) + 1):
        dk = derivs[k - j]
        lhs += _trapz(r ** (a - 2 * j) * dk**2 * r ** (d - 1), r)
        lhs += R1 ** (a + 1 - 2 * j) * dk[0] ** 2 * R1 ** (d - 1)
    rhs = _trapz(r**a * derivs[k] ** 2 * r ** (d - 1), r)
    for j in range(1, min(J, k) + 1):
        rhs += R2 ** (a + 1 - 2 * j) * derivs[k - j][-1] ** 2 * R2 ** (d - 1)
    return float(lhs), float(rhs), C


# C3 ------------------------------------------------------------------------------

def _rho(r):
    """dr/dv along the Minkowski hyperboloid v = tau + r + 1/(1 + r)."""
    return (1 + r) ** 2 / (r * (r + 2))


def _rho_prime(r):
    return -2 * (1 + r) / (r * (r + 2)) ** 2


def c3_applicable(tf, k, d, a):
    p = tf.decay
    thr = (d + a - 2) / 2.0
    return all(p[l] > thr for l in range(k + 1)) and p[k] > (a + d) / 2.0


def hardy_c3(fn, R1=10.0, k=1, d=3, a=0.0, r_max=1e8, n=10_000):
    _check_k(k)
    C = hardy_constant(k, d, a)
    J = hardy_levels(d, a)
    r = np.geomspace(R1, r_max, n)
    v = r + 1.0 / (1.0 + r)
    f0, f1, f2 = fn(r)
    rho = _rho(r)
    L = [f0, rho * f1, rho * (_rho_prime(r) * f1 + rho * f2)]
    om2 = r ** (d - 1)
    lhs = 0.0
    for j in range(1, min(J, k) + 1):
        lhs += _trapz(r ** (a - 2 * j) * L[k - j] ** 2 * om2, v)
        lhs += R1 ** (a + 1 - 2 * j) * L[k - j][0] ** 2 * om2[0]
    rhs = _trapz(r**a * L[k] ** 2 * om2, v)
    return float(lhs), float(rhs), C


# C4 ------------------------------------------------------------------------------

def c4_applicable(tf):
    return tf.decay[0] > 0 and tf.decay[1] > 1


_X_CAP = 300.0  # r <= 1e130 keeps squares finite


def _in_log(fn, x):
    lf = getattr(fn, "log_form", None)
    if lf is not None:
        return lf(x)
    inside = x < _X_CAP
    r = np.exp(np.minimum(x, _X_CAP))
    f0, f1, _ = fn(r)
    return np.where(inside, f0, 0.0), np.where(inside, r * f1, 0.0)


def hardy_c4(fn, R=10.0, n=10_000, s_max=1 - 1e-9):
    """Evaluated in x = log r; the half line is mapped by x = X + s/(1 - s)."""
    X = math.log(R)
    xs = np.linspace(X, X + math.log(2.0), n)
    lhs = _trapz(_in_log(fn, xs)[0] ** 2, xs)
    s = np.linspace(0.0, s_max, 4 * n)
    x = X + s / (1 - s)
    jac = 1.0 / (1 - s) ** 2
    psi, rpsi = _in_log(fn, x)
    A = _trapz(psi**2 * jac, s)
    B = _trapz(rpsi**2 * jac, s)
    return float(lhs), float(math.sqrt(A * B)), 2.0


def sharpness_profile(R0):
    """psi_R0(r) = log R0 / (log r + log R0)."""
    L0 = math.log(R0)

    def f(r):
        y = np.log(r) + L0
        return L0 / y, -L0 / (r * y**2), L0 * (1 / (r**2 * y**2) + 2 / (r**2 * y**3))

    def g(x):
        return L0 / (x + L0), -L0 / (x + L0) ** 2

    return TestFunction(f"sharp({R0:g})", f, (1e-6, 1 + 1e-6, 2 + 1e-6), log_form=g)


def c4_sharpness(R0=1e6, n=10_000):
    """Ratio for psi_R0 at R = R0; tends to sqrt(3) log 2 of the constant's scale."""
    return hardy_c4(sharpness_profile(R0), R=R0, n=n)


def ratio(lhs, rhs):
    """lhs/rhs; a 0 <= 0 instance counts as vacuous and returns (0, True)."""
    if rhs > 0:
        return lhs / rhs, False
    if lhs <= 0:
        return 0.0, True
    return math.inf, False


def evaluate(kind, fn, **params):
    kind = kind.upper()
    if kind == "C1":
        return hardy_c1(fn, **params)
    if kind == "C2":
        return hardy_c2(fn, **params)
    if kind == "C3":
        return hardy_c3(fn, **params)
    if kind == "C4":
        return hardy_c4(fn, **params)
    raise ParamError(f"unknown Hardy kind {kind!r}")


def applicable(kind, tf, **params):
    kind = kind.upper()
    lo = params.get("a" if kind == "C1" else ("R1" if kind in ("C2", "C3") else "R"))
    if lo is None:
        lo = {"C1": 1.0, "C2": 10.0, "C3": 10.0, "C4": 10.0}.get(kind, 0.0)
    if lo <= tf.r_floor:
        return False
    if kind == "C3":
        return c3_applicable(tf, params.get("k", 1), params.get("d", 3), params.get("a", 0.0))
    if kind == "C4":
        return c4_applicable(tf)
    return True
