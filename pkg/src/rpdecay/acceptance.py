"""The ten acceptance checks as callables with measured numbers.

Each check returns a :class:`Check`; thresholds live in :data:`THRESHOLDS`
and can be overridden per key (the CLI exposes them through config files).
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import presets
from .background import BackgroundSpec, chart
from .evolve import CharacteristicData, NullGrid, convergence_order, evolve
from .verify import (
    Run, check_boundedness, check_hierarchy, divergence_residual, extract_radiation_field, fit_decay,
    decay_series, hardy_sharpness, hardy_suite, max_ratio, refinement_change,
)
from .waveop import commutator_order

THRESHOLDS = {
    "free_wave_max_dev": 1e-12,
    "order_lo": 1.8,
    "order_hi": 2.2,
    "divergence_rel": 1e-3,
    "divergence_gain": 3.0,
    "refinement_change": 0.10,
    "decay_slack": 0.1,
    "radiation_minkowski": 1e-6,
    "radiation_gain": 2.0,
    "commutator_order": 1.8,
    "hardy_sharpness": 0.5,
    "junction_r": 1e-10,
}


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        nums = " ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        head = f"criterion {self.number:2d}" if self.number else "check"
        return f"{head} {verdict} {self.name} ({self.seconds:.1f}s) {nums}"


def _short(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_short(x) for x in v) + "]"
    return str(v)


def _t(th, key):
    return th.get(key, THRESHOLDS[key])


# 1 ----------------------------------------------------------------------------------

def free_wave(th=None, n=2000):
    th = th or {}
    grid = NullGrid(0.0, 0.0, 100.0 / (n - 1), n, n)
    G = presets.gaussian_profile(1.0, 30.0, 3.0)
    data = CharacteristicData.dalembert(G)
    bg = BackgroundSpec.minkowski(3)
    fld = evolve(bg, 0, grid, data)
    U, V = np.meshgrid(grid.u, grid.v, indexing="ij")
    exact = G(V) - G(U)
    mask = V >= U
    dev = float(np.max(np.abs(fld.values - exact)[mask]))
    return dict(max_dev=dev), dev <= _t(th, "free_wave_max_dev")


# 2 ----------------------------------------------------------------------------------

def scheme_order(th=None):
    th = th or {}
    orders = {}
    for name, ell in (("minkowski", 1), ("minkowski", 2), ("schwarzschild", 0), ("schwarzschild", 1)):
        case = presets.local_case(name)
        orders[f"{name}_l{ell}"] = convergence_order(case.bg, ell, case.data, case.grid)
    ok = all(_t(th, "order_lo") <= o <= _t(th, "order_hi") for o in orders.values())
    return orders, ok


# 3 ----------------------------------------------------------------------------------

def divergence(th=None, cases=(("minkowski", 0), ("schwarzschild", 1))):
    th = th or {}
    out, ok = {}, True
    for name, ell in cases:
        bg = presets.background(name)
        rel = []
        for h in (0.05, 0.025):
            run = Run(bg, ell, NullGrid.span(0, 45, 0, 120, h), presets.lens_data())
            rel.append(divergence_residual(run, (20.0, 40.0), (12.0, 60.0)).relative)
        gain = rel[0] / rel[1] if rel[1] > 0 else math.inf
        out[f"{name}_rel"] = rel[0]
        out[f"{name}_gain"] = gain
        ok &= rel[0] <= _t(th, "divergence_rel") and gain >= _t(th, "divergence_gain")
    return out, ok


# 4 / 5 ------------------------------------------------------------------------------

def _hierarchy(th, k, p_list, hs=(0.05, 0.025)):
    out, ok = {}, True
    for ell in (0, 1):
        mats = []
        for h in hs:
            run = presets.hierarchy_run(ell, h)
            mats.append(check_hierarchy(run, p_list, presets.HIERARCHY_PAIRS, delta=0.5, eta=0.5, R=10.0, k=k))
        finite = all(math.isfinite(r.ratio) for m in mats for r in m)
        change = refinement_change(*mats)
        out[f"l{ell}_max"] = max_ratio(mats[-1])
        out[f"l{ell}_change"] = change
        ok &= finite and change < _t(th, "refinement_change")
    return out, ok


def hierarchy(th=None):
    return _hierarchy(th or {}, 1, (0.5, 1.0, 1.5, 2.0))


def higher_hierarchy(th=None):
    return _hierarchy(th or {}, 2, (2.5, 3.0, 4.0))


# 6 ----------------------------------------------------------------------------------

def decay(th=None):
    th = th or {}
    run = presets.decay_run(0)
    taus = presets.DECAY_TAUS
    series = decay_series(run, taus, R_cut=3.0, inner_r=20.0)
    window = (50.0, 200.0)
    slack = _t(th, "decay_slack")
    bounds = {"e_en": -2.0, "sup_r2phi2": -1.0, "sup_phi2_inner": -3.0}
    out, ok = {}, True
    for name, bound in bounds.items():
        fit = fit_decay(series[name], window, name)
        out[name] = fit.exponent
        ok &= fit.exponent <= bound + slack
    out["tail_max"] = float(np.max(series["tail"][1]))
    return out, ok


# 7 ----------------------------------------------------------------------------------

def radiation(th=None):
    th = th or {}
    mink = presets.radiation_run("minkowski")
    rad = extract_radiation_field(mink, presets.RADIATION_U["minkowski"])
    exact = -presets.RADIATION_PROFILE(rad.u)
    err_m = float(np.max(np.abs(rad.values - exact)))
    schw = presets.radiation_run("schwarzschild")
    rs = extract_radiation_field(schw, presets.RADIATION_U["schwarzschild"])
    gain = float(np.min(rs.cauchy_ratios))
    out = dict(minkowski_err=err_m, schw_min_gain=gain, path_independent=rs.path_independent,
               transversal_bounded=rs.transversal_bounded and rad.transversal_bounded)
    ok = err_m <= _t(th, "radiation_minkowski") and gain >= _t(th, "radiation_gain")
    ok &= rs.path_independent and out["transversal_bounded"]
    return out, ok


# 8 ----------------------------------------------------------------------------------

def commutators(th=None):
    th = th or {}
    out, ok = {}, True
    for name, ell in (("minkowski", 0), ("minkowski", 1), ("schwarzschild", 0)):
        case = presets.commutator_case(name)
        for kind in ("dv", "dsigma", "du"):
            for l in (1, 2):
                st = commutator_order(case.bg, ell, case.data, case.grid, kind, l, case.region)
                out[f"{name[:4]}_l{ell}_{kind}{l}"] = st.order
                ok &= st.order >= _t(th, "commutator_order")
                if name == "minkowski" and ell == 0 and kind == "dv" and l == 1:
                    out["mink_l0_dv1_exact"] = st.exact
                    ok &= st.exact
    return out, ok


# 9 ----------------------------------------------------------------------------------

def hardy_checks(th=None):
    th = th or {}
    reps = hardy_suite()
    worst = max(r.extras["normalized"] for r in reps)
    sharp = hardy_sharpness(1e6).extras["normalized"]
    ok = worst <= 1.0 and sharp >= _t(th, "hardy_sharpness")
    return dict(cases=len(reps), worst_ratio_over_C=worst, sharpness=sharp), ok


# 10 ---------------------------------------------------------------------------------

def radiating_background(th=None):
    th = th or {}
    bg = presets.background("glued-vaidya")
    u1 = bg.junctions[0]
    v = np.linspace(u1 + 12.0, u1 + 400.0, 50)
    r_before = chart(bg, np.full(v.shape, u1), v, patch=0).r
    r_after = chart(bg, np.full(v.shape, u1), v, patch=1).r
    jump = float(np.max(np.abs(r_after - r_before)))
    case = presets.local_case("glued-vaidya")
    order = convergence_order(case.bg, 0, case.data, case.grid)
    mats = []
    for h in (0.1, 0.05):
        reps = check_boundedness(presets.vaidya_run(h), presets.VAIDYA_PAIRS, R=10.0)
        mats.append([r for r in reps if r.name == "boundedness_no_radiating"])
    finite = all(math.isfinite(r.ratio) for m in mats for r in m)
    change = refinement_change(*mats)
    out = dict(junction_r=jump, psi_order=order, no_radiating_max=max_ratio(mats[-1]), change=change)
    ok = jump <= _t(th, "junction_r") and order >= _t(th, "order_lo") and finite
    ok &= change < _t(th, "refinement_change")
    return out, ok


CRITERIA = (
    (1, "free-wave exactness", free_wave),
    (2, "scheme order", scheme_order),
    (3, "discrete divergence theorem", divergence),
    (4, "r^p hierarchy k=1", hierarchy),
    (5, "r^p hierarchy k=2", higher_hierarchy),
    (6, "decay upper bounds", decay),
    (7, "radiation field", radiation),
    (8, "commutator identities", commutators),
    (9, "Hardy suite", hardy_checks),
    (10, "radiating background", radiating_background),
)


def run_one(number, th=None):
    _, name, fn = CRITERIA[number - 1]
    t0 = time.perf_counter()
    measured, ok = fn(th)
    return Check(number, name, bool(ok), measured, time.perf_counter() - t0)


def run_criteria(numbers=None, th=None, jobs=1):
    """Run the selected criteria; output order follows ``numbers`` whatever ``jobs`` is."""
    numbers = [c[0] for c in CRITERIA] if numbers is None else list(numbers)
    if jobs <= 1:
        return [run_one(n, th) for n in numbers]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_one, n, th) for n in numbers]
        return [f.result() for f in futures]
