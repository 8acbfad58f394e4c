"""Command line runner: ``rpdecay <subcommand> [options]``.

Exit codes: 0 all checks pass, 1 some check failed, 2 configuration
error, 3 numerical failure.
"""

import argparse
import configparser
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance, presets
from . import hardy as hd
from .background import BackgroundSpec
from .energies import energy_report, write_energy_csv
from .errors import ConfigError, ParamError, RpDecayError
from .evolve import CharacteristicData, NullGrid, convergence_study
from .slices import extract_slice
from .verify import (
    Run, check_boundedness, check_hierarchy, check_morawetz, decay_series, divergence_residual,
    extract_radiation_field, fit_decay, hardy, write_fits_csv, write_reports_csv,
)
from .waveop import commutator_order

log = logging.getLogger("rpdecay")

SUBCOMMANDS = (
    "evolve", "slice", "energies", "hierarchy", "boundedness", "morawetz", "decay",
    "radiation", "hardy", "commutator", "convergence", "all", "run",
)

HELP = {
    "evolve": "evolve one mode and write field.csv",
    "slice": "extract hyperboloidal slices",
    "energies": "weighted energies on slices",
    "hierarchy": "r^p hierarchy ratio matrix",
    "boundedness": "energy boundedness check",
    "morawetz": "Morawetz estimate check",
    "decay": "decay series and log-log fits",
    "radiation": "radiation field at null infinity",
    "hardy": "Hardy inequality quadrature",
    "commutator": "commuted-equation closure order",
    "convergence": "scheme convergence order",
    "all": "run the acceptance criteria",
    "run": "run a preset or a config file",
}


# configuration -----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    preset: str = None
    background: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    checks: tuple = ()
    out: str = None


def _floats(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


def _pairs(text):
    out = []
    for chunk in str(text).split(";"):
        if chunk.strip():
            a, b = _floats(chunk)
            out.append((a, b))
    return out


def parse_config(text):
    """``[section]`` headers with ``key = value`` lines."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if not cp.sections():
        raise ConfigError("empty config")
    known = {"run", "background", "grid", "data", "params", "thresholds"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    sec = {name: dict(cp[name]) if cp.has_section(name) else {} for name in known}
    try:
        thresholds = {k: float(v) for k, v in sec["thresholds"].items()}
    except ValueError as exc:
        raise ConfigError(f"bad threshold: {exc}") from None
    bad = set(thresholds) - set(acceptance.THRESHOLDS)
    if bad:
        raise ConfigError(f"unknown thresholds: {sorted(bad)}")
    checks = tuple(c.strip() for c in sec["run"].get("checks", "").split(",") if c.strip())
    return ExperimentConfig(
        preset=sec["run"].get("preset"), background=sec["background"], grid=sec["grid"], data=sec["data"],
        params=sec["params"], thresholds=thresholds, checks=checks, out=sec["run"].get("out"),
    )


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def build_run(cfg, ell=None, h=None, backend=None):
    try:
        b = cfg.background
        kind = b.get("kind", "schwarzschild")
        mass = float(b.get("mass", 1.0))
        if kind == "minkowski":
            bg = BackgroundSpec.minkowski(int(b.get("d", 3)))
        elif kind == "schwarzschild":
            bg = BackgroundSpec.schwarzschild(mass, eps_hor=presets.EPS_HOR)
        elif kind == "glued-vaidya":
            masses = _floats(b.get("masses", f"{mass} {0.8 * mass}"))
            us = _floats(b.get("junctions", str(presets.VAIDYA_JUNCTION)))
            if len(us) != len(masses) - 1:
                raise ConfigError("glued-vaidya needs one junction fewer than masses")
            steps = [(-np.inf, masses[0])] + list(zip(us, masses[1:]))
            bg = BackgroundSpec.glued_vaidya(steps, eps_hor=presets.EPS_HOR)
        else:
            raise ConfigError(f"unknown background kind {kind!r}")
        g = cfg.grid
        grid = NullGrid.span(
            float(g.get("u0", 0.0)), float(g["u1"]), float(g.get("v0", 0.0)), float(g["v1"]),
            float(h if h is not None else g.get("h", 0.1)),
        )
        d = cfg.data
        fam = d.get("family", "gaussian")
        amp = float(d.get("amplitude", 1.0))
        if fam == "gaussian":
            data = CharacteristicData.gaussian(amp, float(d.get("center", 10.0)), float(d.get("width", 2.0)),
                                               v0=grid.v0)
        elif fam == "bump":
            data = CharacteristicData.bump(amp, float(d.get("lo", 5.0)), float(d.get("hi", 15.0)), v0=grid.v0)
        elif fam == "dalembert":
            prof = presets.gaussian_profile(amp, float(d.get("center", 10.0)), float(d.get("width", 2.0)))
            data = CharacteristicData.dalembert(prof, grid.u0, grid.v0)
        else:
            raise ConfigError(f"unknown data family {fam!r}")
        ell = int(cfg.params.get("ell", 0)) if ell is None else ell
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from None
    except (ValueError, ParamError) as exc:
        raise ConfigError(str(exc)) from None
    return Run(bg, ell, grid, data, backend=backend)


# output helpers ----------------------------------------------------------------

def out_dir(args_out=None, cfg_out=None):
    path = Path(os.environ.get("RPDECAY_OUT") or args_out or cfg_out or "rpdecay_out")
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory not writable: {exc}") from None
    return path


def write_summary(path, checks):
    lines = [c.line() for c in checks]
    verdict = "PASS" if all(c.passed for c in checks) else "FAIL"
    lines.append(f"overall {verdict}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return lines


def _status(checks):
    return 0 if all(c.passed for c in checks) else 1


# named presets -----------------------------------------------------------------

def _preset_minkowski_free(th, out, jobs):
    c1 = acceptance.run_one(1, th)
    t0 = time.perf_counter()
    measured, ok = acceptance.divergence(th, cases=(("minkowski", 0),))
    c3 = acceptance.Check(3, "discrete divergence theorem (Minkowski)", bool(ok), measured, time.perf_counter() - t0)
    return [c1, c3]


def _preset_schwarzschild_decay(th, out, jobs):
    checks = []
    fits = []
    reports = []
    bounds = {"e_en": -2.0, "sup_r2phi2": -1.0, "sup_phi2_inner": -3.0}
    slack = th.get("decay_slack", acceptance.THRESHOLDS["decay_slack"])
    for ell in (0, 1):
        run = presets.decay_run(ell)
        series = decay_series(run, presets.DECAY_TAUS, R_cut=3.0)
        _write_series(out / f"decay_series_l{ell}.csv", series)
        ok = True
        measured = {}
        for name, bound in bounds.items():
            f = fit_decay(series[name], (50.0, 200.0), f"{name}_l{ell}")
            fits.append(f)
            measured[name] = f.exponent
            ok &= f.exponent <= bound + slack
        checks.append(acceptance.Check(6, f"decay upper bounds l={ell}", bool(ok), measured))
        reps = check_hierarchy(presets.hierarchy_run(ell, 0.05), (0.5, 1.0, 1.5, 2.0), presets.HIERARCHY_PAIRS)
        reports += reps
        finite = all(np.isfinite(r.ratio) for r in reps)
        checks.append(acceptance.Check(4, f"hierarchy ratios finite l={ell}", bool(finite),
                                       {"max_ratio": max(r.ratio for r in reps)}))
    write_fits_csv(out / "decay_fits.csv", fits)
    write_reports_csv(out / "hierarchy.csv", reports)
    return checks


def _preset_criteria(numbers):
    def run(th, out, jobs):
        return acceptance.run_criteria(numbers, th, jobs)

    return run


PRESETS = {
    "minkowski-free": _preset_minkowski_free,
    "schwarzschild-decay": _preset_schwarzschild_decay,
    "schwarzschild-hierarchy": _preset_criteria([4, 5]),
    "glued-vaidya": _preset_criteria([10]),
    "hardy": _preset_criteria([9]),
    "acceptance": _preset_criteria(None),
}


def _write_series(path, series):
    names = [k for k in series if k != "tail"] + ["tail"]
    t = series[names[0]][0]
    table = np.column_stack([t] + [series[k][1] for k in names])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(["tau"] + names), comments="")


# subcommands -------------------------------------------------------------------

def _run_from(args, cfg=None):
    if cfg is None and args.config:
        cfg = load_config(args.config)
    if cfg is not None and cfg.grid:
        return build_run(cfg, ell=args.ell, h=args.h, backend=args.backend)
    name = args.preset or "schwarzschild"
    if name == "minkowski":
        return Run(presets.background("minkowski"), args.ell or 0, NullGrid.span(0, 45, 0, 120, args.h or 0.05),
                   presets.lens_data(), backend=args.backend)
    if name in ("schwarzschild", "glued-vaidya"):
        bg = presets.background(name)
        return Run(bg, args.ell or 0, NullGrid.span(0, 152, 0, 400, args.h or 0.1),
                   CharacteristicData.gaussian(1.0, 10.0, 2.0), backend=args.backend)
    raise ConfigError(f"unknown preset {name!r}")


def cmd_evolve(args, out):
    run = _run_from(args)
    fld = run.evolve()
    path = out / "field.csv"
    fld.export_csv(path)
    print(f"evolved {run.grid.Nu}x{run.grid.Nv} nodes, h={run.h:g}; wrote {path}")
    return 0


def cmd_slice(args, out):
    run = _run_from(args)
    fld = run.evolve()
    for tau in args.tau or [20.0]:
        sl = extract_slice(fld, tau, R_cut=args.R)
        path = out / f"slice_tau{tau:g}.csv"
        sl.export_csv(path)
        print(f"slice tau={tau:g}: {len(sl)} samples, v in [{sl.v[0]:g}, {sl.v[-1]:g}]; wrote {path}")
    return 0


def cmd_energies(args, out):
    run = _run_from(args)
    taus = args.tau or [20.0, 30.0]
    p = args.p[0] if args.p else 1.0
    eta = args.eta if args.eta is not None else 0.5 * run.bg.a
    reps = list(run.harvest(
        taus, R_cut=args.R, on_slice=lambda sl: energy_report(sl, p, args.delta, eta, args.R, run.ell)
    ).slices.values())
    write_energy_csv(out / "energies.csv", reps)
    for rep in reps:
        print(f"tau={rep.tau:g} " + " ".join(f"{k}={v:.6g}" for k, v in rep.values.items()))
    return 0


def _report_and_write(reports, path):
    write_reports_csv(path, reports)
    for r in reports:
        p = r.params
        print(f"{r.name} p={p.get('p', float('nan')):g} [{p.get('tau1')}, {p.get('tau2')}] "
              f"lhs={r.lhs:.6g} rhs={r.rhs:.6g} ratio={r.ratio:.6g}")
    return 0 if all(np.isfinite(r.ratio) for r in reports) else 1


def cmd_hierarchy(args, out):
    run = _run_from(args)
    k = args.k
    ps = args.p or ([0.5, 1.0, 1.5, 2.0] if k == 1 else [2.5, 3.0, 4.0])
    pairs = _pairs(args.pairs) if args.pairs else list(presets.HIERARCHY_PAIRS)
    eta = args.eta if args.eta is not None else 0.5
    reps = check_hierarchy(run, ps, pairs, delta=args.delta, eta=eta, R=args.R, k=k)
    return _report_and_write(reps, out / f"hierarchy_k{k}.csv")


def cmd_boundedness(args, out):
    run = _run_from(args)
    pairs = _pairs(args.pairs) if args.pairs else list(presets.HIERARCHY_PAIRS)
    return _report_and_write(check_boundedness(run, pairs, R=args.R), out / "boundedness.csv")


def cmd_morawetz(args, out):
    run = _run_from(args)
    pairs = _pairs(args.pairs) if args.pairs else [(30.0, 70.0)]
    reps = [check_morawetz(run, w, eta=args.eta, R=args.R, variant=args.variant) for w in pairs]
    return _report_and_write(reps, out / f"morawetz_{args.variant}.csv")


def cmd_decay(args, out):
    if args.preset in (None, "schwarzschild"):
        run = presets.decay_run(args.ell or 0, h=args.h or 0.05)
    else:
        run = _run_from(args)
    taus = args.tau or list(presets.DECAY_TAUS)
    series = decay_series(run, taus, R_cut=3.0)
    _write_series(out / "decay_series.csv", series)
    names = [args.quantity] if args.quantity else ["e_en", "sup_r2phi2", "sup_phi2_inner"]
    window = tuple(args.window) if args.window else None
    fits = []
    for name in names:
        if name not in series:
            raise ConfigError(f"unknown quantity {name!r}")
        f = fit_decay(series[name], window, name)
        fits.append(f)
        print(f"{name}: exponent {f.exponent:.4f} +- {f.stderr:.2g} over tau in [{f.window[0]:g}, {f.window[1]:g}]")
    write_fits_csv(out / "decay_fits.csv", fits)
    return 0


def cmd_radiation(args, out):
    name = args.preset or "schwarzschild"
    if name not in ("minkowski", "schwarzschild"):
        raise ConfigError("radiation presets: minkowski, schwarzschild")
    run = presets.radiation_run(name, h=args.h or 0.1)
    rad = extract_radiation_field(run, presets.RADIATION_U[name])
    rad.export_csv(out / f"radiation_{name}.csv")
    print(f"rows={rad.u.size} max|Phi|={np.max(np.abs(rad.values)):.6g} max error={np.max(rad.errors):.3g} "
          f"min contraction={np.min(rad.cauchy_ratios):.3g} transversal bounded={rad.transversal_bounded}")
    return 0


def cmd_hardy(args, out):
    params = {}
    for key in ("a", "b", "R1", "R2", "R", "d", "k"):
        val = getattr(args, f"hardy_{key}", None)
        if val is not None:
            params[key] = int(val) if key in ("d", "k") else val
    if args.weight:
        params["weight"] = args.weight
    if args.fn == "all":
        rng = np.random.default_rng(args.seed)
        fam = list(hd.FAMILY)
        if args.sample:
            fam = [fam[i] for i in sorted(rng.choice(len(fam), size=min(args.sample, len(fam)), replace=False))]
        reps = [hardy(args.kind, _hardy_params(args.kind, params), tf) for tf in fam
                if hd.applicable(args.kind, tf, **_hardy_params(args.kind, params))]
    else:
        reps = [hardy(args.kind, _hardy_params(args.kind, params), args.fn)]
    write_reports_csv(out / f"hardy_{args.kind.upper()}.csv", reps)
    worst = 0.0
    for r in reps:
        C = r.extras["constant"]
        print(f"{r.name}: ratio {r.extras['normalized']:.6g} vs C_doc={C:g} (lhs/rhs = {r.ratio:.6g})")
        worst = max(worst, r.extras["normalized"])
    return 0 if worst <= 1.0 else 1


def _hardy_params(kind, params):
    """C1 takes the interval as a, b; the power a of C2/C3 is passed as --power."""
    kind = kind.upper()
    allowed = {"C1": ("a", "b", "weight"), "C2": ("R1", "R2", "k", "d", "a"), "C3": ("R1", "k", "d", "a"),
               "C4": ("R",)}[kind]
    return {k: v for k, v in params.items() if k in allowed}


def cmd_commutator(args, out):
    name = args.preset or "minkowski"
    case = presets.commutator_case(name)
    st = commutator_order(case.bg, args.ell or 0, case.data, case.grid, args.kind, args.l, case.region)
    print(f"{args.kind} l={args.l} ell={args.ell or 0} on {name}: order {st.order:.4f} exact={st.exact} "
          f"errors={[float(f'{e:.3g}') for e in st.errors]}")
    return 0 if st.order >= acceptance.THRESHOLDS["commutator_order"] else 1


def cmd_convergence(args, out):
    name = args.preset or "minkowski"
    case = presets.local_case(name)
    st = convergence_study(case.bg, args.ell or 0, case.data, case.grid)
    print(f"{name} ell={args.ell or 0}: order {st.order:.4f} (diffs {st.diff_coarse:.3g}, {st.diff_fine:.3g}, h={st.h:g})")
    lo, hi = acceptance.THRESHOLDS["order_lo"], acceptance.THRESHOLDS["order_hi"]
    return 0 if (st.exact or lo <= st.order <= hi) else 1


def cmd_all(args, out, cfg=None):
    th = dict(cfg.thresholds) if cfg else {}
    numbers = args.only or None
    checks = acceptance.run_criteria(numbers, th, args.jobs)
    for line in write_summary(out / "summary.txt", checks):
        print(line)
    return _status(checks)


def cmd_run(args, out):
    if not args.config and not args.preset:
        raise ConfigError("run needs --config FILE or --preset NAME")
    cfg = load_config(args.config) if args.config else ExperimentConfig(preset=args.preset)
    if cfg.out and not args.out:
        out = out_dir(None, cfg.out)
    name = args.preset or cfg.preset
    if name:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        checks = PRESETS[name](cfg.thresholds, out, args.jobs)
    else:
        checks = _config_checks(cfg, args, out)
    for line in write_summary(out / "summary.txt", checks):
        print(line)
    return _status(checks)


def _config_checks(cfg, args, out):
    if not cfg.checks:
        raise ConfigError("config has neither a preset nor a checks list")
    run = build_run(cfg, backend=args.backend)
    prm = cfg.params
    pairs = _pairs(prm.get("tau_pairs", "30 70; 70 110"))
    R = float(prm.get("R", 10.0))
    delta = float(prm.get("delta", 0.5))
    eta = float(prm.get("eta", 0.5 * run.bg.a))
    checks = []
    for name in cfg.checks:
        if name == "hierarchy":
            k = int(prm.get("k", 1))
            ps = _floats(prm.get("p_list", "0.5 1 1.5 2" if k == 1 else "2.5 3 4"))
            reps = check_hierarchy(run, ps, pairs, delta=delta, eta=eta, R=R, k=k)
        elif name == "boundedness":
            reps = check_boundedness(run, pairs, R=R)
        elif name == "morawetz":
            reps = [check_morawetz(run, w, eta=eta, R=R, variant=prm.get("variant", "basic")) for w in pairs]
        elif name == "divergence":
            rw = tuple(_floats(prm.get("r_window", "12 60")))
            res = divergence_residual(run, pairs[0], rw)
            lim = cfg.thresholds.get("divergence_rel", acceptance.THRESHOLDS["divergence_rel"])
            checks.append(acceptance.Check(3, "divergence residual", res.relative <= lim, {"relative": res.relative}))
            continue
        elif name == "convergence":
            st = convergence_study(run.bg, run.ell, run.data, run.grid)
            lo = cfg.thresholds.get("order_lo", acceptance.THRESHOLDS["order_lo"])
            hi = cfg.thresholds.get("order_hi", acceptance.THRESHOLDS["order_hi"])
            checks.append(acceptance.Check(2, "convergence order", st.exact or lo <= st.order <= hi,
                                           {"order": st.order}))
            continue
        elif name == "decay":
            taus = _floats(prm.get("taus", " ".join(str(t) for t in presets.DECAY_TAUS)))
            series = decay_series(run, taus, R_cut=float(prm.get("R_cut", 3.0)))
            window = tuple(_floats(prm["fit_window"])) if "fit_window" in prm else None
            fits = [fit_decay(series[q], window, q) for q in ("e_en", "sup_r2phi2", "sup_phi2_inner")]
            write_fits_csv(out / "decay_fits.csv", fits)
            checks.append(acceptance.Check(6, "decay fits", True, {f.name: f.exponent for f in fits}))
            continue
        else:
            raise ConfigError(f"unknown check {name!r}")
        write_reports_csv(out / f"{name}.csv", reps)
        ok = all(np.isfinite(r.ratio) for r in reps)
        checks.append(acceptance.Check(0, name, ok, {"max_ratio": max(r.ratio for r in reps)}))
    return checks


COMMANDS = {
    "evolve": cmd_evolve, "slice": cmd_slice, "energies": cmd_energies, "hierarchy": cmd_hierarchy,
    "boundedness": cmd_boundedness, "morawetz": cmd_morawetz, "decay": cmd_decay, "radiation": cmd_radiation,
    "hardy": cmd_hardy, "commutator": cmd_commutator, "convergence": cmd_convergence, "all": cmd_all, "run": cmd_run,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file ([section] headers, key = value lines)")
    common.add_argument("--preset", help="named preset")
    common.add_argument("--out", help="output directory (RPDECAY_OUT wins)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized family sampling")
    common.add_argument("--backend", choices=("numba", "numpy"), help="kernel backend (default: RPDECAY_BACKEND)")
    common.add_argument("--ell", type=int)
    common.add_argument("--h", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rpdecay", description="r^p-hierarchy experiments on 1+1 mode solvers")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sp = {name: sub.add_parser(name, parents=[common], help=HELP[name]) for name in SUBCOMMANDS}

    for name in ("slice", "energies", "decay"):
        sp[name].add_argument("--tau", type=float, nargs="+")
    for name in ("slice", "energies", "hierarchy", "boundedness", "morawetz"):
        sp[name].add_argument("--R", type=float, default=10.0)
    for name in ("energies", "hierarchy"):
        sp[name].add_argument("--p", type=float, nargs="+")
        sp[name].add_argument("--delta", type=float, default=0.5)
    for name in ("energies", "hierarchy", "morawetz"):
        sp[name].add_argument("--eta", type=float)
    for name in ("hierarchy", "boundedness", "morawetz"):
        sp[name].add_argument("--pairs", help='tau pairs, e.g. "30 70; 70 110"')
    sp["hierarchy"].add_argument("--k", type=int, default=1, choices=(1, 2))
    sp["morawetz"].add_argument("--variant", default="basic", choices=("basic", "improved"))
    sp["decay"].add_argument("--quantity", choices=("e_en", "sup_r2phi2", "sup_phi2_inner"))
    sp["decay"].add_argument("--window", type=float, nargs=2)
    h = sp["hardy"]
    h.add_argument("--kind", required=True, choices=("C1", "C2", "C3", "C4", "c1", "c2", "c3", "c4"))
    h.add_argument("--fn", default="const", help="family member name, or 'all'")
    h.add_argument("--a", dest="hardy_a", type=float, help="C1: left end; C2/C3: weight power")
    h.add_argument("--b", dest="hardy_b", type=float)
    h.add_argument("--R1", dest="hardy_R1", type=float)
    h.add_argument("--R2", dest="hardy_R2", type=float)
    h.add_argument("--R", dest="hardy_R", type=float)
    h.add_argument("--d", dest="hardy_d", type=int)
    h.add_argument("--k", dest="hardy_k", type=int)
    h.add_argument("--weight", choices=tuple(hd.C1_WEIGHTS))
    h.add_argument("--sample", type=int, help="with --fn all: random subset of this size (uses --seed)")
    sp["commutator"].add_argument("--kind", default="dv", choices=("dv", "dsigma", "du"))
    sp["commutator"].add_argument("--l", type=int, default=1, choices=(1, 2))
    sp["all"].add_argument("--only", type=int, nargs="+", help="criterion numbers")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config and args.command != "run" else None
        out = out_dir(args.out, cfg.out if cfg else None)
        if args.command == "all":
            return cmd_all(args, out, cfg)
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except ParamError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 2
    except (RpDecayError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
