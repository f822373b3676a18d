"""Command-line entry point: config ingestion, dispatch, structured outputs.

Every subcommand writes CSV for series/fields and JSON for scalars/verdicts,
plus a manifest JSON recording the config hash, tool version, wall time and
the output files with their digests. Reruns with identical config and
version produce byte-identical data outputs (the manifest's wall time is the
only varying field). Exit codes: 0 success, 1 usage error, 2 numerical
failure, 3 domain exhaustion.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import analysis, entire, periodic_ode
from .config import (config_hash, load_config, params_from_config,
                     solver_from_config)
from .eigensolver import EigenProblem, principal_eigenvalue
from .errors import DomainExhausted, StefanLabError
from .fbsolver import simulate, scalar_free_boundary, verify_bounds
from .model import (CoefficientField, PeriodicScalarFunction, check_H1,
                    check_H2, classify_environment, default_probe_radii)

USAGE_ERROR = 1
NUMERICAL_FAILURE = 2
DOMAIN_EXHAUSTION = 3


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


class OutputSet:
    """Collects the files of one run and writes the manifest next to them."""

    def __init__(self, prefix: str, subcommand: str, cfg_echo: dict | None):
        self.prefix = prefix
        self.subcommand = subcommand
        self.cfg_echo = cfg_echo
        self.files: list[str] = []
        self.t0 = time.perf_counter()
        d = os.path.dirname(prefix)
        if d:
            os.makedirs(d, exist_ok=True)

    def path(self, suffix: str) -> str:
        return f"{self.prefix}_{suffix}"

    def write_text(self, suffix: str, text: str) -> str:
        p = self.path(suffix)
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(text)
        self.files.append(p)
        return p

    def write_json(self, suffix: str, payload: dict) -> str:
        if self.cfg_echo is not None:
            payload = dict(payload)
            payload.setdefault("config_hash", config_hash(self.cfg_echo))
            payload.setdefault("config_echo", self.cfg_echo)
        return self.write_text(suffix, json.dumps(payload, sort_keys=True,
                                                  indent=2, default=_json_default)
                               + "\n")

    def write_csv(self, suffix: str, header: list[str], rows) -> str:
        lines = [",".join(header)]
        lines.extend(",".join(_fmt(x) for x in row) for row in rows)
        return self.write_text(suffix, "\n".join(lines) + "\n")

    def add_file(self, path: str) -> None:
        self.files.append(path)

    def finish(self, note: str | None = None) -> None:
        manifest = {
            "subcommand": self.subcommand,
            "tool_version": __version__,
            "config_hash": config_hash(self.cfg_echo) if self.cfg_echo else None,
            "config_echo": self.cfg_echo,
            "wall_time_s": time.perf_counter() - self.t0,
            "outputs": [{"path": p, "sha256": _sha256(p),
                         "bytes": os.path.getsize(p)} for p in self.files],
        }
        if note:
            manifest["note"] = note
        with open(self.path("manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def parse_field_spec(text: str, period: float) -> CoefficientField:
    """Mini coefficient syntax: const:V | sin:MEAN,AMP[,PHASE] |
    dip:BASE,AMP,CENTER,WIDTH."""
    kind, _, rest = text.partition(":")
    vals = [float(x) for x in rest.split(",")] if rest else []
    if kind == "const":
        return CoefficientField.constant(vals[0], period)
    if kind == "sin":
        phase = vals[2] if len(vals) > 2 else 0.0
        return CoefficientField.space_constant(
            PeriodicScalarFunction.sinusoid(vals[0], vals[1], period, phase))
    if kind == "dip":
        return CoefficientField.gaussian_dip(vals[0], vals[1], vals[2],
                                             vals[3], period)
    raise ValueError(f"cannot parse coefficient spec {text!r}")


def parse_rule_spec(text: str, period: float) -> PeriodicScalarFunction:
    kind, _, rest = text.partition(":")
    vals = [float(x) for x in rest.split(",")] if rest else []
    if kind == "const":
        return PeriodicScalarFunction.constant(vals[0], period)
    if kind == "sin":
        phase = vals[2] if len(vals) > 2 else 0.0
        return PeriodicScalarFunction.sinusoid(vals[0], vals[1], period, phase)
    raise ValueError(f"cannot parse time rule spec {text!r}")


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "t_end", None) is not None:
        cfg["solver"]["t_end"] = args.t_end
    params = params_from_config(cfg)
    solver = solver_from_config(cfg)
    return cfg, params, solver


def _entire_v(cfg, params):
    s = cfg["solver"]
    return entire.entire_state_v(
        params, r_out=float(s["entire_r_out"]), grid=int(s["entire_grid"]),
        steps_per_period=int(s["entire_steps_per_period"]))


def _write_trajectory(out: OutputSet, traj) -> None:
    rows = zip(traj.t, traj.h, traj.dhdt, traj.u_max, traj.v_max)
    out.write_csv("trajectory.csv", ["t", "h", "dhdt", "u_max", "v_max"],
                  ((float(a), float(b), float(c), float(d), float(e))
                   for a, b, c, d, e in rows))
    for i, snap in enumerate(traj.snapshots):
        r_u = traj.s_grid * snap.h
        u_on_r = np.interp(traj.r_grid, r_u, snap.u, right=0.0)
        out.write_csv(f"snapshot_{i:04d}.csv", ["r", "u", "v"],
                      ((float(r), float(u), float(v)) for r, u, v
                       in zip(traj.r_grid, u_on_r, snap.v)))


# ---------------------------------------------------------------- subcommands


def cmd_check(args) -> int:
    cfg, params, _ = _load(args)
    out = OutputSet(args.out, "check", cfg)
    h1 = check_H1(params)
    env = classify_environment(params)
    probes = default_probe_radii(params.init.h0)
    h2_m2 = check_H2(params.m2, probes)
    V = _entire_v(cfg, params)
    constants = periodic_ode.envelope_constants(params, V)
    h3 = periodic_ode.check_H3(params, V, constants)
    composite = entire.effective_u_growth(params, V, inflation=1.0)
    h2_comp = check_H2(composite,
                       [r for r in probes if r <= V.r_out] or [V.r_out])
    report = {
        "H1": {"ok": h1.ok,
               "clauses": [{"name": c.name, "ok": c.ok, "detail": c.detail,
                            "witness": c.witness} for c in h1.clauses]},
        "H2_m2": {"ok": h2_m2.ok, "liminf": h2_m2.liminf_estimate,
                  "limsup": h2_m2.limsup_estimate},
        "H2_effective_growth": {"ok": h2_comp.ok,
                                "liminf": h2_comp.liminf_estimate,
                                "limsup": h2_comp.limsup_estimate},
        "H3": {"ok": h3.ok, "margin": h3.margin},
        "environment": env.value,
        "envelope_constants": {"K": constants.K, "H": constants.H},
    }
    out.write_json("check.json", report)
    print(f"H1: {'pass' if h1.ok else 'FAIL'}")
    for c in h1.failures():
        print(f"  - {c.name}: FAIL ({c.detail}, witness {c.witness})")
    print(f"H2 (m2): {'pass' if h2_m2.ok else 'FAIL'} "
          f"[liminf ~ {h2_m2.liminf_estimate:.4g}]")
    print(f"H2 (m1 - c1 V): {'pass' if h2_comp.ok else 'FAIL'} "
          f"[liminf ~ {h2_comp.liminf_estimate:.4g}]")
    print(f"H3: {'pass' if h3.ok else 'FAIL'} [margin {h3.margin:.4g}]")
    print(f"environment: {env.value}")
    out.finish()
    return 0


def cmd_eigen(args) -> int:
    if args.m.startswith("@"):
        if not args.config:
            raise ValueError("--m @section needs --config")
        from .config import coefficient_from_spec
        cfg = load_config(args.config)
        name = args.m[1:]
        if name not in cfg["coefficients"]:
            raise ValueError(f"no coefficient section named {name!r}")
        m = coefficient_from_spec(cfg["coefficients"][name], args.T)
    else:
        m = parse_field_spec(args.m, args.T)
    prob = EigenProblem(d=args.d, m=m, R=args.R, T=args.T, N=args.N,
                        grid=args.grid)
    out = OutputSet(args.out, "eigen", None)
    res = principal_eigenvalue(prob, steps_per_period=args.steps)
    out.write_json("eigen.json", {
        "lambda1": res.lambda1, "multiplier": res.multiplier,
        "iterations": res.iterations, "rel_change": res.rel_change,
        "d": args.d, "R": args.R, "T": args.T, "N": args.N,
        "grid": args.grid, "m": args.m})
    if args.phi:
        out.write_csv("phi.csv", ["r", "phi"], zip(res.radii, res.phi0))
    out.finish()
    print(f"lambda1 = {res.lambda1:.8g}  (multiplier {res.multiplier:.6g}, "
          f"{res.iterations} periods)")
    return 0


def cmd_periodic_ode(args) -> int:
    T = args.T
    if args.config:
        raw = load_config(args.config)
        section = raw.get("periodic_ode", {})
        T = float(section.get("T", raw["problem"]["T"]))
        from .config import time_rule_from_spec
        a = time_rule_from_spec(section["a"], T) if args.a is None \
            else parse_rule_spec(args.a, T)
        b = time_rule_from_spec(section.get("b", 1.0), T) if args.b is None \
            else parse_rule_spec(args.b, T)
    else:
        if args.a is None:
            raise ValueError("periodic-ode needs --a (or --config with a "
                             "[periodic_ode] section)")
        a = parse_rule_spec(args.a, T)
        b = parse_rule_spec(args.b or "const:1", T)
    out = OutputSet(args.out, "periodic-ode", None)
    sol = periodic_ode.solve_periodic_logistic(a, b, T)
    out.write_csv("V.csv", ["t", "V"], zip(sol.times, sol.values))
    out.write_json("periodic_ode.json", {
        "mean_growth": sol.mean_a, "residual": sol.residual,
        "min_V": sol.min(), "max_V": sol.max(), "T": T})
    out.finish()
    print(f"V: min {sol.min():.6g}, max {sol.max():.6g}, "
          f"residual {sol.residual:.3g}")
    return 0


def cmd_entire(args) -> int:
    cfg, params, _ = _load(args)
    out = OutputSet(args.out, "entire", cfg)
    fld = _entire_v(cfg, params)
    rows = []
    for i, t in enumerate(fld.times):
        for j, r in enumerate(fld.radii):
            rows.append((t, r, fld.samples[i, j]))
    out.write_csv("field.csv", ["t", "r", "value"], rows)
    out.write_json("entire.json", {
        "residual": fld.residual, "periods": fld.periods,
        "r_out": fld.r_out, "min": fld.min(), "max": fld.max()})
    out.finish()
    print(f"entire state: min {fld.min():.6g}, max {fld.max():.6g}, "
          f"{fld.periods} periods to converge")
    return 0


def cmd_simulate(args) -> int:
    cfg, params, solver = _load(args)
    out = OutputSet(args.out, "simulate", cfg)
    traj = simulate(params, solver) if not args.scalar \
        else scalar_free_boundary(params, solver)
    _write_trajectory(out, traj)
    try:
        bounds_report = verify_bounds(traj, params)
        bounds_ok = True
        bounds_detail = {"C1": bounds_report.bounds.C1,
                         "C2": bounds_report.bounds.C2,
                         "C3": bounds_report.bounds.C3,
                         "max_u": bounds_report.max_u,
                         "max_dhdt": bounds_report.max_dhdt}
    except StefanLabError as exc:
        bounds_ok = False
        bounds_detail = {"violation": str(exc)}
    out.write_json("summary.json", {
        "termination": traj.termination, "final_h": traj.final_h,
        "final_t": float(traj.t[-1]),
        "periods_completed": traj.periods_completed,
        "bounds_ok": bounds_ok, "bounds": bounds_detail})
    if args.plot:
        from . import plots
        out.add_file(plots.save_trajectory_plot(traj,
                                                out.path("trajectory.svg")))
    out.finish()
    print(f"termination: {traj.termination}; final h = {traj.final_h:.6g} "
          f"at t = {traj.t[-1]:.6g}")
    return DOMAIN_EXHAUSTION if traj.termination == "domain_exhausted" else 0


def cmd_classify(args) -> int:
    cfg, params, solver = _load(args)
    out = OutputSet(args.out, "classify", cfg)
    V = _entire_v(cfg, params)
    h_star = analysis.critical_radius(
        params, V, inflation=1.0,
        search_max=min(0.85 * solver.r_out,
                       float(cfg["solver"]["eigen_search_max"])))
    decay_f = float(cfg["solver"]["decay_tol_factor"])
    stall_f = float(cfg["solver"]["stall_tol_factor"])
    _, traj = analysis.run_verdict(params, solver, h_star,
                                   decay_tol_factor=decay_f,
                                   stall_tol_factor=stall_f)
    verdict = analysis.classify(traj, params, h_star=h_star)
    out.write_json("verdict.json", {
        "kind": verdict.kind, "h_star": verdict.h_star_used,
        "radius_crossed": verdict.radius_crossed,
        "crossing_time": verdict.crossing_time,
        "final_sup_u": verdict.final_sup_u,
        "final_front_advance": verdict.final_front_advance,
        "decay_history": list(verdict.decay_history),
        "stall_history": list(verdict.stall_history),
        "recommendation": verdict.recommendation,
        "periods_run": traj.periods_completed,
        "termination": traj.termination,
        "decay_tol_factor": decay_f, "stall_tol_factor": stall_f})
    if args.plot:
        from . import plots
        out.add_file(plots.save_trajectory_plot(traj, out.path("trajectory.svg")))
    out.finish()
    print(f"verdict: {verdict.kind} (h* = {verdict.h_star_used:.6g}, "
          f"{traj.periods_completed} periods)")
    return 0


def cmd_threshold(args) -> int:
    cfg, params, solver = _load(args)
    out = OutputSet(args.out, "threshold", cfg)
    bracket = (args.bracket[0], args.bracket[1])
    if args.param == "mu":
        res = analysis.find_mu_star(params, solver, bracket)
    else:
        res = analysis.find_eps_star(params, solver, bracket)
    out.write_json("threshold.json", {
        "parameter": res.parameter, "lower": res.lower, "upper": res.upper,
        "width": res.width, "degenerate": res.degenerate,
        "unresolved": res.unresolved, "h_star": res.h_star,
        "h_star_inflated": res.h_star_inflated,
        "evaluations": [{"value": v, "verdict": k}
                        for v, k in res.evaluations]})
    out.finish()
    if res.degenerate:
        print(f"{res.parameter}* = 0 (initial radius h0 already at the "
              f"inflated critical radius {res.h_star_inflated:.6g})")
    else:
        print(f"{res.parameter}* in [{res.lower:.6g}, {res.upper:.6g}] "
              f"(width {res.width:.3g})")
    return 0


def cmd_speed(args) -> int:
    cfg, params, solver = _load(args)
    out = OutputSet(args.out, "speed", cfg)
    window = args.window or float(cfg["solver"]["speed_window"])
    traj = simulate(params, solver)
    if traj.termination == "domain_exhausted":
        out.write_json("speed.json", {"error": "domain exhausted before t_end"})
        out.finish()
        return DOMAIN_EXHAUSTION
    # The fit needs three windows of data; shrink a too-ambitious window.
    span_periods = (traj.t[-1] - traj.t[0]) / params.T
    window = min(window, span_periods / 3.0)
    bounds = analysis.speed_bounds(params)
    measured = analysis.measure_speed(traj, window)
    within = bounds.lower * 0.95 <= measured.speed <= bounds.upper * 1.05
    out.write_json("speed.json", {
        "lower_bound": bounds.lower, "upper_bound": bounds.upper,
        "lower_flagged_zero": bounds.lower_flagged_zero,
        "measured": measured.speed, "fit_residual": measured.fit_residual,
        "window_periods": window, "within_bounds": bool(within),
        "tail_limit_note": "tail envelopes taken at face value (no extra "
                           "epsilon margin)"})
    if args.plot:
        from . import plots
        out.add_file(plots.save_trajectory_plot(traj, out.path("trajectory.svg")))
    out.finish()
    print(f"speed: measured {measured.speed:.6g} in "
          f"[{bounds.lower:.6g}, {bounds.upper:.6g}] "
          f"{'OK' if within else 'OUTSIDE 5% band'}")
    return 0


def cmd_semiwave(args) -> int:
    a = parse_rule_spec(args.a, args.T)
    b = parse_rule_spec(args.b, args.T)
    out = OutputSet(args.out, "semiwave", None)
    res = analysis.semiwave_k0(args.mu, a, b, args.d, args.T, L=args.L,
                               grid=args.grid)
    out.write_csv("K0.csv", ["t", "K0"], zip(res.times, res.K0_values))
    out.write_csv("profile.csv", ["r", "U_t0"],
                  zip(res.radii, res.U_profile[0]))
    out.write_json("semiwave.json", {
        "mean_K0": res.mean_K0, "iterations": res.iterations,
        "boundary_residual": res.boundary_residual,
        "tail_gap": res.tail_gap, "existence_bound": res.existence_bound,
        "mu": args.mu, "d": args.d, "T": args.T, "a": args.a, "b": args.b})
    out.finish()
    print(f"mean K0 = {res.mean_K0:.8g} in (0, {res.existence_bound:.6g}); "
          f"boundary residual {res.boundary_residual:.3g}")
    return 0


def _parse_grid_spec(text: str):
    axes = []
    for part in text.split(","):
        name, _, rng = part.partition("=")
        name = name.strip()
        if name not in ("d1", "h0", "mu", "eps"):
            raise ValueError(f"sweep parameter must be d1|h0|mu|eps, got "
                             f"{name!r}")
        pieces = rng.split(":")
        if len(pieces) != 3:
            raise ValueError("grid range must be start:stop:count")
        start, stop, count = float(pieces[0]), float(pieces[1]), int(pieces[2])
        axes.append((name, np.linspace(start, stop, count)))
    if not 1 <= len(axes) <= 2:
        raise ValueError("sweep supports one or two parameters")
    return axes


def _apply_override(params, name: str, value: float):
    from .model import InitialData
    if name == "mu":
        return params.with_mu(value)
    if name == "d1":
        from dataclasses import replace
        return replace(params, d1=float(value))
    if name == "eps":
        return params.with_init(params.init.scaled_u0(float(value)))
    if name == "h0":
        init = params.init
        if init.u0_kind != "cosine_bump":
            raise ValueError("h0 sweeps need the cosine_bump initial profile")
        return params.with_init(InitialData(
            h0=float(value), u0_kind="cosine_bump",
            u0_amplitude=init.u0_amplitude, v0_kind=init.v0_kind,
            v0_value=init.v0_value, v0_radii=init.v0_radii,
            v0_values=init.v0_values))
    raise ValueError(name)


def _sweep_worker(payload):
    params, solver, h_star, overrides = payload
    for name, value in overrides:
        params = _apply_override(params, name, value)
    if h_star is None or any(n == "d1" for n, _ in overrides):
        V = entire.entire_state_v(params)
        h_star = analysis.critical_radius(
            params, V, inflation=1.0, search_max=min(0.85 * solver.r_out, 10.0))
    verdict, traj = analysis.run_verdict(params, solver, h_star)
    return verdict, traj.final_h


def cmd_sweep(args) -> int:
    cfg, params, solver = _load(args)
    out = OutputSet(args.out, "sweep", cfg)
    axes = _parse_grid_spec(args.grid)
    p1_name = axes[0][0]
    p2_name = axes[1][0] if len(axes) > 1 else None
    points = []
    for v1 in axes[0][1]:
        if p2_name is None:
            points.append([(p1_name, float(v1))])
        else:
            for v2 in axes[1][1]:
                points.append([(p1_name, float(v1)), (p2_name, float(v2))])
    sweeps_d1 = any(n == "d1" for n, _ in points[0])
    h_star = None
    if not sweeps_d1:
        V = _entire_v(cfg, params)
        h_star = analysis.critical_radius(
            params, V, inflation=1.0, search_max=min(0.85 * solver.r_out, 10.0))
    workers = int(os.environ.get("STEFAN_THREADS", os.cpu_count() or 1))
    payloads = [(params, solver, h_star, pt) for pt in points]
    rows = []
    header = ["param1", "value1", "param2", "value2", "verdict", "h_final"]
    csv_path = out.path("sweep.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        try:
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    results = pool.map(_sweep_worker, payloads)
                    for pt, (verdict, h_final) in zip(points, results):
                        row = _sweep_row(pt, p2_name, verdict, h_final)
                        rows.append(row)
                        fh.write(",".join(_fmt(x) for x in row) + "\n")
                        fh.flush()
            else:
                for pt, payload in zip(points, payloads):
                    verdict, h_final = _sweep_worker(payload)
                    row = _sweep_row(pt, p2_name, verdict, h_final)
                    rows.append(row)
                    fh.write(",".join(_fmt(x) for x in row) + "\n")
                    fh.flush()
        except KeyboardInterrupt:
            out.add_file(csv_path)
            out.finish(note="interrupted: partial results flushed")
            print("interrupted; partial sweep flushed", file=sys.stderr)
            return 130
    out.add_file(csv_path)
    if args.plot:
        from . import plots
        out.add_file(plots.save_verdict_map(rows, p1_name, p2_name,
                                            out.path("verdicts.svg")))
    out.finish()
    counts = {}
    for row in rows:
        counts[row[4]] = counts.get(row[4], 0) + 1
    print(f"sweep complete: {len(rows)} points, verdicts {counts}")
    return 0


def _sweep_row(pt, p2_name, verdict, h_final):
    p1n, p1v = pt[0]
    if p2_name is None:
        return (p1n, p1v, "", "", verdict, h_final)
    p2n, p2v = pt[1]
    return (p1n, p1v, p2n, p2v, verdict, h_final)


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stefanlab",
        description="Free-boundary competition-diffusion laboratory")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", required=True,
                           help="config file path or packaged name "
                                "(bench_spread, bench_vanish, bench_threshold)")
        p.add_argument("--out", default=None, help="output path prefix")
        p.add_argument("--plot", action="store_true",
                       help="also render SVG figures")

    p = sub.add_parser("check", help="hypothesis checks and environment class")
    add_common(p)

    p = sub.add_parser("eigen", help="principal periodic-parabolic eigenvalue")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--m", default="const:0",
                   help="coefficient spec (const:V | sin:M,A[,PH] | "
                        "dip:BASE,AMP,CENTER,WIDTH) or @name from --config")
    p.add_argument("--config", default=None,
                   help="config file for @name coefficient references")
    p.add_argument("--phi", action="store_true",
                   help="write the eigenfunction snapshot CSV")
    p.add_argument("--out", default=None)

    p = sub.add_parser("periodic-ode", help="T-periodic logistic solution")
    p.add_argument("--a", default=None, help="growth rule, const:V|sin:M,A")
    p.add_argument("--b", default=None, help="crowding rule")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--config", default=None,
                   help="config file with a [periodic_ode] section")
    p.add_argument("--out", default=None)

    p = sub.add_parser("entire", help="entire periodic state of v")
    add_common(p)

    p = sub.add_parser("simulate", help="free-boundary run")
    add_common(p)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--scalar", action="store_true",
                   help="single-species run (skip the v equation)")

    p = sub.add_parser("classify", help="spreading/vanishing verdict")
    add_common(p)
    p.add_argument("--t-end", type=float, default=None)

    p = sub.add_parser("threshold", help="sharp threshold bisection")
    add_common(p)
    p.add_argument("--param", choices=("mu", "eps"), required=True)
    p.add_argument("--bracket", type=float, nargs=2, required=True)
    p.add_argument("--t-end", type=float, default=None)

    p = sub.add_parser("speed", help="spreading speed vs. rough bounds")
    add_common(p)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--window", type=float, default=None,
                   help="fit window in periods")

    p = sub.add_parser("semiwave", help="self-consistent semi-wave speed")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", default="const:1")
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="verdict map over a parameter grid")
    add_common(p)
    p.add_argument("--grid", required=True,
                   help="e.g. mu=0.05:5:8,h0=0.5:3:8 (params: d1,h0,mu,eps)")
    return ap


COMMANDS = {
    "check": cmd_check,
    "eigen": cmd_eigen,
    "periodic-ode": cmd_periodic_ode,
    "entire": cmd_entire,
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "threshold": cmd_threshold,
    "speed": cmd_speed,
    "semiwave": cmd_semiwave,
    "sweep": cmd_sweep,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    if args.out is None:
        args.out = f"stefanlab_{args.subcommand.replace('-', '_')}"
    try:
        return COMMANDS[args.subcommand](args)
    except DomainExhausted as exc:
        print(f"domain exhausted: {exc}", file=sys.stderr)
        return DOMAIN_EXHAUSTION
    except StefanLabError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return NUMERICAL_FAILURE
    except (ValueError, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
