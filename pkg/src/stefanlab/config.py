"""Config-file ingestion: one JSON file describes a whole problem instance.

Sections: [problem] (d1, d2, mu, N, T), [coefficients.m1] ... [coefficients.c2],
[initial] (h0, u0, v0), [solver] (grids, dt, truncation, t_end and the
analysis knobs). Every omitted key takes a documented default and the fully
resolved config is echoed into every output summary, so a run is
reproducible from its own artifacts.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources

import numpy as np

from .fbsolver import SolverConfig
from .model import (CoefficientField, InitialData, ModelParams,
                    PeriodicScalarFunction)

COEFFICIENT_NAMES = ("m1", "m2", "b1", "b2", "c1", "c2")

SOLVER_DEFAULTS = {
    "ns": 256,
    "nr": 512,
    "dt": None,               # resolved to T/512
    "r_out": None,            # resolved to max(25.6, 8*h0)
    "t_end": 50.0,
    "snapshot_every": 1,
    "eigen_grid": 256,
    "eigen_steps_per_period": 256,
    "eigen_search_max": 10.0,
    "entire_r_out": 20.0,
    "entire_grid": 512,
    "entire_steps_per_period": 256,
    "semiwave_L": None,       # resolved internally from d and the growth mean
    "semiwave_grid": None,
    "semiwave_steps_per_period": 256,
    "speed_window": 20.0,
    "decay_tol_factor": 1e-4,   # vanishing verdict: sup u < factor * C1
    "stall_tol_factor": 1e-5,   # vanishing verdict: period advance < factor * h0
}

PROBLEM_DEFAULTS = {"d1": 1.0, "d2": 1.0, "mu": 1.0, "N": 1, "T": 1.0}


def time_rule_from_spec(spec, period: float) -> PeriodicScalarFunction:
    if isinstance(spec, (int, float)):
        return PeriodicScalarFunction.constant(float(spec), period)
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return PeriodicScalarFunction.constant(float(spec["value"]), period)
    if kind == "sinusoid":
        return PeriodicScalarFunction.sinusoid(
            float(spec["mean"]), float(spec["amplitude"]), period,
            phase=float(spec.get("phase", 0.0)))
    if kind == "tabulated":
        return PeriodicScalarFunction.tabulated(spec["samples"], period)
    raise ValueError(f"unknown time rule kind: {kind!r}")


def coefficient_from_spec(spec, period: float) -> CoefficientField:
    if isinstance(spec, (int, float)):
        return CoefficientField.constant(float(spec), period)
    kind = spec.get("kind", "constant")
    overrides = {}
    for key, attr in (("lower", "declared_lower"), ("upper", "declared_upper"),
                      ("liminf", "asymptotic_liminf"),
                      ("limsup", "asymptotic_limsup")):
        if key in spec:
            overrides[attr] = time_rule_from_spec(spec[key], period)
    if kind == "constant":
        return CoefficientField.constant(float(spec["value"]), period,
                                         **overrides)
    if kind == "sinusoid":
        rule = PeriodicScalarFunction.sinusoid(
            float(spec["mean"]), float(spec["amplitude"]), period,
            phase=float(spec.get("phase", 0.0)))
        return CoefficientField.space_constant(rule, **overrides)
    if kind == "gaussian_dip":
        return CoefficientField.gaussian_dip(
            time_rule_from_spec(spec["base"], period),
            time_rule_from_spec(spec["amplitude"], period),
            float(spec["center"]), float(spec["width"]), period, **overrides)
    if kind == "tabulated":
        return CoefficientField.tabulated(
            spec["times"], spec["radii"], spec["values"], period, **overrides)
    raise ValueError(f"unknown coefficient kind: {kind!r}")


def initial_from_spec(spec: dict) -> InitialData:
    h0 = float(spec["h0"])
    u0 = spec.get("u0", {"kind": "cosine_bump", "amplitude": 1.0})
    v0 = spec.get("v0", {"kind": "constant", "value": 1.0})
    kw = dict(h0=h0)
    if u0.get("kind", "cosine_bump") == "cosine_bump":
        kw.update(u0_kind="cosine_bump", u0_amplitude=float(u0["amplitude"]))
    else:
        kw.update(u0_kind="samples",
                  u0_radii=np.asarray(u0["radii"], dtype=float),
                  u0_values=np.asarray(u0["values"], dtype=float))
    if v0.get("kind", "constant") == "constant":
        kw.update(v0_kind="constant", v0_value=float(v0["value"]))
    else:
        kw.update(v0_kind="samples",
                  v0_radii=np.asarray(v0["radii"], dtype=float),
                  v0_values=np.asarray(v0["values"], dtype=float))
    return InitialData(**kw)


def resolve_config(raw: dict) -> dict:
    """Fill every default; the result is the canonical echo of the run."""
    cfg = {"problem": dict(PROBLEM_DEFAULTS), "coefficients": {},
           "initial": {"h0": 1.0, "u0": {"kind": "cosine_bump",
                                         "amplitude": 1.0},
                       "v0": {"kind": "constant", "value": 1.0}},
           "solver": dict(SOLVER_DEFAULTS)}
    cfg["problem"].update(raw.get("problem", {}))
    for name in COEFFICIENT_NAMES:
        cfg["coefficients"][name] = raw.get("coefficients", {}).get(name, 1.0)
    init_raw = raw.get("initial", {})
    cfg["initial"]["h0"] = init_raw.get("h0", cfg["initial"]["h0"])
    for key in ("u0", "v0"):
        if key in init_raw:
            cfg["initial"][key] = init_raw[key]
    cfg["solver"].update(raw.get("solver", {}))
    for key in raw:
        if key not in cfg:
            cfg[key] = raw[key]
    T = float(cfg["problem"]["T"])
    if cfg["solver"]["dt"] is None:
        cfg["solver"]["dt"] = T / 512.0
    if cfg["solver"]["r_out"] is None:
        cfg["solver"]["r_out"] = max(25.6, 8.0 * float(cfg["initial"]["h0"]))
    return cfg


def params_from_config(cfg: dict) -> ModelParams:
    prob = cfg["problem"]
    T = float(prob["T"])
    fields = {name: coefficient_from_spec(cfg["coefficients"][name], T)
              for name in COEFFICIENT_NAMES}
    return ModelParams(d1=float(prob["d1"]), d2=float(prob["d2"]),
                       mu=float(prob["mu"]), N=int(prob["N"]), T=T,
                       init=initial_from_spec(cfg["initial"]), **fields)


def solver_from_config(cfg: dict) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(ns=int(s["ns"]), nr=int(s["nr"]), dt=float(s["dt"]),
                        r_out=float(s["r_out"]), t_end=float(s["t_end"]),
                        snapshot_every=int(s["snapshot_every"]))


def load_config(path_or_name: str) -> dict:
    """Read a config file, or one of the packaged named instances."""
    import os
    if os.path.exists(path_or_name):
        with open(path_or_name, "r", encoding="utf-8") as fh:
            return resolve_config(json.load(fh))
    packaged = resources.files("stefanlab").joinpath(
        "configs", f"{path_or_name}.json")
    if packaged.is_file():
        return resolve_config(json.loads(packaged.read_text()))
    raise FileNotFoundError(
        f"no config file or packaged instance named {path_or_name!r}")


def canonical_json(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()
