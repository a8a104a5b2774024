"""Command-line front end.

Configuration is a YAML file (schema below) with flag overrides; every run writes
a CSV whose ``#`` header holds the fully resolved configuration as JSON, so the
same file can be passed back through ``--config`` to reproduce it.

Config keys::

    system: motor | single
    units: reduced | physical        # physical: see duetmotor.units.PhysicalParams
    params: {...}                    # reduced motor: m k b V0 phi eta0 T1 T2 hbar cutoff
                                     # reduced single: m b V0 eta0 T hbar cutoff
    forces: {f1: 0, f2: 0}           # motor, for `forced` and `simulate`
    force: 0.0                       # single particle
    quantity: exact                  # what `sweep` evaluates: exact|forced|single|simulate
    sweep: {axis: k, min: 0.01, max: 100, points: 25, log: true}   # or values: [...]
    cutoffs: [1e3, 1e4, 1e5]         # optional, repeats the sweep for each cutoff
    simulate: {mode: qmd, traj: 512, steps: 262144, dt: null, seed: 20240611, workers: 1}
    tol: 1.0e-8
    noise: {bins: 32, threshold: 0.05, particle: 1}

CSV columns
    exact, forced, single: [cutoff,] [axis,] v, abs_error
    simulate:              [cutoff,] [axis,] v, stderr, theory, theory_error
    noise-check:           omega, psd_ratio_minus_1

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import dataclasses
import io
import json
import math
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bath import BathSpec, MotorParams, cutoff_from_dict
from .colored_noise import NyquistError, derive_seed, periodogram_check, synthesize
from .correlators import ConvergenceError
from .dynamics import SimConfig, SimulationError, SingleParticle, run_ensemble, stable_dt
from .exact_velocity import (ForceSpec, TruncationError, classical_velocity, forced_velocity,
                             single_particle_velocity, steady_velocity)
from .units import PhysicalParams, convert_units

COMMANDS = ("exact", "forced", "single", "simulate", "sweep", "noise-check")
QUANTITIES = ("exact", "forced", "single", "simulate")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

MOTOR_DEFAULTS = dict(m=1.0, k=1.0, b=1.0, V0=0.5, phi=math.pi / 2, eta0=1.0,
                      T1=1.0, T2=2.5, hbar=1.0, cutoff={"kind": "ohmic"})
SINGLE_DEFAULTS = dict(m=1.0, b=1.0, V0=0.1, eta0=1.0, T=0.1, hbar=1.0, cutoff={"kind": "ohmic"})
PHYSICAL_DEFAULTS = dict(m_amu=40.0, T1_uK=1.0, T2_uK=2.5, b_per_um=10.0, eta_over_m_Hz=10.0,
                         Omega_kHz=702.5, V0_uK=0.25, phi=math.pi / 2,
                         cutoff_kind="lorentzian", cutoff_kHz=1e4, quantum=True)
SIM_DEFAULTS = dict(mode="qmd", traj=512, steps=2**18, dt=None, seed=20240611, workers=1)
NOISE_DEFAULTS = dict(bins=32, threshold=0.05, particle=1)


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


NUMERIC_ERRORS = (ConvergenceError, TruncationError, SimulationError, FloatingPointError,
                  ArithmeticError, NumericalFailure)


def git_version():
    """``git describe`` of the source tree, or the package version outside a checkout."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# configuration

def load_config(path):
    """YAML config, or the JSON header of a CSV written by this tool."""
    text = Path(path).read_text()
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _merge(base, extra):
    out = dict(base)
    for key, val in (extra or {}).items():
        out[key] = val
    return out


def _parse_value(text):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def resolve(command, file_cfg, args) -> dict:
    """Defaults < config file < flags. Returns a plain, JSON-serialisable dict."""
    cfg = copy.deepcopy(file_cfg or {})
    quantity = cfg.get("quantity", "exact")
    if command in QUANTITIES:
        quantity = command
    if quantity not in QUANTITIES:
        raise ConfigError(f"quantity must be one of {QUANTITIES}")
    system = "single" if quantity == "single" else cfg.get("system", "motor")
    if system not in ("motor", "single"):
        raise ConfigError("system must be 'motor' or 'single'")
    units = cfg.get("units", "reduced")
    if units not in ("reduced", "physical"):
        raise ConfigError("units must be 'reduced' or 'physical'")
    if system == "single" and units != "reduced":
        raise ConfigError("the single-particle system is configured in reduced units")
    defaults = {"motor": MOTOR_DEFAULTS, "single": SINGLE_DEFAULTS}[system]
    if units == "physical":
        defaults = PHYSICAL_DEFAULTS
    params = _merge(defaults, cfg.get("params"))
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    for item in getattr(args, "set", None) or []:
        key, sep, val = item.partition("=")
        if sep and key == "force":
            cfg["force"] = _parse_value(val)
        elif sep and key in ("f1", "f2"):
            cfg["forces"] = dict(cfg.get("forces") or {}, **{key: _parse_value(val)})
        elif sep and key in defaults:
            params[key] = _parse_value(val)
        else:
            raise ConfigError(f"--set expects NAME=VALUE with a known parameter, got {item!r}")

    sim = _merge(SIM_DEFAULTS, cfg.get("simulate"))
    for flag, key in (("mode", "mode"), ("traj", "traj"), ("steps", "steps"), ("dt", "dt"),
                      ("seed", "seed"), ("workers", "workers")):
        val = getattr(args, flag, None)
        if val is not None:
            sim[key] = val
    if sim["mode"] not in ("qmd", "md"):
        raise ConfigError("mode must be 'qmd' or 'md'")

    sweep = cfg.get("sweep")
    sweep = dict(sweep) if sweep else None
    if getattr(args, "axis", None):
        sweep = dict(sweep or {})
        if sweep.get("axis") != args.axis:
            sweep.pop("values", None)
        sweep["axis"] = args.axis
    for flag in ("min", "max", "points", "log"):
        val = getattr(args, flag, None)
        if val is not None:
            if sweep is None:
                raise ConfigError(f"--{flag} needs a sweep axis")
            sweep[flag] = val
            sweep.pop("values", None)
    if command == "sweep" and not sweep:
        raise ConfigError("sweep needs an axis (--axis or a 'sweep' section)")
    if sweep is not None:
        sweep = _check_sweep(sweep)

    tol = float(args.tol) if getattr(args, "tol", None) is not None else float(cfg.get("tol", 1e-8))
    if not tol > 0:
        raise ConfigError("tol must be positive")
    forces = _merge({"f1": 0.0, "f2": 0.0}, cfg.get("forces"))
    cutoffs = cfg.get("cutoffs")
    out = {
        "command": command, "system": system, "units": units, "params": params,
        "forces": {k: float(v) for k, v in forces.items()}, "force": float(cfg.get("force", 0.0)),
        "quantity": quantity, "sweep": sweep,
        "cutoffs": None if cutoffs is None else [float(c) for c in cutoffs],
        "simulate": sim, "tol": tol, "noise": _merge(NOISE_DEFAULTS, cfg.get("noise")),
    }
    build_system(out, params)     # validates the parameter set early
    return out


def _check_sweep(sweep):
    if "axis" not in sweep:
        raise ConfigError("sweep needs an 'axis'")
    if "values" in sweep:
        vals = [float(v) for v in sweep["values"]]
        if not vals:
            raise ConfigError("sweep 'values' is empty")
        return {"axis": str(sweep["axis"]), "values": vals}
    try:
        lo, hi = float(sweep["min"]), float(sweep["max"])
        n = int(sweep.get("points", 25))
    except (KeyError, TypeError, ValueError):
        raise ConfigError("sweep needs numeric 'min', 'max' and 'points'") from None
    log = bool(sweep.get("log", False))
    if n < 1 or hi < lo:
        raise ConfigError("sweep needs points >= 1 and max >= min")
    if log and lo <= 0:
        raise ConfigError("a log sweep needs a positive range")
    return {"axis": str(sweep["axis"]), "min": lo, "max": hi, "points": n, "log": log}


def sweep_values(sweep):
    if sweep is None:
        return [None]
    if "values" in sweep:
        return list(sweep["values"])
    lo, hi, n = sweep["min"], sweep["max"], sweep["points"]
    if n == 1:
        return [lo]
    if sweep["log"]:
        return list(np.geomspace(lo, hi, n))
    return list(np.linspace(lo, hi, n))


def apply_axis(params, units, axis, value):
    """Parameter dict with ``axis`` set to ``value``.

    Besides plain parameter names, ``theta`` scales the temperatures at a fixed
    ratio, ``cutoff`` sets the cutoff frequency, and ``Omega`` (reduced units)
    sets ``k = m Omega^2``.
    """
    p = copy.deepcopy(params)
    if axis in ("F", "force", "f1", "f2"):
        return p
    if axis == "theta":
        if units == "physical":
            ratio = p["T2_uK"] / p["T1_uK"] if p["T1_uK"] > 0 else 2.5
            p["T1_uK"], p["T2_uK"] = value, ratio * value
        elif "T" in p:
            p["T"] = value
        else:
            ratio = p["T2"] / p["T1"] if p["T1"] > 0 else 2.5
            p["T1"], p["T2"] = value, ratio * value
        return p
    if axis == "cutoff":
        if units == "physical":
            p["cutoff_kHz"] = value
        else:
            p["cutoff"] = dict(p["cutoff"], cutoff=value)
        return p
    if axis == "Omega" and units == "reduced" and "k" in p:
        p["k"] = p["m"] * value * value
        return p
    if axis not in p:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    p[axis] = value
    return p


def apply_cutoff(params, units, value):
    return params if value is None else apply_axis(params, units, "cutoff", value)


def build_system(cfg, params):
    try:
        if cfg["system"] == "single":
            spec = BathSpec(float(params["eta0"]), cutoff_from_dict(params["cutoff"]),
                            float(params["T"]), float(params["hbar"]))
            return SingleParticle(spec, float(params["m"]), float(params["b"]), float(params["V0"]),
                                  float(cfg["force"]))
        if cfg["units"] == "physical":
            return convert_units(PhysicalParams(**params))
        b = dict(eta0=float(params["eta0"]), cutoff=cutoff_from_dict(params["cutoff"]),
                 hbar=float(params["hbar"]))
        return MotorParams(m=float(params["m"]), k=float(params["k"]), b=float(params["b"]),
                           V0=float(params["V0"]), phi=float(params["phi"]),
                           bath1=BathSpec(b["eta0"], b["cutoff"], float(params["T1"]), b["hbar"]),
                           bath2=BathSpec(b["eta0"], b["cutoff"], float(params["T2"]), b["hbar"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid parameters: {exc}") from None


# computation

def _classical_bath(spec):
    return dataclasses.replace(spec, hbar=0.0)


def _point_forces(cfg, axis, value):
    forces = dict(cfg["forces"])
    force = cfg["force"]
    if axis in ("F", "force"):
        forces = {"f1": value, "f2": value}
        force = value
    elif axis in ("f1", "f2"):
        forces[axis] = value
    return ForceSpec(forces["f1"], forces["f2"]), force


def _theory(cfg, system, forces, force):
    tol, classical = cfg["tol"], cfg["simulate"]["mode"] == "md"
    if isinstance(system, SingleParticle):
        bath = _classical_bath(system.bath) if classical else system.bath
        return single_particle_velocity(bath, system.m, system.b, system.V0, force, tol=tol)
    params = system.classical() if classical else system
    if forces.zero:
        return steady_velocity(params, tol=tol)
    return forced_velocity(params, forces, tol=tol)


def evaluate_point(cfg, cutoff, value):
    """One output row (without the leading cutoff/axis columns)."""
    axis = cfg["sweep"]["axis"] if cfg["sweep"] else None
    params = apply_cutoff(cfg["params"], cfg["units"], cutoff)
    if axis is not None:
        params = apply_axis(params, cfg["units"], axis, value)
    forces, force = _point_forces(cfg, axis, value)
    point = dict(cfg, force=force)
    system = build_system(point, params)
    quantity, tol, sim = cfg["quantity"], cfg["tol"], cfg["simulate"]
    if quantity == "exact":
        est = classical_velocity(system, tol=tol) if sim["mode"] == "md" else steady_velocity(system, tol=tol)
        return [est.value, est.abs_error]
    if quantity == "forced":
        params_q = system.classical() if sim["mode"] == "md" else system
        est = forced_velocity(params_q, forces, tol=tol)
        return [est.value, est.abs_error]
    if quantity == "single":
        bath = _classical_bath(system.bath) if sim["mode"] == "md" else system.bath
        est = single_particle_velocity(bath, system.m, system.b, system.V0, force, tol=tol)
        return [est.value, est.abs_error]
    dt = sim["dt"] if sim["dt"] is not None else stable_dt(system)
    sc = SimConfig(dt=float(dt), n_steps=int(sim["steps"]), n_traj=int(sim["traj"]),
                   master_seed=int(sim["seed"]), mode=sim["mode"], workers=int(sim["workers"]))
    res = run_ensemble(system, sc, None if isinstance(system, SingleParticle) else forces)
    th = _theory(cfg, system, forces, force)
    return [res.velocity.value, res.velocity.abs_error, th.value, th.abs_error]


def _row_task(job):
    cfg, cutoff, value = job
    return evaluate_point(cfg, cutoff, value)


def run_rows(cfg):
    """All rows in deterministic order; points go to a process pool when workers > 1."""
    cutoffs = cfg["cutoffs"] or [None]
    jobs = [(cfg, c, v) for c in cutoffs for v in sweep_values(cfg["sweep"])]
    workers = int(cfg["simulate"]["workers"])
    if workers > 1 and cfg["quantity"] != "simulate" and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_row_task, jobs))
    else:
        results = [_row_task(j) for j in jobs]
    rows = []
    for (_, c, v), r in zip(jobs, results):
        lead = ([c] if cfg["cutoffs"] else []) + ([v] if cfg["sweep"] else [])
        rows.append(lead + r)
    return rows


def columns(cfg):
    cols = (["cutoff"] if cfg["cutoffs"] else []) + ([cfg["sweep"]["axis"]] if cfg["sweep"] else [])
    if cfg["command"] == "noise-check":
        return ["omega", "psd_ratio_minus_1"]
    if cfg["quantity"] == "simulate":
        return cols + ["v", "stderr", "theory", "theory_error"]
    return cols + ["v", "abs_error"]


def noise_rows(cfg):
    system = build_system(cfg, cfg["params"])
    particle = int(cfg["noise"]["particle"])
    if isinstance(system, SingleParticle):
        spec = system.bath
    else:
        spec = system.bath1 if particle == 1 else system.bath2
    if cfg["simulate"]["mode"] == "md":
        spec = _classical_bath(spec)
    dt = cfg["simulate"]["dt"] if cfg["simulate"]["dt"] is not None else stable_dt(system)
    seed = derive_seed(int(cfg["simulate"]["seed"]), 0, particle)
    try:
        track = synthesize(spec, int(cfg["simulate"]["steps"]), float(dt), seed)
    except NyquistError as exc:
        raise ConfigError(str(exc)) from None
    centers, dev = periodogram_check(track, bins=int(cfg["noise"]["bins"]), return_centers=True)
    worst = float(np.max(np.abs(dev)))
    return [[c, d] for c, d in zip(centers, dev)], worst


def format_csv(cfg, cols, rows, extra=None):
    buf = io.StringIO()
    buf.write(f"# duetmotor {git_version()}\n")
    buf.write(f"# command: {cfg['command']}\n")
    buf.write(f"# seed: {cfg['simulate']['seed']}\n")
    buf.write(f"# tol: {cfg['tol']!r}\n")
    for key, val in (extra or {}).items():
        buf.write(f"# {key}: {val}\n")
    buf.write("# config: " + json.dumps(cfg, sort_keys=True) + "\n")
    buf.write(",".join(cols) + "\n")
    for row in rows:
        buf.write(",".join(f"{float(x):.17g}" for x in row) + "\n")
    return buf.getvalue()


def execute(cfg):
    """Run a resolved config; returns the CSV text and whether a check failed."""
    if cfg["command"] == "noise-check":
        rows, worst = noise_rows(cfg)
        ok = worst <= float(cfg["noise"]["threshold"])
        return format_csv(cfg, columns(cfg), rows, {"max_abs_deviation": f"{worst:.6g}"}), ok
    return format_csv(cfg, columns(cfg), run_rows(cfg)), True


def build_parser():
    parser = argparse.ArgumentParser(prog="duetmotor", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"exact": "steady velocity by quadrature",
             "forced": "velocity under constant forces by quadrature",
             "single": "single particle in a tilted cosine potential",
             "simulate": "QMD/MD ensemble velocity",
             "sweep": "evaluate the configured quantity along one axis",
             "noise-check": "periodogram of synthesized bath noise against the target PSD"}
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="YAML config or a CSV written by a previous run")
        p.add_argument("--set", action="append", metavar="NAME=VALUE", help="override a parameter")
        p.add_argument("--axis")
        p.add_argument("--min", type=float)
        p.add_argument("--max", type=float)
        p.add_argument("--points", type=int)
        p.add_argument("--log", action="store_true", default=None)
        p.add_argument("--mode", choices=("qmd", "md"))
        p.add_argument("--traj", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output CSV (default: stdout)")
        p.add_argument("--workers", type=int)
        p.add_argument("--tol", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = load_config(args.config) if args.config else {}
        cfg = resolve(args.command, file_cfg, args)
    except (ConfigError, OSError, ValueError, TypeError, KeyError) as exc:
        print(f"duetmotor: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text, ok = execute(cfg)
    except NUMERIC_ERRORS as exc:
        print(f"duetmotor: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"duetmotor: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("duetmotor: noise check above threshold", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
