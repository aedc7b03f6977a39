"""Command-line runner: configuration, experiment orchestration and output files.

Usage::

    fluidmembrane SUBCOMMAND --config PATH [--out DIR] [--seed N]

Subcommands are ``simulate``, ``project``, ``equilibrium``, ``transfer``,
``verify`` and ``stability``. Each writes ``resolved-config.json`` plus its
own artifacts into the output directory and exits nonzero iff a check fails.
"""

import argparse
import copy
import json
import os
import sys
import time

import numpy as np

from . import dynamics as dyn
from . import structure as st
from . import transfer as tf
from .coefficients import Coefficients
from .fields import (CompatibilityError, Potential, ToroidalField, VectorField, divergence,
                     random_scalar, random_surface, random_toroidal, random_vector_field)
from .membrane import CoefficientError, NoSolutionError
from .serialize import (read_json, snapshot, trajectory_from_json, trajectory_to_json,
                        write_csv, write_json, write_trajectory_csv)
from .space import DiscreteSpace, Geometry, ScalarBulkField, SpaceError, SurfaceField

SUBCOMMANDS = ("simulate", "project", "equilibrium", "transfer", "verify", "stability")
PRESETS = ("zero", "random", "pure-equilibrium", "x-third", "smooth")

DEFAULTS = {
    "geometry": {"kind": "ball", "a": 0.0, "b": 1.0},
    "truncation": {"l_max": 4, "n_r": 12},
    "coefficients": {"rho0": 1.0, "B": 1.0, "mu": 1.0, "sigma": 1.0, "delta": 0.0,
                     "kappa": 0.0},
    "model": "L",
    "initial": {"preset": "random", "amplitude": 1.0, "fields": None},
    "time": {"dt": 1e-3, "t_end": 1.0, "output_every": 10},
    "tolerances": {"membership": 1e-9, "energy": 1e-9, "projector": 1e-10,
                   "residual": 1e-8, "weak_factor": 5.0},
    "seed": 0,
    "output_dir": "out",
    "transfer": {"input": None, "target": "E"},
    "verify": {"n_pairs": 20},
    "stability": {"t_end": None},
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# -- configuration -----------------------------------------------------------------

def _merge(base, user, path=""):
    out = copy.deepcopy(base)
    for k, v in user.items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(base[k], dict) and k != "fields":
            if not isinstance(v, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = v
    return out


def _num(x, name, positive=False, nonneg=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
        raise ConfigError(f"{name} must be a finite number, got {x!r}")
    if positive and not x > 0:
        raise ConfigError(f"{name} > 0 required, got {x}")
    if nonneg and x < 0:
        raise ConfigError(f"{name} >= 0 required, got {x}")
    return float(x)


def _int(x, name, lo):
    if isinstance(x, bool) or not isinstance(x, int) or x < lo:
        raise ConfigError(f"{name} must be an integer >= {lo}, got {x!r}")
    return x


def resolve_config(user):
    """Merge ``user`` into the defaults and validate every entry.

    Raises
    ------
    ConfigError
        On unknown keys or values outside the admissible ranges.
    """
    if not isinstance(user, dict):
        raise ConfigError("configuration must be a JSON object")
    cfg = _merge(DEFAULTS, user)
    g = cfg["geometry"]
    if g["kind"] not in ("ball", "shell"):
        raise ConfigError(f"geometry.kind must be 'ball' or 'shell', got {g['kind']!r}")
    g["b"] = _num(g["b"], "geometry.b", positive=True)
    g["a"] = _num(g["a"], "geometry.a", nonneg=True)
    if g["kind"] == "ball":
        if g["a"] != 0.0:
            raise ConfigError("a ball has a = 0")
    elif not 0.0 < g["a"] < g["b"]:
        raise ConfigError(f"a shell needs 0 < a < b, got a={g['a']}, b={g['b']}")
    tr = cfg["truncation"]
    _int(tr["l_max"], "truncation.l_max", 0)
    _int(tr["n_r"], "truncation.n_r", 4)
    co = cfg["coefficients"]
    co["rho0"] = _num(co["rho0"], "rho0", positive=True)
    co["B"] = _num(co["B"], "B", positive=True)
    n_modes = (tr["l_max"] + 1) ** 2
    for name in ("mu", "sigma", "delta", "kappa"):
        v = co[name]
        if isinstance(v, list):
            if len(v) != n_modes:
                raise ConfigError(f"{name}: expected {n_modes} harmonic coefficients")
            co[name] = [_num(x, name) for x in v]
        else:
            co[name] = _num(v, name)
    if cfg["model"] not in dyn.MODEL_TAGS:
        raise ConfigError(f"model must be one of {', '.join(dyn.MODEL_TAGS)}")
    ini = cfg["initial"]
    if ini["fields"] is None:
        if ini["preset"] not in PRESETS:
            raise ConfigError(f"initial.preset must be one of {', '.join(PRESETS)}")
    elif not isinstance(ini["fields"], dict):
        raise ConfigError("initial.fields must be an object of coefficient lists")
    ini["amplitude"] = _num(ini["amplitude"], "initial.amplitude")
    tm = cfg["time"]
    tm["dt"] = _num(tm["dt"], "time.dt", positive=True)
    tm["t_end"] = _num(tm["t_end"], "time.t_end", nonneg=True)
    _int(tm["output_every"], "time.output_every", 1)
    n = round(tm["t_end"] / tm["dt"])
    if abs(n * tm["dt"] - tm["t_end"]) > 1e-9 * max(tm["t_end"], tm["dt"]):
        raise ConfigError("time.t_end must be a multiple of time.dt")
    for k, v in cfg["tolerances"].items():
        cfg["tolerances"][k] = _num(v, f"tolerances.{k}", positive=True)
    _int(cfg["seed"], "seed", 0)
    if not isinstance(cfg["output_dir"], str):
        raise ConfigError("output_dir must be a string")
    if cfg["transfer"]["target"] not in dyn.MODEL_TAGS + ("L", "E", "P"):
        raise ConfigError("transfer.target must be a model tag")
    _int(cfg["verify"]["n_pairs"], "verify.n_pairs", 1)
    if cfg["stability"]["t_end"] is not None:
        _num(cfg["stability"]["t_end"], "stability.t_end", positive=True)
    return cfg


def build_space(cfg):
    g = cfg["geometry"]
    geo = Geometry.ball(g["b"]) if g["kind"] == "ball" else Geometry.shell(g["a"], g["b"])
    tr = cfg["truncation"]
    return DiscreteSpace(geo, tr["l_max"], tr["n_r"])


def build_coefficients(cfg, space):
    try:
        return Coefficients(space, **cfg["coefficients"])
    except CoefficientError as e:
        raise ConfigError(str(e)) from e


# -- initial data ------------------------------------------------------------------

def _explicit_state(kind, fields, sp):
    def arr(name, shape):
        if name not in fields:
            raise ConfigError(f"initial.fields is missing {name!r}")
        a = np.asarray(fields[name], dtype=float)
        if a.shape != shape:
            raise ConfigError(f"initial.fields.{name}: expected shape {shape}, got {a.shape}")
        return a
    allowed = {"L": {"r_potential", "r_toroidal", "v", "r_t_potential", "v_t"},
               "E": {"p", "vvec_potential", "v", "v_t"},
               "P": {"u", "v", "u_t", "v_t"}}[kind]
    extra = set(fields) - allowed
    if extra:
        raise ConfigError(f"unknown initial fields {sorted(extra)}")
    nm, nr, npot = sp.n_modes, sp.n_r, sp.n_pot
    surf = (nm,)
    if kind == "P":
        return dyn.PotentialState(ScalarBulkField(sp, arr("u", (nm, nr))),
                                  SurfaceField(sp, arr("v", surf)),
                                  ScalarBulkField(sp, arr("u_t", (nm, nr))),
                                  SurfaceField(sp, arr("v_t", surf)))
    if kind == "E":
        return dyn.EulerianState(ScalarBulkField(sp, arr("p", (nm, nr))),
                                 VectorField(sp, Potential(sp, arr("vvec_potential", (nm, npot)))),
                                 SurfaceField(sp, arr("v", surf)),
                                 SurfaceField(sp, arr("v_t", surf)))
    tor = ToroidalField(sp, np.asarray(fields.get("r_toroidal", np.zeros((nm, nr)))))
    return dyn.LagrangianState(VectorField(sp, Potential(sp, arr("r_potential", (nm, npot))), tor),
                               SurfaceField(sp, arr("v", surf)),
                               VectorField(sp, Potential(sp, arr("r_t_potential", (nm, npot)))),
                               SurfaceField(sp, arr("v_t", surf)))


def _random_lagrangian(tag, co, eq, rng):
    sp = co.space
    p = st.ConfigurationPair(random_vector_field(sp, rng), random_surface(sp, rng))
    if tag in dyn.LAGRANGIAN_TAGS[:4]:
        _, p = st.project_structural(p, eq)
        if tag in ("L1", "L3"):
            p = st.ConfigurationPair(p.s + VectorField(sp, None, random_toroidal(sp, rng)), p.z)
    elif tag == "L4":
        p = st.ConfigurationPair(VectorField(sp, p.s.potential), p.z)
    w = random_scalar(sp, rng)
    return dyn.LagrangianState(p.s, p.z, dyn.gradient_of(w), random_surface(sp, rng))


def _position_third(sp):
    return VectorField.position(sp, 1.0 / 3.0)


def initial_state(cfg, co, rng):
    """Initial data for ``cfg["model"]`` from a preset or explicit coefficients."""
    sp = co.space
    tag = cfg["model"]
    kind = tag[0]
    ini = cfg["initial"]
    amp = ini["amplitude"]
    eq = st.special_equilibrium(co)
    if ini["fields"] is not None:
        return _explicit_state(kind, ini["fields"], sp)
    preset = ini["preset"]
    if preset == "zero":
        s = {"L": dyn.LagrangianState, "E": dyn.EulerianState,
             "P": dyn.PotentialState}[kind].zeros(sp)
    elif preset == "pure-equilibrium":
        if kind == "L":
            if tag in dyn.LAGRANGIAN_TAGS[:4]:
                raise ConfigError(f"the special equilibrium is not admissible for {tag}")
            s = dyn.LagrangianState(eq.s_bullet, eq.z_bullet, VectorField.zeros(sp),
                                    SurfaceField.zeros(sp))
        elif kind == "E":
            if tag == "Ec":
                raise ConfigError("the special equilibrium is not admissible for Ec")
            s = tf.eulerian_equilibrium(eq, co.B)
        else:
            if tag == "Pc":
                raise ConfigError("the special equilibrium is not admissible for Pc")
            c1 = -divergence(eq.s_bullet).mean() * co.B / co.rho0
            s = dyn.PotentialState(ScalarBulkField.zeros(sp), eq.z_bullet,
                                   ScalarBulkField.constant(sp, c1), SurfaceField.zeros(sp))
    elif preset == "x-third":
        if kind != "L":
            raise ConfigError("preset 'x-third' is Lagrangian")
        rt = dyn.gradient_of(ScalarBulkField.from_function(
            sp, lambda r, th, ph: r**2 * 0.5 * (3.0 * np.cos(th) ** 2 - 1.0)))
        s = dyn.LagrangianState(_position_third(sp), SurfaceField.zeros(sp), rt,
                                SurfaceField.zeros(sp))
    elif preset == "smooth":
        if kind != "P":
            raise ConfigError("preset 'smooth' is for potential models")
        s = smooth_potential_data(sp, tag == "Pc", co)
    else:
        if kind == "L":
            s = _random_lagrangian(tag, co, eq, rng)
        elif kind == "E":
            w = random_scalar(sp, rng)
            s = dyn.EulerianState(random_scalar(sp, rng), dyn.gradient_of(w),
                                  random_surface(sp, rng), random_surface(sp, rng))
            if tag == "Ec":
                shift = (s.p.integrate() - co.B * s.v.integrate()) / sp.geometry.volume
                s.p = s.p - ScalarBulkField.constant(sp, shift)
        else:
            s = dyn.PotentialState(random_scalar(sp, rng), random_surface(sp, rng),
                                   random_scalar(sp, rng), random_surface(sp, rng))
            if tag == "Pc":
                shift = (co.rho0 * s.u_t.integrate() - co.B * s.v.integrate())
                s.u_t = s.u_t - ScalarBulkField.constant(sp, shift / (co.rho0 * sp.geometry.volume))
    return scale_state(s, amp)


def smooth_potential_data(sp, constrained=False, co=None):
    """Low-order data satisfying the boundary coupling ``d_r u = v_t`` at ``t = 0``.

    ``u`` has zero radial derivative on both spheres, ``u_t = 0`` and
    ``v_t = 0``.
    """
    a, b = sp.a, sp.b

    def f(r, th, ph):
        # d/dr vanishes at r = a and r = b for both pieces
        q = (r - a) ** 2 * (1.0 - 2.0 * (r - a) / (3.0 * (b - a)))
        return q / (b - a) ** 2 * (1.0 + np.cos(th))
    u = ScalarBulkField.from_function(sp, f)
    v = SurfaceField.from_function(sp, lambda th, ph: 0.3 * np.sin(th) ** 2 * np.cos(2 * ph))
    if constrained:
        v = v - SurfaceField.constant(sp, v.integrate() / sp.geometry.outer_area)
    return dyn.PotentialState(u, v, ScalarBulkField.zeros(sp), SurfaceField.zeros(sp))


def scale_state(s, c):
    if c == 1.0:
        return s
    kind = type(s)
    if kind is dyn.LagrangianState:
        return kind(s.r * c, s.v * c, s.r_t * c, s.v_t * c, s.t)
    if kind is dyn.EulerianState:
        return kind(s.p * c, s.vvec * c, s.v * c, s.v_t * c, s.t)
    return kind(s.u * c, s.v * c, s.u_t * c, s.v_t * c, s.t)


def initial_pair(cfg, co, rng):
    """A configuration pair for ``project``: the position part of Lagrangian data."""
    tag = cfg["model"] if cfg["model"][0] == "L" else "L"
    c = dict(cfg, model=tag)
    s = initial_state(c, co, rng)
    return s.pair


# -- checks table ------------------------------------------------------------------

class Checks:
    """Named pass/fail rows ``(name, value, tolerance, passed)``."""

    def __init__(self):
        self.rows = []

    def add(self, name, value, tol, passed=None):
        value = float(np.abs(value))
        if passed is None:
            passed = bool(value <= tol)
        self.rows.append((name, value, float(tol), bool(passed)))
        return passed

    @property
    def ok(self):
        return all(r[3] for r in self.rows)

    def write(self, path):
        write_csv(path, ("check", "value", "tolerance", "pass"),
                  [(n, v, t, "pass" if p else "FAIL") for n, v, t, p in self.rows])

    def report(self, stream=sys.stdout):
        for n, v, t, p in self.rows:
            print(f"{'PASS' if p else 'FAIL'}  {n:<44s} {v:.3e}  (tol {t:.1e})", file=stream)


# -- subcommands -------------------------------------------------------------------

def cmd_simulate(cfg, out, rng):
    sp = build_space(cfg)
    co = build_coefficients(cfg, sp)
    init = initial_state(cfg, co, rng)
    tm = cfg["time"]
    traj = dyn.simulate(cfg["model"], init, tm["t_end"], tm["dt"], tm["output_every"], co,
                        tol=cfg["tolerances"]["membership"])
    write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj)
    write_json(os.path.join(out, "trajectory.json"), trajectory_to_json(traj))
    checks = Checks()
    e0 = max(abs(traj.step_energy[0]), 1e-300)
    checks.add("energy_identity_per_step", dyn.energy_identity_defect(traj) / e0,
               cfg["tolerances"]["energy"])
    if traj.kind == "L":
        d = dyn.conserved_quantities(traj)
        scale = max(st.ConfigurationPair(init.r, init.v).norm(), 1.0)
        checks.add("conserved_quantities_drift", d.max() / scale, cfg["tolerances"]["membership"])
    return checks


def projection_checks(p, co, eq, tol_alg, tol_res, checks, prefix=""):
    onto_E, onto_L0 = st.project_structural(p, eq)
    scale = max(p.norm(), 1e-300)
    e2, l2 = st.project_structural(onto_E, eq)
    checks.add(prefix + "idempotence", max(e2.distance(onto_E), l2.norm()) / scale, tol_alg)
    e3, l3 = st.project_structural(onto_L0, eq)
    checks.add(prefix + "idempotence_L0", max(l3.distance(onto_L0), e3.norm()) / scale, tol_alg)
    checks.add(prefix + "complementarity", (onto_E + onto_L0).distance(p) / scale, tol_alg)
    rep = st.membership(onto_L0, tol=tol_res)
    checks.add(prefix + "range_L0_membership", 0.0 if "L0" in rep.models else 1.0, 0.5)
    _, r = st.equilibrium_residual(onto_E, co)
    checks.add(prefix + "range_equilibrium_residual", r / scale, tol_res)
    xe, xl = st.project_explicit(p, co, eq)
    checks.add(prefix + "explicit_path_agreement",
               max(xe.distance(onto_E), xl.distance(onto_L0)) / scale, tol_alg)
    parts = st.project_atomic(p, eq)
    checks.add(prefix + "atomic_sum", parts.total().distance(p) / scale, tol_alg)
    return onto_E, onto_L0, parts


def cmd_project(cfg, out, rng):
    sp = build_space(cfg)
    co = build_coefficients(cfg, sp)
    eq = st.special_equilibrium(co)
    p = initial_pair(cfg, co, rng)
    tol = cfg["tolerances"]
    checks = Checks()
    onto_E, onto_L0, parts = projection_checks(p, co, eq, tol["projector"], tol["residual"],
                                               checks)
    rep = st.membership(p, tol["membership"])
    items = {"input_s": p.s, "input_z": p.z, "onto_E_s": onto_E.s, "onto_E_z": onto_E.z,
             "onto_L0_s": onto_L0.s, "onto_L0_z": onto_L0.z}
    for name in ("on_L0", "on_E1", "on_E2", "on_Ebullet"):
        q = getattr(parts, name)
        items[name + "_s"] = q.s
        items[name + "_z"] = q.z
    extra = {"ell": _cjson(st.ell(p, eq)), "models": sorted(rep.models)}
    write_json(os.path.join(out, "projection.json"), snapshot(sp, items, extra))
    return checks


def _cjson(x):
    x = complex(x)
    return x.real if x.imag == 0 else [x.real, x.imag]


def closed_form_s_star(sp):
    """``-x/3`` on a ball, ``-(x/3)(1 - a^3/r^3)`` on a shell."""
    a = sp.a
    return VectorField(sp, Potential.from_function(
        sp, lambda r, th, ph: -r**2 / 6.0 - a**3 / (3.0 * np.maximum(r, 1e-300)) + 0.0 * th))


def cmd_equilibrium(cfg, out, rng):
    sp = build_space(cfg)
    co = build_coefficients(cfg, sp)
    tol = cfg["tolerances"]
    try:
        eq = st.special_equilibrium(co)
    except NoSolutionError as e:
        raise ConfigError(str(e)) from e
    checks = Checks()
    one = SurfaceField.constant(sp, 1.0)
    checks.add("ell_of_special_equilibrium_minus_1", st.ell(eq.pair, eq) - 1.0, 1e-12)
    L1 = st.constraint_L(st.ConfigurationPair(VectorField.zeros(sp), one))
    checks.add("L(0,1)_minus_outer_area", L1 - sp.geometry.outer_area,
               1e-10 * sp.geometry.outer_area)
    _, r = st.equilibrium_residual(eq.pair, co)
    checks.add("equilibrium_residual", r, tol["residual"])
    extra = {"L_bullet": _cjson(eq.L_value), "kappa_zero": eq.kappa_zero,
             "ell_bullet": _cjson(st.ell(eq.pair, eq))}
    if not eq.kappa_zero and co.is_constant:
        k0 = co.constant_value("kappa")
        z_closed = SurfaceField.constant(sp, -co.B / k0)
        checks.add("z_star_closed_form", (eq.z_bullet - z_closed).norm() / z_closed.norm(),
                   tol["residual"])
        s_closed = closed_form_s_star(sp)
        checks.add("s_star_closed_form", (eq.s_bullet - s_closed).norm()
                   / max(s_closed.norm(), 1e-300), tol["residual"])
        extra["z_star_constant"] = -co.B / k0
    write_json(os.path.join(out, "equilibrium.json"),
               snapshot(sp, {"s_bullet": eq.s_bullet, "z_bullet": eq.z_bullet}, extra))
    return checks


TRANSFER = {
    ("L", "E"): tf.lagrangian_to_eulerian,
    ("L", "P"): tf.lagrangian_to_potential,
    ("E", "L"): tf.eulerian_to_lagrangian,
    ("P", "L"): tf.potential_to_lagrangian,
    ("P", "E"): tf.potential_to_eulerian,
    ("E", "P"): lambda t: tf.lagrangian_to_potential(tf.eulerian_to_lagrangian(t)),
}


def cmd_transfer(cfg, out, rng):
    src = cfg["transfer"]["input"]
    if src is None:
        raise ConfigError("transfer.input (a trajectory JSON file) is required")
    traj = trajectory_from_json(read_json(src))
    target = cfg["transfer"]["target"][0]
    key = (traj.kind, target)
    if key not in TRANSFER:
        raise ConfigError(f"no transfer map from {traj.model_tag} to {target}")
    try:
        res = TRANSFER[key](traj)
    except dyn.ModelError as e:
        raise ConfigError(str(e)) from e
    write_json(os.path.join(out, "trajectory.json"), trajectory_to_json(res))
    write_trajectory_csv(os.path.join(out, "trajectory.csv"), res)
    checks = Checks()
    tol = cfg["tolerances"]
    rows = []
    if res.kind in ("E", "P"):
        cr = tf.constraint_residuals(res)
        rows = [(t, c) for t, c in zip(res.times, cr)]
        if res.model_tag in ("Ec", "Pc"):
            checks.add("integral_constraint", np.max(np.abs(cr)), tol["membership"])
    write_csv(os.path.join(out, "residuals.csv"), ("t", "constraint_residual"), rows)
    if "relation_residual" in res.meta:
        checks.add("velocity_potential_relation", res.meta["relation_residual"],
                   tol["residual"])
    if res.kind == "L":
        bad = [s for s in res.states if "L0" not in st.membership(s.pair, tol["membership"]).models]
        checks.add("output_in_L0", len(bad), 0.5)
    return checks


def cmd_stability(cfg, out, rng):
    sp = build_space(cfg)
    co = build_coefficients(cfg, sp)
    if co.undamped:
        raise ConfigError("stability runs need delta > 0 somewhere on the boundary")
    init = initial_state(cfg, co, rng)
    tm = cfg["time"]
    T = cfg["stability"]["t_end"] or tm["t_end"]
    traj = dyn.simulate(cfg["model"], init, T, tm["dt"], tm["output_every"], co,
                        tol=cfg["tolerances"]["membership"])
    d = traj.diagnostics["dist_to_equilibrium"]
    rows = [(t, e, x, x / d[0] if d[0] > 0 else 0.0)
            for t, e, x in zip(traj.times, traj.diagnostics["energy"], d)]
    write_csv(os.path.join(out, "stability.csv"),
              ("t", "energy", "dist_to_equilibrium", "ratio"), rows)
    write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj)
    checks = Checks()
    e = traj.step_energy
    rise = max(np.max(np.diff(e)), 0.0) / max(abs(e[0]), 1e-300)
    checks.add("energy_nonincreasing", rise, 1e-12)
    checks.add("final_distance_ratio", d[-1] / d[0] if d[0] > 0 else 0.0, 1.0,
               passed=True)
    return checks


def cmd_verify(cfg, out, rng):
    from .verify import run_suite
    return run_suite(cfg, rng)


COMMANDS = {"simulate": cmd_simulate, "project": cmd_project, "equilibrium": cmd_equilibrium,
            "transfer": cmd_transfer, "verify": cmd_verify, "stability": cmd_stability}


def run(config, subcommand, out_dir=None, seed=None, quiet=False):
    """Validate ``config``, run ``subcommand`` and write its artifacts.

    Returns the exit status: 0 if every check passed, 1 if any failed and
    2 for configuration errors.
    """
    if subcommand not in COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    user = dict(config)
    if seed is not None:
        user["seed"] = seed
    if out_dir is not None:
        user["output_dir"] = out_dir
    cfg = resolve_config(user)
    out = cfg["output_dir"]
    os.makedirs(out, exist_ok=True)
    write_json(os.path.join(out, "resolved-config.json"), cfg)
    rng = np.random.default_rng(cfg["seed"])
    t0 = time.perf_counter()
    try:
        checks = COMMANDS[subcommand](cfg, out, rng)
    except (SpaceError, CoefficientError, CompatibilityError, dyn.ModelError) as e:
        raise ConfigError(str(e)) from e
    checks.write(os.path.join(out, "checks.csv"))
    if not quiet:
        checks.report()
        print(f"{subcommand}: {'ok' if checks.ok else 'FAILED'} "
              f"({time.perf_counter() - t0:.1f} s, seed {cfg['seed']}, output {out})")
    return 0 if checks.ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fluidmembrane",
                                     description="Fluid-membrane acoustic model runner")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="random seed (overrides seed)")
    args = parser.parse_args(argv)
    config = {}
    if args.config:
        try:
            config = read_json(args.config)
        except (OSError, json.JSONDecodeError) as e:
            print(f"error: cannot read config: {e}", file=sys.stderr)
            return 2
    try:
        return run(config, args.subcommand, args.out, args.seed)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
