"""JSON snapshots and CSV output for states and trajectories."""

import csv
import json

import numpy as np

from .coefficients import Coefficients
from .dynamics import (DIAGNOSTIC_COLUMNS, EulerianState, LagrangianState, PotentialState,
                       Trajectory, special_equilibrium)
from .fields import Potential, ToroidalField, VectorField
from .space import DiscreteSpace, Geometry, ScalarBulkField, SurfaceField

STATE_FIELDS = {
    "L": ("r", "v", "r_t", "v_t"),
    "E": ("p", "vvec", "v", "v_t"),
    "P": ("u", "v", "u_t", "v_t"),
}
STATE_TYPES = {"L": LagrangianState, "E": EulerianState, "P": PotentialState}


def _array(a):
    a = np.asarray(a)
    out = {"shape": list(a.shape), "data": [float(x) for x in np.real(a).ravel()]}
    if np.iscomplexobj(a) and np.any(np.imag(a) != 0):
        out["imag"] = [float(x) for x in np.imag(a).ravel()]
    return out


def _from_array(d):
    a = np.asarray(d["data"], dtype=float)
    if "imag" in d:
        a = a + 1j * np.asarray(d["imag"], dtype=float)
    return a.reshape(d["shape"])


def encode_field(f):
    if isinstance(f, VectorField):
        return {"type": "vector", "potential": _array(f.potential.coeffs),
                "toroidal": _array(f.toroidal.coeffs)}
    if isinstance(f, ScalarBulkField):
        return {"type": "scalar", **_array(f.coeffs)}
    if isinstance(f, SurfaceField):
        return {"type": "surface", "radius": f.radius, **_array(f.coeffs)}
    raise TypeError(f"cannot encode {type(f).__name__}")


def decode_field(d, space):
    kind = d["type"]
    if kind == "vector":
        return VectorField(space, Potential(space, _from_array(d["potential"])),
                           ToroidalField(space, _from_array(d["toroidal"])))
    if kind == "scalar":
        return ScalarBulkField(space, _from_array(d))
    if kind == "surface":
        return SurfaceField(space, _from_array(d), d.get("radius"))
    raise ValueError(f"unknown field type {kind!r}")


def space_header(space):
    geo = space.geometry
    return {"geometry": {"a": geo.a, "b": geo.b},
            "truncation": {"l_max": space.l_max, "n_r": space.n_r},
            "index_table": [[int(l), int(m)] for l, m in zip(space.degrees, space.orders)]}


def space_from_header(h):
    geo = Geometry(float(h["geometry"]["a"]), float(h["geometry"]["b"]))
    return DiscreteSpace(geo, int(h["truncation"]["l_max"]), int(h["truncation"]["n_r"]))


def encode_state(state):
    kind = {LagrangianState: "L", EulerianState: "E", PotentialState: "P"}[type(state)]
    return {"kind": kind, "t": float(state.t),
            "fields": {n: encode_field(getattr(state, n)) for n in STATE_FIELDS[kind]}}


def decode_state(d, space):
    kind = d["kind"]
    args = [decode_field(d["fields"][n], space) for n in STATE_FIELDS[kind]]
    return STATE_TYPES[kind](*args, float(d["t"]))


def snapshot(space, items, extra=None):
    """JSON-ready dictionary holding named fields or states."""
    out = space_header(space)
    enc = {}
    for name, obj in items.items():
        if isinstance(obj, (LagrangianState, EulerianState, PotentialState)):
            enc[name] = encode_state(obj)
        else:
            enc[name] = encode_field(obj)
    out["fields"] = enc
    if extra:
        out.update(extra)
    return out


def trajectory_to_json(traj):
    out = space_header(traj.space)
    out.update({
        "model": traj.model_tag,
        "coefficients": traj.coeffs.as_dict(),
        "dt": traj.dt,
        "output_every": traj.output_every,
        "diagnostics": {k: _array(v) for k, v in traj.diagnostics.items()},
        "states": [encode_state(s) for s in traj.states],
    })
    return out


def trajectory_from_json(d):
    sp = space_from_header(d)
    co = Coefficients(sp, **d["coefficients"])
    states = [decode_state(s, sp) for s in d["states"]]
    diag = {k: _from_array(v) for k, v in d["diagnostics"].items()}
    return Trajectory(d["model"], co, np.array([s.t for s in states]), states, diag,
                      d["dt"], d["output_every"], equilibrium=special_equilibrium(co))


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def fmt(x):
    """17 significant digits; complex values keep only the real part if real."""
    if isinstance(x, complex) or np.iscomplexobj(x):
        x = complex(x)
        if x.imag == 0:
            x = x.real
        else:
            return f"{x.real:.17g}{x.imag:+.17g}j"
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, (float, complex, np.floating,
                                                 np.complexfloating, int, np.integer))
                        and not isinstance(x, bool) else x for x in row])


def write_trajectory_csv(path, traj):
    write_csv(path, DIAGNOSTIC_COLUMNS, traj.rows())
