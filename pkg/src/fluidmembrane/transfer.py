"""Maps between the Lagrangian, Eulerian and potential descriptions.

All maps act on trajectories state by state. Equality up to stationary
solutions is tested with ``stationary_difference``.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import (EulerianState, LagrangianState, ModelError, PotentialState,
                       _diagnostics, energy, gradient_of, scalar_from_gradient)
from .fields import CompatibilityError, VectorField, divergence, solve_div_curl
from .space import ScalarBulkField, SurfaceField
from .structure import ConfigurationPair, constraint_L, equilibrium_residual

CONSTRAINED_L = ("L0", "L1", "L2", "L3")


def _rebuild(traj, states, tag, onto_E=None, meta=None):
    """Trajectory with new states and recomputed diagnostics."""
    co = traj.coeffs
    eq = traj.equilibrium
    diag = {k: [] for k in traj.diagnostics}
    for i, s in enumerate(states):
        Lv, ell_v, cres, dist = _diagnostics(tag, s, co, eq, onto_E)
        diag["t"].append(s.t)
        diag["energy"].append(energy(s, co))
        diag["dissipation_cum"].append(traj.diagnostics["dissipation_cum"][i])
        diag["L_value"].append(Lv)
        diag["ell_value"].append(ell_v)
        diag["constraint_residual"].append(cres)
        diag["dist_to_equilibrium"].append(dist)
        diag["weak_residual_last"].append(traj.diagnostics["weak_residual_last"][i])
    out = traj.with_states(states, tag)
    out.diagnostics = {k: np.array(v) for k, v in diag.items()}
    out.onto_E = onto_E
    out.meta = dict(traj.meta, **(meta or {}))
    return out


def _require(traj, kind):
    if traj.kind != kind:
        names = {"L": "Lagrangian", "E": "Eulerian", "P": "potential"}
        raise ModelError(f"expected a {names[kind]} trajectory, got {traj.model_tag}")


def _check_constraint(res, scale, tol, what):
    if abs(res) > tol * max(scale, 1e-300):
        raise ModelError(f"{what} violated by {abs(res):.3e}; no L0 preimage exists")


# -- Lagrangian -> Eulerian / potential ------------------------------------------------

def lagrangian_to_eulerian(traj):
    """``p = -B div r``, velocity ``r_t``, boundary deformation unchanged."""
    _require(traj, "L")
    B = traj.coeffs.B
    states = [EulerianState(divergence(s.r) * (-B), s.r_t.copy(), s.v, s.v_t, s.t)
              for s in traj.states]
    tag = "Ec" if traj.model_tag in CONSTRAINED_L else "E"
    return _rebuild(traj, states, tag)


def lagrangian_to_potential(traj):
    """``u(t) = u(0) - (B/rho0) int_0^t div r`` with ``grad u(0) = -r_t(0)``.

    The time integral is the trapezoidal rule on the output grid, which
    coincides with the midpoint stepper when every step is stored. The
    residual of ``r_t = -grad u`` is recorded as ``meta["relation_residual"]``.
    """
    _require(traj, "L")
    co = traj.coeffs
    rho0, B = co.rho0, co.B
    s0 = traj.states[0]
    u = -scalar_from_gradient(s0.r_t.potential)
    divs = [divergence(s.r) for s in traj.states]
    states = []
    rel = 0.0
    for i, s in enumerate(traj.states):
        if i > 0:
            h = s.t - traj.states[i - 1].t
            u = u - (divs[i - 1] + divs[i]) * (0.5 * h * B / rho0)
        st = PotentialState(u, s.v, divs[i] * (-B / rho0), s.v_t, s.t)
        rel = max(rel, (s.r_t + gradient_of(u)).norm())
        states.append(st)
    scale = max(s.r_t.norm() for s in traj.states)
    if scale > 0:
        rel /= scale
    tag = "Pc" if traj.model_tag in CONSTRAINED_L else "P"
    return _rebuild(traj, states, tag, meta={"relation_residual": rel})


# -- inverses onto L0 ----------------------------------------------------------------

def eulerian_to_lagrangian(traj, tol=1e-9):
    """Per state solve ``-B div r = p``, curl free, ``r . nu = 0, -v``.

    Raises
    ------
    ModelError
        If ``int p = B int v`` fails, since no L0 preimage exists.
    """
    _require(traj, "E")
    co = traj.coeffs
    B = co.B
    geo = co.space.geometry
    states = []
    for s in traj.states:
        res = s.p.integrate() - B * s.v.integrate()
        scale = s.p.norm() * np.sqrt(geo.volume) + B * s.v.norm() * np.sqrt(geo.outer_area)
        _check_constraint(res, scale, tol, "int p = B int v")
        try:
            r = solve_div_curl(s.p * (-1.0 / B), None, s.v, check=False)
        except CompatibilityError as e:
            raise ModelError(str(e)) from e
        states.append(LagrangianState(r, s.v, s.vvec.copy(), s.v_t, s.t))
    return _rebuild(traj, states, "L0")


def potential_to_lagrangian(traj, tol=1e-9):
    """Per state solve ``-B div r = rho0 u_t``, curl free, ``r . nu = 0, -v``.

    The velocity is ``r_t = -grad u``.

    Raises
    ------
    ModelError
        If ``rho0 int u_t = B int v`` fails.
    """
    _require(traj, "P")
    co = traj.coeffs
    rho0, B = co.rho0, co.B
    geo = co.space.geometry
    states = []
    for s in traj.states:
        res = rho0 * s.u_t.integrate() - B * s.v.integrate()
        scale = (rho0 * s.u_t.norm() * np.sqrt(geo.volume)
                 + B * s.v.norm() * np.sqrt(geo.outer_area))
        _check_constraint(res, scale, tol, "rho0 int u_t = B int v")
        r = solve_div_curl(s.u_t * (-rho0 / B), None, s.v, check=False)
        states.append(LagrangianState(r, s.v, -gradient_of(s.u), s.v_t, s.t))
    return _rebuild(traj, states, "L0")


def potential_to_eulerian(traj):
    """``p = rho0 u_t``, velocity ``-grad u``."""
    _require(traj, "P")
    rho0 = traj.coeffs.rho0
    states = [EulerianState(s.u_t * rho0, -gradient_of(s.u), s.v, s.v_t, s.t)
              for s in traj.states]
    return _rebuild(traj, states, "Ec" if traj.model_tag == "Pc" else "E")


# -- constraints and splittings ------------------------------------------------------

def eulerian_L(state, B):
    """``int p - B int v``."""
    return state.p.integrate() - B * state.v.integrate()


def constraint_residuals(traj):
    """Per-state residual of the integral constraint of the Eulerian or potential model."""
    co = traj.coeffs
    if traj.kind == "E":
        return np.array([eulerian_L(s, co.B) for s in traj.states])
    if traj.kind == "P":
        return np.array([co.rho0 * s.u_t.integrate() - co.B * s.v.integrate()
                         for s in traj.states])
    raise ModelError("constraint residuals are defined for Eulerian and potential trajectories")


def eulerian_equilibrium(eq, B):
    """The Eulerian special equilibrium ``(-B div s_b, 0, z_b)``."""
    sp = eq.z_bullet.space
    return EulerianState(divergence(eq.s_bullet) * (-B), VectorField.zeros(sp), eq.z_bullet,
                         SurfaceField.zeros(sp))


def split_eulerian(traj):
    """Split an Eulerian trajectory into a constrained part and a stationary multiple.

    Returns ``(constrained, alpha)`` where the input equals the constrained
    trajectory plus ``alpha`` times the Eulerian special equilibrium.
    """
    _require(traj, "E")
    B = traj.coeffs.B
    e = eulerian_equilibrium(traj.equilibrium, B)
    Le = eulerian_L(e, B)
    alpha = eulerian_L(traj.states[0], B) / Le
    states = [EulerianState(s.p - e.p * alpha, s.vvec, s.v - e.v * alpha, s.v_t, s.t)
              for s in traj.states]
    return _rebuild(traj, states, "Ec"), alpha


# -- equivalence mod stationary ------------------------------------------------------

def state_difference(a, b):
    if isinstance(a, LagrangianState):
        return LagrangianState(a.r - b.r, a.v - b.v, a.r_t - b.r_t, a.v_t - b.v_t, a.t)
    if isinstance(a, EulerianState):
        return EulerianState(a.p - b.p, a.vvec - b.vvec, a.v - b.v, a.v_t - b.v_t, a.t)
    return PotentialState(a.u - b.u, a.v - b.v, a.u_t - b.u_t, a.v_t - b.v_t, a.t)


def state_norm(s):
    """Energy-space size of a state; potentials are measured modulo constants."""
    if isinstance(s, LagrangianState):
        parts = [ConfigurationPair(s.r, s.v).norm(), s.r_t.norm(), s.v_t.norm()]
    elif isinstance(s, EulerianState):
        parts = [s.p.norm(), s.vvec.norm(), s.v.h1_norm(), s.v_t.norm()]
    else:
        parts = [gradient_of(s.u).norm(), s.u_t.norm(), s.v.h1_norm(), s.v_t.norm()]
    return float(np.sqrt(sum(x**2 for x in parts)))


def stationary_residual(s, coeffs):
    """Distance of a state from being a time-independent solution."""
    sp = coeffs.space
    if isinstance(s, LagrangianState):
        _, r = equilibrium_residual(ConfigurationPair(s.r, s.v), coeffs)
        return r + s.r_t.norm() + s.v_t.norm()
    if isinstance(s, EulerianState):
        p0 = s.p.mean()
        bulk = (s.p - ScalarBulkField.constant(sp, p0)).norm()
        pressure = s.p
    else:
        p0 = coeffs.rho0 * s.u_t.mean()
        bulk = gradient_of(s.u).norm() + (s.u_t - ScalarBulkField.constant(
            sp, s.u_t.mean())).norm()
        pressure = None
    r = coeffs.membrane.matrix @ s.v.coeffs
    r = r.astype(np.result_type(r, p0))
    r[0] += p0 * np.sqrt(4.0 * np.pi)
    extra = s.vvec.norm() if pressure is not None else 0.0
    return float(bulk + sp.b * np.linalg.norm(r) + s.v_t.norm() + extra)


@dataclass
class StationaryReport:
    time_variation: float
    stationary_residual: float
    difference_size: float

    def equivalent(self, tol=1e-8):
        scale = max(self.difference_size, 1.0)
        return self.time_variation <= tol * scale and self.stationary_residual <= tol * scale


def stationary_difference(traj_a, traj_b):
    """Test whether two trajectories differ by a stationary solution.

    Reports ``max_t |d(t) - d(0)|`` and the stationarity residual of
    ``d(0)`` where ``d = a - b``.
    """
    if traj_a.kind != traj_b.kind:
        raise ModelError("trajectories belong to different model families")
    ta, tb = np.asarray(traj_a.times), np.asarray(traj_b.times)
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=0, atol=1e-12 * max(1.0, ta[-1])):
        raise ValueError("time grids differ")
    d = [state_difference(a, b) for a, b in zip(traj_a.states, traj_b.states)]
    var = max(state_norm(state_difference(x, d[0])) for x in d)
    res = stationary_residual(d[0], traj_a.coeffs)
    size = max(state_norm(x) for x in d)
    return StationaryReport(float(var), float(res), float(size))


def scaling_defect(traj):
    """Max over states of ``|L_Eul(Psi(state)) + B L(state)|`` for a Lagrangian run."""
    _require(traj, "L")
    B = traj.coeffs.B
    e = lagrangian_to_eulerian(traj)
    return max(abs(eulerian_L(se, B) + B * constraint_L(sl.pair))
               for se, sl in zip(e.states, traj.states))
