"""Semi-discrete evolution, trajectories and energy diagnostics.

The engine evolves the potential model

    rho0 u_tt - B lap u = 0,   d_nu u = 0 on Gamma_0,   v_t = d_nu u on Gamma_1,
    mu v_tt - Div_G(sigma grad_G v) + delta v_t + kappa v + rho0 u_t = 0,

in Galerkin form ``M q'' + G q' + K q = 0`` with ``q = (u, v)``. Here ``M``
and ``K`` are symmetric, and ``G`` is the skew coupling plus the damping.
The time integrator is the implicit midpoint rule, so the discrete energy
``E = (p.M p + q.K q) / 2`` changes by exactly ``-dt pbar.D pbar`` per step.

Lagrangian and Eulerian trajectories are reconstructed from the engine.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

from .fields import Potential, VectorField, divergence, normal_trace, solve_div_curl
from .space import ScalarBulkField, SpaceError, SurfaceField
from .structure import (ConfigurationPair, constraint_L, membership,
                        project_structural, special_equilibrium)

LAGRANGIAN_TAGS = ("L0", "L1", "L2", "L3", "L4", "L")
EULERIAN_TAGS = ("E", "Ec")
POTENTIAL_TAGS = ("P", "Pc")
MODEL_TAGS = LAGRANGIAN_TAGS + EULERIAN_TAGS + POTENTIAL_TAGS


class ModelError(ValueError):
    """Initial data outside the phase space of the requested model."""


# -- states --------------------------------------------------------------------

@dataclass
class PotentialState:
    u: ScalarBulkField
    v: SurfaceField
    u_t: ScalarBulkField
    v_t: SurfaceField
    t: float = 0.0

    @classmethod
    def zeros(cls, space):
        return cls(ScalarBulkField.zeros(space), SurfaceField.zeros(space),
                   ScalarBulkField.zeros(space), SurfaceField.zeros(space))


@dataclass
class LagrangianState:
    r: VectorField
    v: SurfaceField
    r_t: VectorField
    v_t: SurfaceField
    t: float = 0.0

    @classmethod
    def zeros(cls, space):
        return cls(VectorField.zeros(space), SurfaceField.zeros(space),
                   VectorField.zeros(space), SurfaceField.zeros(space))

    @property
    def pair(self):
        return ConfigurationPair(self.r, self.v)


@dataclass
class EulerianState:
    p: ScalarBulkField
    vvec: VectorField
    v: SurfaceField
    v_t: SurfaceField
    t: float = 0.0

    @classmethod
    def zeros(cls, space):
        return cls(ScalarBulkField.zeros(space), VectorField.zeros(space),
                   SurfaceField.zeros(space), SurfaceField.zeros(space))


def _state_kind(state):
    if isinstance(state, LagrangianState):
        return "L"
    if isinstance(state, EulerianState):
        return "E"
    if isinstance(state, PotentialState):
        return "P"
    raise TypeError(f"not a model state: {type(state).__name__}")


def _space_of(state):
    return state.v.space


# -- potential <-> scalar conversions --------------------------------------------

def scalar_from_gradient(phi):
    """Scalar field ``u`` minimizing ``|grad u - grad phi|`` with zero mean.

    Exact (up to the mean) when ``phi`` already lies in the scalar space.
    """
    sp = phi.space
    n = sp.n_r

    def proj(l, c):
        K = sp.radial(l).grad_gram
        rhs = c @ K[:n, :].T
        if l == 0:
            sol = np.zeros((c.shape[0], n), dtype=rhs.dtype)
            sol[:, 1:] = np.linalg.solve(K[1:n, 1:n], rhs[:, 1:].T).T
            return sol
        return np.linalg.solve(K[:n, :n], rhs.T).T
    u = ScalarBulkField(sp, sp.per_degree(phi.coeffs, proj))
    return u - ScalarBulkField.constant(sp, u.mean())


def gradient_of(u):
    """The vector field ``grad u`` for a scalar field ``u``."""
    return VectorField(u.space, Potential.from_scalar(u))


# -- engine --------------------------------------------------------------------

class Engine:
    """Galerkin semi-discretization of the potential model.

    Unknowns are the scalar-space coefficients ``c`` of ``u`` (shape
    ``(n_modes, n_r)``) and the harmonic coefficients ``z`` of ``v``.
    """

    def __init__(self, coeffs):
        sp = coeffs.space
        self.coeffs = coeffs
        self.space = sp
        n = sp.n_r
        self.G = [sp.radial(l).gram for l in range(sp.l_max + 1)]
        self.K = [sp.radial(l).grad_gram[:n, :n] for l in range(sp.l_max + 1)]
        self.beta = [sp.radial(l).val_b[:n] for l in range(sp.l_max + 1)]
        self.m_u = coeffs.rho0**2 / coeffs.B
        self.k_u = coeffs.rho0
        self.cpl = coeffs.rho0 * sp.b**2
        self.Mz = coeffs.mass
        self.Az = coeffs.membrane.stiffness
        self.Dz = coeffs.damping
        self._dt = None

    # block applications
    def _bulk(self, mats, c, scale):
        sp = self.space
        return sp.per_degree(c, lambda l, x: scale * (x @ mats[l].T))

    def _trace(self, c):
        sp = self.space
        return sp.per_degree(c, lambda l, x: x @ self.beta[l])

    def energy(self, c, z, cd, zd):
        e = (np.vdot(cd, self._bulk(self.G, cd, self.m_u))
             + np.vdot(c, self._bulk(self.K, c, self.k_u))
             + np.vdot(zd, self.Mz @ zd) + np.vdot(z, self.Az @ z))
        return 0.5 * float(np.real(e))

    def dissipation_rate(self, zd):
        return float(np.real(np.vdot(zd, self.Dz @ zd)))

    def accelerations(self, c, z, cd, zd):
        """``(u_tt, v_tt)`` from the semi-discrete equations."""
        sp = self.space
        fc = -self._bulk(self.K, c, self.k_u)
        fc = fc + self.cpl * np.einsum("ik,i->ik", self._beta_full(), zd)
        cdd = sp.per_degree(fc, lambda l, x: np.linalg.solve(self.m_u * self.G[l], x.T).T)
        fz = -self.Az @ z - self.Dz @ zd - self.cpl * self._trace(cd)
        zdd = np.linalg.solve(self.Mz, fz)
        return cdd, zdd

    def _beta_full(self):
        sp = self.space
        out = np.zeros((sp.n_modes, sp.n_r))
        for l in range(sp.l_max + 1):
            out[sp.degree_slice(l)] = self.beta[l]
        return out

    def _prepare(self, dt):
        if self._dt == dt:
            return
        sp = self.space
        self._Hinv, self._h, gam = [], [], np.zeros(sp.n_modes)
        for l in range(sp.l_max + 1):
            H = 2.0 * self.m_u * self.G[l] + 0.5 * dt**2 * self.k_u * self.K[l]
            cf = cho_factor(H)
            Hinv = cho_solve(cf, np.eye(sp.n_r))
            h = Hinv @ self.beta[l]
            self._Hinv.append(Hinv)
            self._h.append(h)
            gam[sp.degree_slice(l)] = dt**2 * self.cpl**2 * (self.beta[l] @ h)
        S = 2.0 * self.Mz + dt * self.Dz + 0.5 * dt**2 * self.Az + np.diag(gam)
        self._schur = lu_factor(S)
        self._dt = dt

    def step(self, c, z, cd, zd, dt):
        """One implicit midpoint step.

        Returns the new state, the dissipated energy ``dt pbar.D pbar`` and
        the relative algebraic residual of the midpoint system.
        """
        self._prepare(dt)
        sp = self.space
        rc = 2.0 * self._bulk(self.G, cd, self.m_u) - dt * self._bulk(self.K, c, self.k_u)
        rz = 2.0 * (self.Mz @ zd) - dt * (self.Az @ z)
        tc = sp.per_degree(rc, lambda l, x: x @ self._Hinv[l].T)
        b_tc = self._trace(tc)
        zb = lu_solve(self._schur, rz - dt * self.cpl * b_tc)
        hf = np.zeros((sp.n_modes, sp.n_r))
        for l in range(sp.l_max + 1):
            hf[sp.degree_slice(l)] = self._h[l]
        cb = tc + dt * self.cpl * hf * zb[:, None]
        # residual of (2M + dt G + dt^2/2 K) pbar = rhs
        lc = (2.0 * self._bulk(self.G, cb, self.m_u)
              + 0.5 * dt**2 * self._bulk(self.K, cb, self.k_u)
              - dt * self.cpl * self._beta_full() * zb[:, None])
        lz = (2.0 * (self.Mz @ zb) + dt * (self.Dz @ zb) + 0.5 * dt**2 * (self.Az @ zb)
              + dt * self.cpl * self._trace(cb))
        res = np.sqrt(np.sum(np.abs(lc - rc) ** 2) + np.sum(np.abs(lz - rz) ** 2))
        scale = np.sqrt(np.sum(np.abs(rc) ** 2) + np.sum(np.abs(rz) ** 2))
        rel = float(res / scale) if scale > 0 else float(res)
        diss = dt * self.dissipation_rate(zb)
        return (c + dt * cb, z + dt * zb, 2.0 * cb - cd, 2.0 * zb - zd), diss, rel


def assemble_dense(coeffs):
    """Dense ``(M, G, K)`` of the semi-discrete system.

    Unknowns are ordered as the flattened bulk coefficients (mode-major)
    followed by the surface coefficients. Assembled entry by entry, apart
    from the block-wise path used by :class:`Engine`.
    """
    sp = coeffs.space
    n, nm = sp.n_r, sp.n_modes
    N = nm * n + nm
    M = np.zeros((N, N))
    K = np.zeros((N, N))
    G = np.zeros((N, N))
    rho0, B, b = coeffs.rho0, coeffs.B, sp.b
    for i in range(nm):
        l = int(sp.degrees[i])
        ops = sp.radial(l)
        blk = slice(i * n, (i + 1) * n)
        M[blk, blk] = rho0**2 / B * ops.gram
        K[blk, blk] = rho0 * ops.grad_gram[:n, :n]
        zi = nm * n + i
        G[blk, zi] = -rho0 * b**2 * ops.val_b[:n]
        G[zi, blk] = rho0 * b**2 * ops.val_b[:n]
    zs = slice(nm * n, N)
    M[zs, zs] = coeffs.mass
    K[zs, zs] = coeffs.membrane.stiffness
    G[zs, zs] = coeffs.damping
    return M, G, K


@dataclass
class DiscreteOperator:
    """Dense semi-discrete generator ``d/dt (q, p) = A (q, p)``.

    ``energy_matrix`` is ``diag(K, M)``; for ``delta == 0`` the generator is
    skew-adjoint for the (semi-definite) energy form.
    """

    M: np.ndarray
    G: np.ndarray
    K: np.ndarray
    A: np.ndarray
    energy_matrix: np.ndarray

    def skewness(self):
        """``|W A + A^T W| / |W A|`` with ``W`` the energy matrix."""
        WA = self.energy_matrix @ self.A
        return float(np.linalg.norm(WA + WA.T) / np.linalg.norm(WA))


def assemble_generator(coeffs, max_size=6000):
    """Dense first-order generator of the semi-discrete potential model."""
    sp = coeffs.space
    N = sp.n_modes * (sp.n_r + 1)
    if N > max_size:
        raise SpaceError(f"dense generator of size {2 * N} exceeds the guard")
    M, G, K = assemble_dense(coeffs)
    Minv = np.linalg.inv(M)
    A = np.block([[np.zeros((N, N)), np.eye(N)], [-Minv @ K, -Minv @ G]])
    W = np.block([[K, np.zeros((N, N))], [np.zeros((N, N)), M]])
    return DiscreteOperator(M, G, K, A, W)


def degree_generator(coeffs, l):
    """Dense generator for a single harmonic ``(l, 0)`` (constant coefficients)."""
    sp = coeffs.space
    if not coeffs.is_constant:
        raise ValueError("modes decouple only for constant coefficients")
    n = sp.n_r
    ops = sp.radial(l)
    b = sp.b
    i = l * l + l
    rho0, B = coeffs.rho0, coeffs.B
    N = n + 1
    M = np.zeros((N, N))
    K = np.zeros((N, N))
    G = np.zeros((N, N))
    M[:n, :n] = rho0**2 / B * ops.gram
    K[:n, :n] = rho0 * ops.grad_gram[:n, :n]
    G[:n, n] = -rho0 * b**2 * ops.val_b[:n]
    G[n, :n] = rho0 * b**2 * ops.val_b[:n]
    M[n, n] = coeffs.mass[i, i]
    K[n, n] = coeffs.membrane.stiffness[i, i]
    G[n, n] = coeffs.damping[i, i]
    Minv = np.linalg.inv(M)
    return np.block([[np.zeros((N, N)), np.eye(N)], [-Minv @ K, -Minv @ G]])


def generator_frequencies(coeffs, l):
    """Frequencies ``omega = -i lambda`` of the per-degree generator."""
    return -1j * np.linalg.eigvals(degree_generator(coeffs, l))


# -- energies --------------------------------------------------------------------

def _surface_energy(v, v_t, coeffs):
    a = coeffs.membrane.weak_form(v, v)
    m = np.vdot(v_t.coeffs, coeffs.mass @ v_t.coeffs)
    return 0.5 * float(np.real(a + m))


def energy(state, coeffs):
    """Energy of a Lagrangian, Eulerian or potential state.

    Lagrangian: ``(rho0 |r_t|^2 + B |div r|^2) / 2`` over the domain plus
    ``(sigma |grad_G v|^2 + mu |v_t|^2 + kappa |v|^2) / 2`` over the outer
    sphere. The other models use ``r_t = v_vec = -grad u`` and
    ``-B div r = p = rho0 u_t``.
    """
    kind = _state_kind(state)
    rho0, B = coeffs.rho0, coeffs.B
    if kind == "L":
        bulk = rho0 * state.r_t.norm() ** 2 + B * divergence(state.r).norm() ** 2
    elif kind == "E":
        bulk = rho0 * state.vvec.norm() ** 2 + state.p.norm() ** 2 / B
    else:
        bulk = rho0 * gradient_of(state.u).norm() ** 2 + rho0**2 / B * state.u_t.norm() ** 2
    return 0.5 * bulk + _surface_energy(state.v, state.v_t, coeffs)


# -- trajectories ----------------------------------------------------------------

DIAGNOSTIC_COLUMNS = ("t", "energy", "dissipation_cum", "L_value", "ell_value",
                      "constraint_residual", "dist_to_equilibrium", "weak_residual_last")


@dataclass
class Trajectory:
    """States at output times plus aligned diagnostics.

    ``step_energy`` and ``step_dissipation`` hold the engine energy after
    every step and the energy dissipated in every step.
    """

    model_tag: str
    coeffs: object
    times: np.ndarray
    states: list
    diagnostics: dict
    dt: float = 0.0
    output_every: int = 1
    step_energy: np.ndarray = None
    step_dissipation: np.ndarray = None
    equilibrium: object = None
    onto_E: object = None
    meta: dict = field(default_factory=dict)

    @property
    def kind(self):
        return self.model_tag[0]

    @property
    def space(self):
        return self.coeffs.space

    def __len__(self):
        return len(self.states)

    def with_states(self, states, model_tag=None):
        return replace(self, states=list(states), model_tag=model_tag or self.model_tag,
                       diagnostics=dict(self.diagnostics))

    def rows(self):
        d = self.diagnostics
        return [[d[k][i] for k in DIAGNOSTIC_COLUMNS] for i in range(len(self.times))]


def _engine_state_from(state, coeffs, eq):
    """Map initial data of any model to engine data.

    Returns ``(c, z, cd, zd, onto_E)``; ``onto_E`` is the equilibrium part of
    Lagrangian data and ``None`` otherwise.
    """
    kind = _state_kind(state)
    rho0, B = coeffs.rho0, coeffs.B
    if kind == "P":
        return (state.u.coeffs, state.v.coeffs, state.u_t.coeffs, state.v_t.coeffs, None)
    if kind == "E":
        if state.vvec.toroidal.norm() > 0:
            raise ModelError("Eulerian velocity must be curl free")
        u = -scalar_from_gradient(state.vvec.potential)
        u_t = state.p / rho0
        return (u.coeffs, state.v.coeffs, u_t.coeffs, state.v_t.coeffs, None)
    if state.r_t.toroidal.norm() > 0:
        raise ModelError("curl r_t = 0 is required")
    onto_E, onto_L0 = project_structural(state.pair, eq)
    u_t = divergence(onto_L0.s) * (-B / rho0)
    u = -scalar_from_gradient(state.r_t.potential)
    return (u.coeffs, onto_L0.z.coeffs, u_t.coeffs, state.v_t.coeffs, onto_E)


def _check_phase_space(tag, state, coeffs, tol):
    kind = _state_kind(state)
    if kind == "L":
        rep = membership(state.pair, tol)
        if tag not in rep.models:
            raise ModelError(f"initial configuration is not in the phase space of {tag} "
                             f"(admissible: {sorted(rep.models)})")
    elif tag == "Ec":
        res = state.p.integrate() - coeffs.B * state.v.integrate()
        scale = state.p.norm() * np.sqrt(coeffs.space.geometry.volume) + coeffs.B * state.v.norm() * np.sqrt(coeffs.space.geometry.outer_area)
        if abs(res) > tol * max(scale, 1e-300):
            raise ModelError(f"constraint int p = B int v violated by {abs(res):.3e}")
    elif tag == "Pc":
        res = coeffs.rho0 * state.u_t.integrate() - coeffs.B * state.v.integrate()
        scale = coeffs.rho0 * state.u_t.norm() * np.sqrt(coeffs.space.geometry.volume) + coeffs.B * state.v.norm() * np.sqrt(coeffs.space.geometry.outer_area)
        if abs(res) > tol * max(scale, 1e-300):
            raise ModelError(f"constraint rho0 int u_t = B int v violated by {abs(res):.3e}")


def reconstruct(kind, c, z, cd, zd, t, coeffs, onto_E=None):
    """Model state from engine coefficients."""
    sp = coeffs.space
    rho0, B = coeffs.rho0, coeffs.B
    u = ScalarBulkField(sp, c)
    u_t = ScalarBulkField(sp, cd)
    v = SurfaceField(sp, z)
    v_t = SurfaceField(sp, zd)
    if kind == "P":
        return PotentialState(u, v, u_t, v_t, t)
    if kind == "E":
        return EulerianState(u_t * rho0, -gradient_of(u), v, v_t, t)
    # Lagrangian: r0 solves div r0 = -(rho0/B) u_t, curl free, r0.nu = 0, -v
    r0 = solve_div_curl(u_t * (-rho0 / B), None, v)
    r_t = -gradient_of(u)
    if onto_E is None:
        return LagrangianState(r0, v, r_t, v_t, t)
    return LagrangianState(r0 + onto_E.s, v + onto_E.z, r_t, v_t, t)


def _diagnostics(tag, state, coeffs, eq, onto_E):
    kind = tag[0]
    rho0, B = coeffs.rho0, coeffs.B
    if kind == "L":
        Lv = constraint_L(state.pair)
        ell_v = Lv / eq.L_value
        cres = abs(Lv) if tag in ("L0", "L1", "L2", "L3") else 0.0
        d = ConfigurationPair(state.r, state.v)
        if onto_E is not None:
            d = d - onto_E
        dist = np.sqrt(d.norm() ** 2 + state.r_t.norm() ** 2 + state.v_t.norm() ** 2)
    elif kind == "E":
        Lv = state.p.integrate() - B * state.v.integrate()
        ell_v = Lv / (B * eq.L_value * -1.0)
        cres = abs(Lv)
        dist = np.sqrt(state.vvec.norm() ** 2 + (state.p.norm() / rho0) ** 2
                       + state.v_t.norm() ** 2)
    else:
        Lv = rho0 * state.u_t.integrate() - B * state.v.integrate()
        ell_v = Lv / (B * eq.L_value * -1.0)
        cres = abs(Lv)
        dist = np.sqrt(gradient_of(state.u).norm() ** 2 + state.u_t.norm() ** 2
                       + state.v_t.norm() ** 2)
    return Lv, ell_v, cres, float(dist)


def simulate(model_tag, initial, T, dt=None, output_every=10, coeffs=None, tol=1e-9,
             check=True):
    """Evolve initial data of one of the models.

    Parameters
    ----------
    model_tag : str
        One of ``L0 .. L4, L`` (Lagrangian), ``E, Ec`` (Eulerian) or
        ``P, Pc`` (potential).
    initial : LagrangianState, EulerianState or PotentialState
        Must match the family of ``model_tag``.
    T : float
        Final time.
    dt : float, optional
        Time step, default ``1e-3 b / sqrt(B / rho0)``.
    output_every : int
        Steps between stored states.
    coeffs : Coefficients
    """
    if model_tag not in MODEL_TAGS:
        raise ValueError(f"unknown model tag {model_tag!r}")
    if coeffs is None:
        raise ValueError("coefficients are required")
    kind = _state_kind(initial)
    if kind != model_tag[0]:
        raise ModelError(f"{type(initial).__name__} does not match model {model_tag}")
    if not _space_of(initial).same(coeffs.space):
        raise SpaceError("initial data and coefficients live on different spaces")
    sp = coeffs.space
    if dt is None:
        dt = 1e-3 * sp.b / np.sqrt(coeffs.B / coeffs.rho0)
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    output_every = int(output_every)
    if output_every < 1:
        raise ValueError("output_every must be >= 1")
    if check:
        _check_phase_space(model_tag, initial, coeffs, tol)
    eq = special_equilibrium(coeffs)
    c, z, cd, zd, onto_E = _engine_state_from(initial, coeffs, eq)
    dtype = np.result_type(c, z, cd, zd, float)
    c, z, cd, zd = (np.array(a, dtype=dtype) for a in (c, z, cd, zd))
    engine = Engine(coeffs)
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, dt):
        raise ValueError(f"T = {T} is not a multiple of dt = {dt}")
    t0 = float(initial.t)
    e_steps = np.empty(n_steps + 1)
    d_steps = np.zeros(n_steps)
    e_steps[0] = engine.energy(c, z, cd, zd)
    states, times, res_last = [], [], []
    cum, cum_out = 0.0, []

    def emit(k, rel):
        t = t0 + k * dt
        states.append(reconstruct(kind, c, z, cd, zd, t, coeffs, onto_E))
        times.append(t)
        cum_out.append(cum)
        res_last.append(rel)

    emit(0, 0.0)
    for k in range(1, n_steps + 1):
        (c, z, cd, zd), diss, rel = engine.step(c, z, cd, zd, dt)
        d_steps[k - 1] = diss
        cum += diss
        e_steps[k] = engine.energy(c, z, cd, zd)
        if k % output_every == 0 or k == n_steps:
            emit(k, rel)
    e_const = 0.0
    if onto_E is not None:
        e_const = energy(LagrangianState(onto_E.s, onto_E.z, VectorField.zeros(sp),
                                         SurfaceField.zeros(sp)), coeffs)
    diag = {k: [] for k in DIAGNOSTIC_COLUMNS}
    for s, t, cu, rl in zip(states, times, cum_out, res_last):
        Lv, ell_v, cres, dist = _diagnostics(model_tag, s, coeffs, eq, onto_E)
        diag["t"].append(t)
        diag["energy"].append(energy(s, coeffs))
        diag["dissipation_cum"].append(cu)
        diag["L_value"].append(Lv)
        diag["ell_value"].append(ell_v)
        diag["constraint_residual"].append(cres)
        diag["dist_to_equilibrium"].append(dist)
        diag["weak_residual_last"].append(rl)
    diag = {k: np.array(v) for k, v in diag.items()}
    return Trajectory(model_tag, coeffs, np.array(times), states, diag, dt, output_every,
                      e_steps + e_const, d_steps, eq, onto_E)


def step_midpoint(state, dt, coeffs):
    """Advance a potential state by one implicit midpoint step."""
    eng = Engine(coeffs)
    (c, z, cd, zd), _, _ = eng.step(state.u.coeffs, state.v.coeffs, state.u_t.coeffs,
                                    state.v_t.coeffs, dt)
    sp = coeffs.space
    return PotentialState(ScalarBulkField(sp, c), SurfaceField(sp, z),
                          ScalarBulkField(sp, cd), SurfaceField(sp, zd), state.t + dt)


def engine_energy(state, coeffs):
    """Engine energy of a potential state."""
    return Engine(coeffs).energy(state.u.coeffs, state.v.coeffs, state.u_t.coeffs,
                                 state.v_t.coeffs)


# -- energy bookkeeping --------------------------------------------------------------

def dissipation_integral(traj, s, t):
    """Energy dissipated between times ``s <= t`` (stepper quadrature)."""
    t0 = traj.times[0]
    n_total = len(traj.step_dissipation)
    i = (s - t0) / traj.dt
    j = (t - t0) / traj.dt
    if not (-1e-9 <= i <= j + 1e-9 and j <= n_total + 1e-9):
        raise ValueError(f"times [{s}, {t}] outside the trajectory span")
    ii, jj = int(round(i)), int(round(j))
    if abs(i - ii) > 1e-6 or abs(j - jj) > 1e-6:
        raise ValueError("times must be step times")
    return float(np.sum(traj.step_dissipation[ii:jj]))


def energy_identity_defect(traj):
    """``max_n |E_{n+1} - E_n + D_n|`` over all steps."""
    e = traj.step_energy
    if len(e) < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(e) + traj.step_dissipation)))


@dataclass
class DriftReport:
    toroidal: float
    trace_gamma0: float
    trace_gamma1: float
    L: float

    def max(self):
        return max(self.toroidal, self.trace_gamma0, self.trace_gamma1, self.L)


def conserved_quantities(traj):
    """Drifts of the quantities conserved along Lagrangian trajectories.

    Maximum over output times of the change in the toroidal part of ``r``,
    in ``r . nu`` on the inner sphere, in ``r . nu + v`` on the outer
    sphere, and in ``L(r, v)``.
    """
    if traj.kind != "L":
        raise ValueError("conserved quantities are defined for Lagrangian trajectories")
    s0 = traj.states[0]
    sp = traj.space
    t1_0 = normal_trace(s0.r, "outer") + s0.v
    t0_0 = None if sp.is_ball else normal_trace(s0.r, "inner")
    L0 = constraint_L(s0.pair)
    d = [0.0, 0.0, 0.0, 0.0]
    for s in traj.states:
        d[0] = max(d[0], (s.r.toroidal_part - s0.r.toroidal_part).norm())
        if t0_0 is not None:
            d[1] = max(d[1], (normal_trace(s.r, "inner") - t0_0).norm())
        d[2] = max(d[2], (normal_trace(s.r, "outer") + s.v - t1_0).norm())
        d[3] = max(d[3], abs(constraint_L(s.pair) - L0))
    return DriftReport(*d)
