"""Space-time weak-form residuals of stored trajectories.

Test functions are ``chi(t) * Phi(x)`` with a smooth bump ``chi`` and
band-limited spatial fields. All time derivatives are moved onto ``chi``,
so only the stored states enter, and time integrals use the trapezoidal
rule on the output grid. Each identity is reported as
``|sum of terms| / sum of |terms|``, where every term is the time
integral of the absolute integrand.
"""

from dataclasses import dataclass

import numpy as np

from .fields import (Potential, VectorField, divergence, normal_trace, random_scalar,
                     random_toroidal)
from .space import ScalarBulkField


def bump(t, center, width):
    """``chi, chi', chi''`` for ``chi = exp(1 - 1/(1 - s^2))``, ``s = (t - c)/w``."""
    s = (np.asarray(t, dtype=float) - center) / width
    inside = np.abs(s) < 1.0
    chi = np.zeros_like(s)
    d1 = np.zeros_like(s)
    d2 = np.zeros_like(s)
    si = s[inside]
    q = 1.0 - si**2
    g1 = -2.0 * si / q**2
    g2 = -2.0 * (1.0 + 3.0 * si**2) / q**3
    c = np.exp(1.0 - 1.0 / q)
    chi[inside] = c
    d1[inside] = c * g1 / width
    d2[inside] = c * (g1**2 + g2) / width**2
    return chi, d1, d2


def _trapz_weights(t):
    w = np.zeros_like(t)
    h = np.diff(t)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _test_scalar(space, rng, inner_neumann):
    """Random scalar-space field; optionally with zero ``d/dr`` at ``r = a``."""
    w = random_scalar(space, rng)
    if inner_neumann and not space.is_ball:
        c = w.coeffs.copy()
        n = space.n_r
        for l in range(space.l_max + 1):
            da = space.radial(l).dr_a[:n]
            sl = space.degree_slice(l)
            c[sl] -= np.outer(c[sl] @ da / da[-1], np.eye(n)[-1])
        w = ScalarBulkField(space, c)
    return w


@dataclass
class WeakResidualReport:
    residuals: dict

    def max(self):
        return max(self.residuals.values()) if self.residuals else 0.0


class _Pairings:
    """Bilinear pairings against a fixed test, as flat dual arrays."""

    def __init__(self, space):
        self.space = space

    def grad_dual(self, phi_coeffs):
        sp = self.space
        return sp.per_degree(phi_coeffs, lambda l, c: c @ sp.radial(l).grad_gram.T)

    def gram_dual(self, w_coeffs):
        sp = self.space
        return sp.per_degree(w_coeffs, lambda l, c: c @ sp.radial(l).gram.T)

    def tor_dual(self, t_coeffs):
        sp = self.space
        return sp.per_degree(t_coeffs, lambda l, c: l * (l + 1) * (c @ sp.radial(l).gram.T))


def _vector_dual(P, Phi):
    return P.grad_dual(Phi.potential.coeffs), P.tor_dual(Phi.toroidal.coeffs)


def _vdot(a, b):
    return np.sum(a * b)


def _residual(terms, wq, floor=0.0):
    """``terms``: list of integrand arrays over time."""
    vals = [np.sum(wq * x) for x in terms]
    scale = max(sum(np.sum(wq * np.abs(x)) for x in terms), floor)
    total = abs(sum(vals))
    if scale == 0:
        return 0.0
    return float(total / scale)


def weak_residual(traj, n_tests=20, seed=0):
    """Weak-form residuals of a trajectory against random test functions.

    Lagrangian trajectories are tested on the curl, trace and momentum
    identities; Eulerian ones on the mass and momentum identities;
    potential ones on the bulk and membrane identities.
    """
    rng = np.random.default_rng(seed)
    sp = traj.space
    co = traj.coeffs
    t = np.asarray(traj.times, dtype=float)
    if len(t) < 3:
        raise ValueError("need at least three output times")
    wq = _trapz_weights(t)
    span = t[-1] - t[0]
    rho0, B, b = co.rho0, co.B, sp.b
    P = _Pairings(sp)
    A = co.membrane.stiffness
    Mmu = co.mass
    Dd = co.damping
    kind = traj.kind
    out = {}

    # per-state features
    feats = [_features(kind, s) for s in traj.states]
    if kind == "L":
        size = max(np.sqrt(f["pot"].ravel() @ f["pot"].ravel() + f["v"] @ f["v"])
                   for f in feats)

    def series(fn):
        return np.array([fn(f) for f in feats])

    for k in range(n_tests):
        w_frac = rng.uniform(0.25, 0.45)
        width = w_frac * span
        center = t[0] + rng.uniform(width, span - width)
        chi, d1, d2 = bump(t, center, width)
        if kind == "L":
            w = _test_scalar(sp, rng, True)
            T = random_toroidal(sp, rng)
            Phi = VectorField(sp, Potential.from_scalar(w), T)
            psi = -normal_trace(Phi, "outer")
            gd, td = _vector_dual(P, Phi)
            divd = P.gram_dual(divergence(Phi).coeffs)
            # curl and the two trace identities
            tor = series(lambda f: _vdot(f["tor"], td))
            _acc(out, "curl", _residual([tor * d1], wq))
            # the trace and its datum are separate terms; both can vanish
            # identically, so the size of the configuration sets a floor
            psi1 = rng.standard_normal(sp.n_modes) / (1.0 + sp.degrees) ** 1.5
            tr1 = series(lambda f: _vdot(f["tr1"], psi1))
            v1 = series(lambda f: _vdot(f["v"], psi1))
            floor = np.sum(wq * np.abs(d1)) * np.linalg.norm(psi1) * size
            _acc(out, "trace_outer", _residual([tr1 * d1, v1 * d1], wq, floor))
            if not sp.is_ball:
                psi0 = rng.standard_normal(sp.n_modes) / (1.0 + sp.degrees) ** 1.5
                tr0 = series(lambda f: _vdot(f["tr0"], psi0))
                _acc(out, "trace_inner", _residual([tr0 * d1], wq, floor))
            # momentum identity with the membrane equation folded in
            rphi = series(lambda f: _vdot(f["pot"], gd) + _vdot(f["tor"], td))
            dd = series(lambda f: _vdot(f["div"], divd))
            vm = series(lambda f: _vdot(f["v"], Mmu @ psi.coeffs))
            va = series(lambda f: _vdot(f["v"], A @ psi.coeffs))
            vd = series(lambda f: _vdot(f["v"], Dd @ psi.coeffs))
            terms = [-rho0 * rphi * d2, -B * dd * chi, -vm * d2, -va * chi, vd * d1]
            _acc(out, "momentum", _residual(terms, wq))
        elif kind == "E":
            w = _test_scalar(sp, rng, False)
            wd = P.gram_dual(w.coeffs)
            wgd = P.grad_dual(Potential.from_scalar(w).coeffs)
            wb = Potential.from_scalar(w).outer_values().coeffs
            pw = series(lambda f: _vdot(f["p"], wd))
            vw = series(lambda f: _vdot(f["vpot"], wgd))
            vb = series(lambda f: b**2 * _vdot(f["v"], wb))
            _acc(out, "mass", _residual([pw * d1, B * vw * chi, -B * vb * d1], wq))
            w2 = _test_scalar(sp, rng, True)
            T = random_toroidal(sp, rng)
            Phi = VectorField(sp, Potential.from_scalar(w2), T)
            psi = -normal_trace(Phi, "outer")
            gd, td = _vector_dual(P, Phi)
            divd = P.gram_dual(divergence(Phi).coeffs)
            vP = series(lambda f: _vdot(f["vpot"], gd) + _vdot(f["vtor"], td))
            pd = series(lambda f: _vdot(f["p"], divd))
            vm = series(lambda f: _vdot(f["v"], Mmu @ psi.coeffs))
            va = series(lambda f: _vdot(f["v"], A @ psi.coeffs))
            vd = series(lambda f: _vdot(f["v"], Dd @ psi.coeffs))
            terms = [rho0 * vP * d1, pd * chi, -vm * d2, -va * chi, vd * d1]
            _acc(out, "momentum", _residual(terms, wq))
        else:
            w = _test_scalar(sp, rng, False)
            wd = P.gram_dual(w.coeffs)
            wgd = P.grad_dual(Potential.from_scalar(w).coeffs)
            wb = Potential.from_scalar(w).outer_values().coeffs
            uw = series(lambda f: _vdot(f["u"], wd))
            gw = series(lambda f: _vdot(f["upot"], wgd))
            vb = series(lambda f: b**2 * _vdot(f["v"], wb))
            _acc(out, "bulk", _residual([rho0 * uw * d2, B * gw * chi, B * vb * d1], wq))
            psi = rng.standard_normal(sp.n_modes) / (1.0 + sp.degrees) ** 1.5
            vm = series(lambda f: _vdot(f["v"], Mmu @ psi))
            va = series(lambda f: _vdot(f["v"], A @ psi))
            vd = series(lambda f: _vdot(f["v"], Dd @ psi))
            ub = series(lambda f: b**2 * _vdot(f["ub"], psi))
            terms = [vm * d2, va * chi, -vd * d1, -rho0 * ub * d1]
            _acc(out, "membrane", _residual(terms, wq))
    return WeakResidualReport(out)


def _acc(out, key, val):
    out[key] = max(out.get(key, 0.0), val)


def _features(kind, s):
    if kind == "L":
        sp = s.v.space
        f = {"pot": s.r.potential.coeffs, "tor": s.r.toroidal.coeffs,
             "div": divergence(s.r).coeffs, "v": s.v.coeffs,
             "tr1": normal_trace(s.r, "outer").coeffs}
        if not sp.is_ball:
            f["tr0"] = normal_trace(s.r, "inner").coeffs
        return f
    if kind == "E":
        return {"p": s.p.coeffs, "vpot": s.vvec.potential.coeffs,
                "vtor": s.vvec.toroidal.coeffs, "v": s.v.coeffs}
    return {"u": s.u.coeffs, "upot": Potential.from_scalar(s.u).coeffs, "v": s.v.coeffs,
            "ub": Potential.from_scalar(s.u).outer_values().coeffs}
