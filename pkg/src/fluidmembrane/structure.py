"""Configuration pairs, constraint functionals, equilibria and projectors.

A configuration pair ``(s, z)`` couples a displacement field in the domain
with a boundary deformation on the outer sphere. The functional

    L(s, z) = int_Gamma s . nu + int_Gamma1 z

vanishes on the constrained models; ``ell = L / L(s_b, z_b)`` measures the
component along the special equilibrium ``(s_b, z_b)``.
"""

from dataclasses import dataclass

import numpy as np

from .fields import ToroidalField, VectorField, divergence, normal_trace, solve_div_curl
from .membrane import solve_surface_equilibrium
from .space import ScalarBulkField, SurfaceField, _check_same

MODELS = ("L0", "L1", "L2", "L3", "L4", "L")


class ConfigurationPair:
    """A pair ``(s, z)`` of a vector field and a surface field."""

    def __init__(self, s, z):
        _check_same(s, z)
        self.space = s.space
        self.s = s
        self.z = z

    @classmethod
    def zeros(cls, space):
        return cls(VectorField.zeros(space), SurfaceField.zeros(space))

    def __add__(self, other):
        return ConfigurationPair(self.s + other.s, self.z + other.z)

    def __sub__(self, other):
        return ConfigurationPair(self.s - other.s, self.z - other.z)

    def __neg__(self):
        return ConfigurationPair(-self.s, -self.z)

    def __mul__(self, c):
        return ConfigurationPair(self.s * c, self.z * c)

    __rmul__ = __mul__

    def norm(self):
        """``sqrt(|s|^2 + |div s|^2 + |z|_{H1}^2)``."""
        return float(np.sqrt(self.s.norm() ** 2 + divergence(self.s).norm() ** 2
                             + self.z.h1_norm() ** 2))

    def distance(self, other):
        return (self - other).norm()


def trace_defects(p):
    """``(s . nu on Gamma_0, s . nu + z on Gamma_1)``."""
    sp = p.space
    t1 = normal_trace(p.s, "outer") + p.z
    if sp.is_ball:
        t0 = SurfaceField.zeros(sp, radius=0.0)
    else:
        t0 = normal_trace(p.s, "inner")
    return t0, t1


def constraint_L(p, both=False):
    """``L(s, z)`` from the volume form ``int div s + int z``.

    With ``both=True`` also return the surface form
    ``int_Gamma s . nu + int z``.
    """
    sp = p.space
    vol = divergence(p.s).integrate() + p.z.integrate()
    if not both:
        return vol
    surf = normal_trace(p.s, "outer").integrate() + p.z.integrate()
    if not sp.is_ball:
        surf = surf + normal_trace(p.s, "inner").integrate()
    return vol, surf


@dataclass
class SpecialEquilibrium:
    """The distinguished equilibrium ``(s_b, z_b)`` and ``L(s_b, z_b)``."""

    s_bullet: VectorField
    z_bullet: SurfaceField
    L_value: complex
    kappa_zero: bool

    @property
    def pair(self):
        return ConfigurationPair(self.s_bullet, self.z_bullet)


def special_equilibrium(coeffs, space=None):
    """``(0, 1)`` when ``kappa == 0``, otherwise ``(s*, z*)``.

    ``z*`` solves ``-Div_G(sigma grad_G z) + kappa z + B = 0`` and ``s*`` is
    the curl-free field with ``div s* = -1``, no flux through the inner
    sphere and constant outward flux ``-|Omega| / area`` on the outer one.
    """
    sp = coeffs.space if space is None else space
    geo = sp.geometry
    if coeffs.kappa_zero:
        s = VectorField.zeros(sp)
        z = SurfaceField.constant(sp, 1.0)
    else:
        z = solve_surface_equilibrium(coeffs.membrane, coeffs.B)
        w = ScalarBulkField.constant(sp, -1.0)
        z1 = SurfaceField.constant(sp, geo.volume / geo.outer_area)
        s = solve_div_curl(w, None, z1)
    L = constraint_L(ConfigurationPair(s, z))
    return SpecialEquilibrium(s, z, L, coeffs.kappa_zero)


def ell(p, eq):
    """``L(p) / L(s_b, z_b)``."""
    return constraint_L(p) / eq.L_value


@dataclass
class MembershipReport:
    curl_free: bool
    trace_gamma0_zero: bool
    trace_gamma1_matches_minus_z: bool
    L_zero: bool
    models: frozenset

    @property
    def traces(self):
        return self.trace_gamma0_zero and self.trace_gamma1_matches_minus_z


def _pair_scale(p):
    sp = p.space
    t1 = normal_trace(p.s, "outer")
    parts = [p.s.norm(), divergence(p.s).norm(), t1.norm(), p.z.h1_norm()]
    if not sp.is_ball:
        parts.append(normal_trace(p.s, "inner").norm())
    return max(max(parts), 1e-300)


def membership(p, tol=1e-9):
    """Which Lagrangian models admit ``p`` as configuration.

    Tolerances are relative to the size of the pair (``|L|`` is compared
    against the scale times the square root of the boundary area).
    """
    sp = p.space
    scale = _pair_scale(p)
    curl_free = p.s.toroidal.norm() <= tol * scale
    t0, t1 = trace_defects(p)
    tr0 = sp.is_ball or t0.norm() <= tol * scale
    tr1 = t1.norm() <= tol * scale
    area = sp.geometry.outer_area + sp.geometry.inner_area + sp.geometry.volume
    L_zero = abs(constraint_L(p)) <= tol * scale * np.sqrt(area)
    traces = tr0 and tr1
    models = {"L"}
    if curl_free and traces:
        models.add("L0")
    if traces:
        models.add("L1")
    if curl_free and L_zero:
        models.add("L2")
    if L_zero:
        models.add("L3")
    if curl_free:
        models.add("L4")
    return MembershipReport(curl_free, tr0, tr1, L_zero, frozenset(models))


def equilibrium_residual(p, coeffs):
    """Return ``(p0, residual)`` for the equilibrium system.

    ``p0`` is the volume mean of ``-B div s``. The residual adds the L2
    distance of ``-B div s`` from ``p0`` and the L2 norm on the outer
    sphere of the Galerkin residual of ``-Div_G(sigma grad_G z) + kappa z + p0``.
    """
    sp = p.space
    q = divergence(p.s) * (-coeffs.B)
    p0 = q.mean()
    bulk = (q - ScalarBulkField.constant(sp, p0)).norm()
    r = coeffs.membrane.matrix @ p.z.coeffs
    r = r.astype(np.result_type(r, p0))
    r[0] += p0 * np.sqrt(4.0 * np.pi)
    surf = sp.b * np.linalg.norm(r)
    return p0, float(bulk + surf)


# -- projectors ----------------------------------------------------------------

def _inner_trace(s):
    sp = s.space
    if sp.is_ball:
        return None
    return normal_trace(s, "inner")


def _ref_scale(p, eq):
    sp = p.space
    return (_pair_scale(p) + _pair_scale(eq.pair)) * np.sqrt(
        sp.geometry.volume + sp.geometry.outer_area + sp.geometry.inner_area)


def _neg(z):
    return None if z is None else -z


def project_structural(p, eq):
    """Split ``p`` into its equilibrium part and its constrained part.

    Returns ``(onto_E, onto_L0)`` with ``onto_E = (f, ell z_b)`` and
    ``onto_L0 = (g, z - ell z_b)``, where ``f`` and ``g`` solve the
    div-curl problems fixing their divergence, curl and normal traces.
    """
    lam = ell(p, eq)
    s, z = p.s, p.z
    tr1 = normal_trace(s, "outer")
    tr0 = _inner_trace(s)
    ref = _ref_scale(p, eq)
    # f: div = lam div s_b, curl = curl s, traces s.nu (G0), s.nu + z - lam z_b (G1)
    f = solve_div_curl(divergence(eq.s_bullet) * lam, _neg(tr0),
                       -(tr1 + z - eq.z_bullet * lam), s.toroidal, ref_scale=ref)
    # g: div = div s - lam div s_b, curl free, traces 0 (G0), -z + lam z_b (G1)
    g = solve_div_curl(divergence(s) - divergence(eq.s_bullet) * lam, None,
                       z - eq.z_bullet * lam, ref_scale=ref)
    return (ConfigurationPair(f, eq.z_bullet * lam),
            ConfigurationPair(g, z - eq.z_bullet * lam))


def project_explicit(p, coeffs, eq=None):
    """The same splitting written out separately for ``kappa == 0`` and ``kappa != 0``.

    Only ``z*`` is taken from the special equilibrium; the normalizing
    constant uses the surface form of ``L`` and the divergence of ``s*`` is
    replaced by its defining value ``-1``.
    """
    sp = p.space
    geo = sp.geometry
    s, z = p.s, p.z
    tr1 = normal_trace(s, "outer")
    tr0 = _inner_trace(s)
    flux = tr1.integrate() + z.integrate()
    if tr0 is not None:
        flux = flux + tr0.integrate()
    ref = _pair_scale(p) * np.sqrt(geo.volume + geo.outer_area + geo.inner_area)
    one = SurfaceField.constant(sp, 1.0)
    if coeffs.kappa_zero:
        c = flux / geo.outer_area
        # (M) and (N)
        m = solve_div_curl(ScalarBulkField.zeros(sp), _neg(tr0), -(tr1 + z - one * c),
                           s.toroidal, ref_scale=ref)
        n = solve_div_curl(divergence(s), None, z - one * c, ref_scale=ref)
        return ConfigurationPair(m, one * c), ConfigurationPair(n, z - one * c)
    if eq is None:
        z_star = solve_surface_equilibrium(coeffs.membrane, coeffs.B)
    else:
        z_star = eq.z_bullet
    ref = ref * (1.0 + z_star.norm())
    c = flux / (geo.volume - z_star.integrate())
    # (P) and (Q)
    pv = solve_div_curl(ScalarBulkField.constant(sp, c), _neg(tr0),
                        -(tr1 + z + z_star * c), s.toroidal, ref_scale=ref)
    qv = solve_div_curl(divergence(s) - ScalarBulkField.constant(sp, c), None,
                        z + z_star * c, ref_scale=ref)
    return (ConfigurationPair(pv, -z_star * c),
            ConfigurationPair(qv, z + z_star * c))


@dataclass
class AtomicParts:
    on_L0: ConfigurationPair
    on_E1: ConfigurationPair
    on_E2: ConfigurationPair
    on_Ebullet: ConfigurationPair

    def total(self):
        return self.on_L0 + self.on_E1 + self.on_E2 + self.on_Ebullet


def project_atomic(p, eq):
    """Four-way splitting into the constrained core, solenoidal tangential
    equilibria, harmonic-gradient equilibria and the special equilibrium line.
    """
    sp = p.space
    lam = ell(p, eq)
    s, z = p.s, p.z
    e_b = eq.pair * lam
    a = VectorField(sp, None, ToroidalField(sp, s.toroidal.coeffs))
    tr1 = normal_trace(s, "outer")
    tr0 = _inner_trace(s)
    tb1 = normal_trace(eq.s_bullet, "outer") + eq.z_bullet
    k = solve_div_curl(ScalarBulkField.zeros(sp), _neg(tr0), -(tr1 + z - tb1 * lam),
                       ref_scale=_ref_scale(p, eq))
    on_E1 = ConfigurationPair(a, SurfaceField.zeros(sp))
    on_E2 = ConfigurationPair(k, SurfaceField.zeros(sp))
    on_L0 = p - on_E1 - on_E2 - e_b
    return AtomicParts(on_L0, on_E1, on_E2, e_b)


def div_curl_residual(s, w, z0, z1, curl):
    """Residual of ``div s = w``, ``curl s = curl``, ``s . nu = -z0, -z1``."""
    sp = s.space
    r = (divergence(s) - w).norm()
    r += (normal_trace(s, "outer") + z1).norm()
    if not sp.is_ball:
        t0 = normal_trace(s, "inner")
        r += (t0 if z0 is None else t0 + z0).norm()
    t = curl.coeffs if curl is not None else 0.0
    r += ToroidalField(sp, s.toroidal.coeffs - t).norm()
    return r
