"""Vector fields, discrete divergence and normal traces, div-curl solvers.

A vector field is stored as ``grad(phi) + curl(t x)``: a gradient potential
``phi`` and a toroidal scalar ``t``. Fields of this form have a well defined
divergence (the Laplacian of ``phi``), normal traces (``d phi / d nu``) and
curl (carried entirely by ``t``).
"""

import numpy as np

from .space import ScalarBulkField, SpaceError, SurfaceField, _check_same


class CompatibilityError(ValueError):
    """Neumann data violate the solvability condition."""

    def __init__(self, msg, defect, scale):
        super().__init__(msg)
        self.defect = defect
        self.scale = scale


TOL_COMPAT = 1e-9


def _zeros_dtype(*arrays):
    return np.result_type(*[a for a in arrays if a is not None], float)


class Potential:
    """Scalar potential with ``n_pot`` radial coefficients per mode.

    Potentials carry one (ball) or two (shell) more radial degrees of
    freedom than scalar fields, so that their Laplacian and normal
    derivatives can be prescribed independently.
    """

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (space.n_modes, space.n_pot):
            raise SpaceError(
                f"expected shape {(space.n_modes, space.n_pot)}, got {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, space, dtype=float):
        return cls(space, np.zeros((space.n_modes, space.n_pot), dtype=dtype))

    @classmethod
    def from_scalar(cls, f):
        """Embed a scalar field (its basis is a prefix of the potential basis)."""
        sp = f.space
        c = np.zeros((sp.n_modes, sp.n_pot), dtype=f.coeffs.dtype)
        c[:, : sp.n_r] = f.coeffs
        return cls(sp, c)

    @classmethod
    def from_function(cls, space, f):
        """L2 projection of ``f(r, theta, phi)`` onto the potential space."""
        r, w = space.fine_radial
        g = space.grid
        vals = np.asarray(f(r[:, None], g.theta[None, :], g.phi[None, :]))
        ang = (vals * g.weights) @ space.Y.T
        out = np.zeros((space.n_modes, space.n_pot), dtype=np.result_type(vals, float))
        for l in range(space.l_max + 1):
            ops = space.radial(l)
            fv, _ = ops.basis.evaluate(r)
            sl = space.degree_slice(l)
            rhs = (ang[:, sl].T * w) @ fv
            out[sl] = np.linalg.solve(ops.gram_pot, rhs.T).T
        return cls(space, out)

    def to_scalar(self, strict=True, tol=1e-12):
        """Scalar field with the same values.

        With ``strict`` the trailing coefficients must vanish; otherwise the
        L2 projection is returned.
        """
        sp = self.space
        tail = self.coeffs[:, sp.n_r:]
        scale = max(np.abs(self.coeffs).max(), 1e-300)
        if np.abs(tail).max(initial=0.0) <= tol * scale:
            return ScalarBulkField(sp, self.coeffs[:, : sp.n_r].copy())
        if strict:
            raise SpaceError("potential is not in the scalar space")

        def proj(l, c):
            ops = sp.radial(l)
            return np.linalg.solve(ops.gram, (c @ ops.gram_pot[: sp.n_r].T).T).T
        return ScalarBulkField(sp, sp.per_degree(self.coeffs, proj))

    def gradient(self):
        return VectorField(self.space, self, None)

    def laplacian(self):
        """Discrete Laplacian (projected onto the scalar space)."""
        sp = self.space
        return ScalarBulkField(
            sp, sp.per_degree(self.coeffs, lambda l, c: c @ sp.radial(l).lap.T))

    def dr_outer(self):
        sp = self.space
        return SurfaceField(sp, sp.per_degree(
            self.coeffs, lambda l, c: c @ sp.radial(l).dr_b))

    def dr_inner(self):
        sp = self.space
        return SurfaceField(sp, sp.per_degree(
            self.coeffs, lambda l, c: c @ sp.radial(l).dr_a), radius=sp.a)

    def outer_values(self):
        sp = self.space
        return SurfaceField(sp, sp.per_degree(
            self.coeffs, lambda l, c: c @ sp.radial(l).val_b))

    def samples(self):
        sp = self.space
        return sp.per_degree(self.coeffs, lambda l, c: c @ sp.radial(l).sample_pot.T)

    def integrate(self):
        return np.sqrt(4.0 * np.pi) * (self.coeffs[0] @ self.space.radial(0).integral_pot)

    def mean(self):
        return self.integrate() / self.space.geometry.volume

    def remove_mean(self):
        c = self.coeffs.copy()
        ops = self.space.radial(0)
        c[0, 0] -= np.sqrt(4.0 * np.pi) * (c[0] @ ops.integral_pot) / (
            np.sqrt(4.0 * np.pi) * ops.integral_pot[0])
        return Potential(self.space, c)

    def copy(self):
        return Potential(self.space, self.coeffs.copy())

    def __add__(self, other):
        _check_same(self, other)
        return Potential(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return Potential(self.space, self.coeffs - other.coeffs)

    def __neg__(self):
        return Potential(self.space, -self.coeffs)

    def __mul__(self, s):
        return Potential(self.space, self.coeffs * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return Potential(self.space, self.coeffs / s)


class ToroidalField:
    """Scalar ``t`` of the toroidal field ``curl(t x)``; degree 0 is unused."""

    def __init__(self, space, coeffs):
        coeffs = np.array(coeffs)
        if coeffs.shape != (space.n_modes, space.n_r):
            raise SpaceError(
                f"expected shape {(space.n_modes, space.n_r)}, got {coeffs.shape}")
        coeffs[0] = 0.0
        self.space = space
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, space, dtype=float):
        return cls(space, np.zeros((space.n_modes, space.n_r), dtype=dtype))

    @classmethod
    def from_scalar(cls, f):
        return cls(f.space, f.coeffs)

    def inner(self, other):
        _check_same(self, other)
        sp = self.space
        total = 0.0
        for l in range(1, sp.l_max + 1):
            sl = sp.degree_slice(l)
            G = sp.radial(l).gram
            total = total + l * (l + 1) * np.sum(
                np.conj(self.coeffs[sl]) * (other.coeffs[sl] @ G.T))
        return total

    def norm(self):
        return float(np.sqrt(max(np.real(self.inner(self)), 0.0)))


class VectorField:
    """``grad(phi) + curl(t x)`` on the domain."""

    def __init__(self, space, potential=None, toroidal=None):
        if potential is None:
            potential = Potential.zeros(space)
        if toroidal is None:
            toroidal = ToroidalField.zeros(space)
        if not (potential.space.same(space) and toroidal.space.same(space)):
            raise SpaceError("components live on different spaces")
        self.space = space
        self.potential = potential
        self.toroidal = toroidal

    @classmethod
    def zeros(cls, space):
        return cls(space)

    @classmethod
    def position(cls, space, scale=1.0):
        """The field ``scale * x``, the gradient of ``scale * r**2 / 2``."""
        return cls(space, Potential.from_function(
            space, lambda r, th, ph: 0.5 * scale * r**2 + 0.0 * th))

    @property
    def gradient_part(self):
        return VectorField(self.space, self.potential, None)

    @property
    def toroidal_part(self):
        return VectorField(self.space, None, self.toroidal)

    def inner(self, other):
        _check_same(self, other)
        sp = self.space
        total = 0.0
        for l in range(sp.l_max + 1):
            sl = sp.degree_slice(l)
            K = sp.radial(l).grad_gram
            total = total + np.sum(
                np.conj(self.potential.coeffs[sl]) * (other.potential.coeffs[sl] @ K.T))
        return total + self.toroidal.inner(other.toroidal)

    def norm(self):
        """L2 norm of the vector field."""
        return float(np.sqrt(max(np.real(self.inner(self)), 0.0)))

    def copy(self):
        return VectorField(self.space, self.potential.copy(),
                           ToroidalField(self.space, self.toroidal.coeffs))

    def __add__(self, other):
        _check_same(self, other)
        return VectorField(self.space, self.potential + other.potential,
                           ToroidalField(self.space, self.toroidal.coeffs + other.toroidal.coeffs))

    def __sub__(self, other):
        _check_same(self, other)
        return VectorField(self.space, self.potential - other.potential,
                           ToroidalField(self.space, self.toroidal.coeffs - other.toroidal.coeffs))

    def __neg__(self):
        return self * -1.0

    def __mul__(self, s):
        return VectorField(self.space, self.potential * s,
                           ToroidalField(self.space, self.toroidal.coeffs * s))

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / s)


def divergence(s):
    """Divergence of a vector field as a scalar field."""
    return s.potential.laplacian()


def normal_trace(s, boundary="outer"):
    """``s . nu`` on the outer (Gamma_1) or inner (Gamma_0) sphere.

    ``nu`` is the outward normal of the domain, so ``-e_r`` on the inner
    sphere.

    Raises
    ------
    SpaceError
        If the inner trace is requested on a ball.
    """
    if boundary == "outer":
        return s.potential.dr_outer()
    if boundary == "inner":
        if s.space.is_ball:
            raise SpaceError("a ball has no inner boundary")
        return -s.potential.dr_inner()
    raise ValueError(f"unknown boundary {boundary!r}")


def curl_norm(s):
    """Norm of the curl-carrying part of ``s``."""
    return s.toroidal.norm()


def is_curl_free(s, tol=1e-9):
    return s.toroidal.norm() <= tol * max(s.norm(), 1e-300)


def _surface_or_zero(z, space, radius):
    if z is None:
        return SurfaceField.zeros(space, radius=radius)
    return z


def compatibility_defect(w, z0, z1):
    """Return ``(int w + int z0 + int z1, scale)``."""
    sp = w.space
    z0 = _surface_or_zero(z0, sp, sp.a)
    z1 = _surface_or_zero(z1, sp, sp.b)
    defect = w.integrate() + z1.integrate()
    scale = (w.norm() * np.sqrt(sp.geometry.volume)
             + z1.norm() * np.sqrt(sp.geometry.outer_area))
    if not sp.is_ball:
        defect = defect + z0.integrate()
        scale += z0.norm() * np.sqrt(sp.geometry.inner_area)
    return defect, scale


def solve_neumann_poisson(w, g0=None, g1=None, tol=TOL_COMPAT, check=True, ref_scale=0.0):
    """Solve ``-lap(phi) = w`` with ``d phi / d nu = g`` on the boundary.

    ``g0`` lives on the inner sphere (ignored for the ball) and ``g1`` on
    the outer one. The data must satisfy ``int w + int g0 + int g1 = 0``;
    the solution has zero volume mean. ``ref_scale`` sets a floor for the
    data scale, for data obtained by cancellation from larger fields.
    """
    sp = w.space
    g0 = _surface_or_zero(g0, sp, sp.a)
    g1 = _surface_or_zero(g1, sp, sp.b)
    if sp.is_ball and np.abs(g0.coeffs).max(initial=0.0) > 0:
        raise SpaceError("the ball has no inner boundary")
    if check:
        defect, scale = compatibility_defect(w, g0, g1)
        scale = max(scale, ref_scale)
        if abs(defect) > tol * max(scale, 1e-300):
            raise CompatibilityError(
                f"incompatible Neumann data: defect {abs(defect):.3e} "
                f"exceeds {tol:g} x scale {scale:.3e}", defect, scale)
    dtype = _zeros_dtype(w.coeffs, g0.coeffs, g1.coeffs)
    out = np.zeros((sp.n_modes, sp.n_pot), dtype=dtype)
    for l in range(sp.l_max + 1):
        ops = sp.radial(l)
        sl = sp.degree_slice(l)
        cols = [-w.coeffs[sl]]
        if not sp.is_ball:
            # outward normal derivative on the inner sphere is -d/dr
            cols.append(-g0.coeffs[sl][:, None])
        cols.append(g1.coeffs[sl][:, None])
        rhs = np.hstack(cols)
        out[sl] = rhs @ ops.neumann_solver().T
    return Potential(sp, out)


def solve_div_curl(w, z0=None, z1=None, curl=None, tol=TOL_COMPAT, check=True,
                   ref_scale=0.0):
    """Field ``s`` with ``div s = w``, ``s . nu = -z`` and prescribed curl.

    The curl is given by a toroidal field (or a vector field whose toroidal
    part is used); without it ``s`` is curl free.
    """
    phi = solve_neumann_poisson(w, z0, z1, tol=tol, check=check, ref_scale=ref_scale)
    if isinstance(curl, VectorField):
        curl = curl.toroidal
    return VectorField(w.space, -phi, curl)


# -- random band-limited data -----------------------------------------------

def _decay(space, n, rate):
    k = np.arange(n)
    l = space.degrees[:, None]
    return np.exp(-rate * k)[None, :] / (1.0 + l) ** 1.5


def random_scalar(space, rng, rate=0.6):
    c = rng.standard_normal((space.n_modes, space.n_r)) * _decay(space, space.n_r, rate)
    return ScalarBulkField(space, c)


def random_potential(space, rng, rate=0.6):
    c = rng.standard_normal((space.n_modes, space.n_pot)) * _decay(space, space.n_pot, rate)
    return Potential(space, c).remove_mean()


def random_toroidal(space, rng, rate=0.6):
    c = rng.standard_normal((space.n_modes, space.n_r)) * _decay(space, space.n_r, rate)
    return ToroidalField(space, c)


def random_surface(space, rng, radius=None):
    l = space.degrees
    c = rng.standard_normal(space.n_modes) / (1.0 + l) ** 1.5
    return SurfaceField(space, c, radius)


def random_vector_field(space, rng, curl=True, rate=0.6):
    tor = random_toroidal(space, rng, rate) if curl else None
    return VectorField(space, random_potential(space, rng, rate), tor)
