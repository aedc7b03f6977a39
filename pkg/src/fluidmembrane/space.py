"""Geometry, spherical-harmonic bases, quadrature and scalar fields.

Fields are stored spectrally. Angular dependence uses real orthonormal
spherical harmonics on the unit sphere, indexed by ``i = l*l + l + m``.
Radial profiles of bulk fields are coefficient vectors in the per-degree
bases of :mod:`fluidmembrane.radial`; ``samples`` gives their values on the
radial Gauss nodes.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import roots_legendre, sph_harm_y

from .radial import line_rule, radial_operators


class SpaceError(ValueError):
    """Invalid geometry or discretization parameters."""


@dataclass(frozen=True)
class Geometry:
    """A ball of radius ``b`` (``a == 0``) or a shell ``a < |x| < b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise SpaceError("radii must be finite")
        if self.b <= 0 or self.a < 0 or self.a >= self.b:
            raise SpaceError(f"need 0 <= a < b, got a={self.a}, b={self.b}")

    @classmethod
    def ball(cls, b=1.0):
        return cls(0.0, float(b))

    @classmethod
    def shell(cls, a, b):
        if a <= 0:
            raise SpaceError("a shell needs a > 0")
        return cls(float(a), float(b))

    @property
    def is_ball(self):
        return self.a == 0.0

    @property
    def volume(self):
        return 4.0 * np.pi * (self.b**3 - self.a**3) / 3.0

    @property
    def outer_area(self):
        return 4.0 * np.pi * self.b**2

    @property
    def inner_area(self):
        return 4.0 * np.pi * self.a**2


def mode_index(l, m):
    return l * l + l + m


def real_sph_harm(l_max, theta, phi, grad=False):
    """Real orthonormal harmonics up to ``l_max`` at the given angles.

    Returns an array of shape ``(n_modes, npts)``; with ``grad=True`` also
    the ``theta`` and ``phi`` derivatives.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n_modes = (l_max + 1) ** 2
    Y = np.empty((n_modes,) + theta.shape)
    if grad:
        Yt = np.empty_like(Y)
        Yp = np.empty_like(Y)
    for l in range(l_max + 1):
        for m in range(0, l + 1):
            if grad:
                y, dy = sph_harm_y(l, m, theta, phi, diff_n=1)
                yt, yp = dy[..., 0], dy[..., 1]
            else:
                y = sph_harm_y(l, m, theta, phi)
            if m == 0:
                Y[mode_index(l, 0)] = y.real
                if grad:
                    Yt[mode_index(l, 0)] = yt.real
                    Yp[mode_index(l, 0)] = yp.real
                continue
            s = np.sqrt(2.0) * (-1.0) ** m
            Y[mode_index(l, m)] = s * y.real
            Y[mode_index(l, -m)] = s * y.imag
            if grad:
                Yt[mode_index(l, m)] = s * yt.real
                Yt[mode_index(l, -m)] = s * yt.imag
                Yp[mode_index(l, m)] = s * yp.real
                Yp[mode_index(l, -m)] = s * yp.imag
    if grad:
        return Y, Yt, Yp
    return Y


class SurfaceGrid:
    """Gauss-Legendre in ``cos(theta)`` times a uniform ``phi`` grid."""

    def __init__(self, n_theta, n_phi):
        x, w = roots_legendre(n_theta)
        self.theta1d = np.arccos(x)
        self.phi1d = 2.0 * np.pi * np.arange(n_phi) / n_phi
        th, ph = np.meshgrid(self.theta1d, self.phi1d, indexing="ij")
        self.theta = th.ravel()
        self.phi = ph.ravel()
        self.weights = np.repeat(w, n_phi) * (2.0 * np.pi / n_phi)
        self.n_theta, self.n_phi = n_theta, n_phi

    @property
    def size(self):
        return self.theta.size


class DiscreteSpace:
    """Spectral discretization of a ball or shell.

    Parameters
    ----------
    geometry : Geometry
    l_max : int
        Harmonic truncation, ``l_max >= 0``.
    n_r : int
        Number of radial Gauss nodes, at least 4.
    """

    def __init__(self, geometry, l_max, n_r):
        if int(l_max) != l_max or l_max < 0:
            raise SpaceError(f"l_max must be a non-negative integer, got {l_max}")
        if int(n_r) != n_r or n_r < 4:
            raise SpaceError(f"n_r must be an integer >= 4, got {n_r}")
        self.geometry = geometry
        self.l_max = int(l_max)
        self.n_r = int(n_r)
        self.n_modes = (self.l_max + 1) ** 2
        self.degrees = np.concatenate(
            [np.full(2 * l + 1, l) for l in range(self.l_max + 1)])
        self.orders = np.concatenate(
            [np.arange(-l, l + 1) for l in range(self.l_max + 1)])
        # products of a coefficient field with two basis functions are
        # integrated exactly
        deg = 3 * self.l_max + 1
        self.grid = SurfaceGrid(max(2 * (self.l_max + 1), deg // 2 + 1),
                                max(2 * self.l_max + 2, deg + 1))
        self.Y = real_sph_harm(self.l_max, self.grid.theta, self.grid.phi)
        ops = self.radial(0)
        self.radial_nodes = ops.nodes
        self.radial_weights = ops.weights
        self.n_pot = ops.n_pot

    @property
    def a(self):
        return self.geometry.a

    @property
    def b(self):
        return self.geometry.b

    @property
    def is_ball(self):
        return self.geometry.is_ball

    def radial(self, l):
        return radial_operators(self.geometry.a, self.geometry.b, int(l), self.n_r)

    def degree_slice(self, l):
        return slice(l * l, (l + 1) ** 2)

    def per_degree(self, arr, fn):
        """Apply ``fn(l, block)`` to each degree block of ``arr``."""
        out = None
        for l in range(self.l_max + 1):
            blk = fn(l, arr[self.degree_slice(l)])
            if out is None:
                out = np.zeros((self.n_modes,) + blk.shape[1:],
                               dtype=np.result_type(blk, arr))
            out[self.degree_slice(l)] = blk
        return out

    @cached_property
    def fine_radial(self):
        """Radial rule exact for all products used in projections."""
        r, w = line_rule(self.a, self.b, 2 * self.n_pot + self.l_max + 6)
        return r, w * r**2

    def same(self, other):
        return (self is other or (self.geometry == other.geometry
                                  and self.l_max == other.l_max
                                  and self.n_r == other.n_r))

    def __repr__(self):
        g = self.geometry
        kind = "ball" if g.is_ball else "shell"
        return f"DiscreteSpace({kind}, a={g.a}, b={g.b}, l_max={self.l_max}, n_r={self.n_r})"


def _check_same(u, v):
    if not u.space.same(v.space):
        raise SpaceError("fields live on different spaces")


class SurfaceField:
    """Function on a sphere of given radius (default the outer one), as harmonic coefficients."""

    def __init__(self, space, coeffs, radius=None):
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (space.n_modes,):
            raise SpaceError(f"expected {space.n_modes} coefficients, got {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs
        self.radius = space.b if radius is None else float(radius)

    @classmethod
    def zeros(cls, space, dtype=float, radius=None):
        return cls(space, np.zeros(space.n_modes, dtype=dtype), radius)

    @classmethod
    def constant(cls, space, value, radius=None):
        c = np.zeros(space.n_modes, dtype=np.result_type(value, float))
        c[0] = value * np.sqrt(4.0 * np.pi)
        return cls(space, c, radius)

    @classmethod
    def from_function(cls, space, f, radius=None):
        """Project ``f(theta, phi)`` onto the harmonic basis."""
        g = space.grid
        vals = np.asarray(f(g.theta, g.phi))
        return cls(space, space.Y @ (g.weights * vals), radius)

    def values(self):
        """Values at the surface grid nodes."""
        return self.coeffs @ self.space.Y

    def integrate(self):
        """Integral over the sphere carrying the field."""
        return self.radius**2 * np.sqrt(4.0 * np.pi) * self.coeffs[0]

    def inner(self, other):
        _check_same(self, other)
        return self.radius**2 * np.vdot(self.coeffs, other.coeffs)

    def norm(self):
        """L2 norm on the sphere carrying the field."""
        return self.radius * float(np.linalg.norm(self.coeffs))

    def grad_norm(self):
        """L2 norm of the surface gradient (independent of ``b``)."""
        l = self.space.degrees
        return np.sqrt(np.sum(l * (l + 1) * np.abs(self.coeffs) ** 2))

    def h1_norm(self):
        return np.hypot(self.norm(), self.grad_norm())

    def _new(self, coeffs):
        return SurfaceField(self.space, coeffs, self.radius)

    def copy(self):
        return self._new(self.coeffs.copy())

    def __add__(self, other):
        _check_same(self, other)
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return self._new(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._new(-self.coeffs)

    def __mul__(self, s):
        return self._new(self.coeffs * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self._new(self.coeffs / s)


class ScalarBulkField:
    """Scalar field in the domain.

    ``coeffs[i, k]`` is the coefficient of radial basis function ``k`` of
    degree ``l(i)`` times the harmonic ``i``.
    """

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (space.n_modes, space.n_r):
            raise SpaceError(
                f"expected shape {(space.n_modes, space.n_r)}, got {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, space, dtype=float):
        return cls(space, np.zeros((space.n_modes, space.n_r), dtype=dtype))

    @classmethod
    def constant(cls, space, value):
        f = cls.zeros(space, dtype=np.result_type(value, float))
        ops = space.radial(0)
        # the first radial function of degree 0 is constant for both bases
        f.coeffs[0, 0] = value * np.sqrt(4.0 * np.pi) / ops.sample[0, 0]
        return f

    @classmethod
    def from_samples(cls, space, samples):
        """Interpolate values given on ``space.radial_nodes`` per mode."""
        samples = np.asarray(samples)
        return cls(space, space.per_degree(
            samples, lambda l, s: space.radial(l).samples_to_coeffs(s)))

    @classmethod
    def from_radial(cls, space, profiles):
        """Project ``{(l, m): f(r)}`` radial profiles onto the basis."""
        out = cls.zeros(space)
        r, w = space.fine_radial
        for (l, m), f in profiles.items():
            ops = space.radial(l)
            fv, _ = ops.basis.evaluate(r)
            rhs = (fv[:, : space.n_r].T * w) @ np.asarray(f(r), dtype=float)
            out.coeffs[mode_index(l, m)] = np.linalg.solve(ops.gram, rhs)
        return out

    @classmethod
    def from_function(cls, space, f):
        """Project ``f(r, theta, phi)`` onto the discrete space."""
        r, w = space.fine_radial
        g = space.grid
        vals = np.asarray(f(r[:, None], g.theta[None, :], g.phi[None, :]))
        ang = (vals * g.weights) @ space.Y.T          # (nq, n_modes)
        out = np.zeros((space.n_modes, space.n_r), dtype=np.result_type(vals, float))
        for l in range(space.l_max + 1):
            ops = space.radial(l)
            fv, _ = ops.basis.evaluate(r)
            sl = space.degree_slice(l)
            rhs = (ang[:, sl].T * w) @ fv[:, : space.n_r]
            out[sl] = np.linalg.solve(ops.gram, rhs.T).T
        return cls(space, out)

    @property
    def samples(self):
        """Values of each radial profile at ``space.radial_nodes``."""
        sp = self.space
        return sp.per_degree(self.coeffs,
                             lambda l, c: c @ sp.radial(l).sample.T)

    def values_at(self, r):
        """Radial profiles evaluated at radii ``r``, ``(n_modes, len(r))``."""
        sp = self.space
        r = np.atleast_1d(np.asarray(r, dtype=float))

        def ev(l, c):
            fv, _ = sp.radial(l).basis.evaluate(r)
            return c @ fv[:, : sp.n_r].T
        return sp.per_degree(self.coeffs, ev)

    def integrate(self):
        """Integral over the domain."""
        ops = self.space.radial(0)
        return np.sqrt(4.0 * np.pi) * (self.coeffs[0] @ ops.integral)

    def mean(self):
        return self.integrate() / self.space.geometry.volume

    def inner(self, other):
        _check_same(self, other)
        sp = self.space
        total = 0.0
        for l in range(sp.l_max + 1):
            sl = sp.degree_slice(l)
            G = sp.radial(l).gram
            total = total + np.sum(np.conj(self.coeffs[sl]) * (other.coeffs[sl] @ G.T))
        return total

    def norm(self):
        return float(np.sqrt(max(np.real(self.inner(self)), 0.0)))

    def copy(self):
        return ScalarBulkField(self.space, self.coeffs.copy())

    def __add__(self, other):
        _check_same(self, other)
        return ScalarBulkField(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return ScalarBulkField(self.space, self.coeffs - other.coeffs)

    def __neg__(self):
        return ScalarBulkField(self.space, -self.coeffs)

    def __mul__(self, s):
        return ScalarBulkField(self.space, self.coeffs * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return ScalarBulkField(self.space, self.coeffs / s)


def integrate_volume(f):
    return f.integrate()


def integrate_surface(z):
    return z.integrate()
