"""Physical constants and boundary coefficient fields."""

from functools import cached_property

import numpy as np

from .membrane import CoefficientError, assemble_membrane, node_min, surface_gram
from .space import SurfaceField


def _as_surface(space, value, name):
    if isinstance(value, SurfaceField):
        if not value.space.same(space):
            raise CoefficientError(f"{name} lives on a different space")
        return value
    if np.isscalar(value):
        return SurfaceField.constant(space, float(value))
    c = np.asarray(value, dtype=float)
    if c.shape != (space.n_modes,):
        raise CoefficientError(
            f"{name}: expected a constant or {space.n_modes} harmonic coefficients")
    return SurfaceField(space, c)


class Coefficients:
    """``rho0``, ``B`` and the membrane fields ``mu, sigma, delta, kappa``.

    Constants or harmonic coefficient arrays are accepted for the surface
    fields. Bounds are checked at the surface quadrature nodes:
    ``mu > 0``, ``sigma > 0``, ``kappa >= 0``.
    """

    def __init__(self, space, rho0=1.0, B=1.0, mu=1.0, sigma=1.0, delta=0.0, kappa=0.0):
        if not rho0 > 0:
            raise CoefficientError(f"rho0 > 0 required, got {rho0}")
        if not B > 0:
            raise CoefficientError(f"B > 0 required, got {B}")
        self.space = space
        self.rho0 = float(rho0)
        self.B = float(B)
        self.mu = _as_surface(space, mu, "mu")
        self.sigma = _as_surface(space, sigma, "sigma")
        self.delta = _as_surface(space, delta, "delta")
        self.kappa = _as_surface(space, kappa, "kappa")
        if node_min(self.mu) <= 0:
            raise CoefficientError(f"min mu > 0 required, got {node_min(self.mu):.3e}")
        # sigma and kappa are checked by the assembly
        self.membrane

    @cached_property
    def membrane(self):
        return assemble_membrane(self.sigma, self.kappa, self.space)

    @cached_property
    def mass(self):
        """``int mu Y_i Y_j`` over the outer sphere."""
        return surface_gram(self.mu, self.space)

    @cached_property
    def damping(self):
        """``int delta Y_i Y_j`` over the outer sphere."""
        return surface_gram(self.delta, self.space)

    @property
    def kappa_zero(self):
        return self.membrane.kappa_zero

    @property
    def is_constant(self):
        """Whether all surface coefficients are constant on the sphere."""
        return all(np.abs(f.coeffs[1:]).max(initial=0.0) == 0.0
                   for f in (self.mu, self.sigma, self.delta, self.kappa))

    @property
    def undamped(self):
        return np.abs(self.delta.coeffs).max(initial=0.0) == 0.0

    def constant_value(self, name):
        f = getattr(self, name)
        return f.coeffs[0] / np.sqrt(4.0 * np.pi)

    def as_dict(self):
        def enc(f):
            if np.abs(f.coeffs[1:]).max(initial=0.0) == 0.0:
                return float(f.coeffs[0] / np.sqrt(4.0 * np.pi))
            return [float(c) for c in np.real(f.coeffs)]
        return {"rho0": self.rho0, "B": self.B, "mu": enc(self.mu),
                "sigma": enc(self.sigma), "delta": enc(self.delta),
                "kappa": enc(self.kappa)}
