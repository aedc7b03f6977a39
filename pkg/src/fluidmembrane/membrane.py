"""Membrane operator ``-Div_G(sigma grad_G v) + kappa v`` on the outer sphere.

Galerkin matrices are assembled in the real harmonic basis with exact
surface quadrature. For the gradient term the identity

    grad Y_i . grad Y_j = (lap(Y_i Y_j) + (l_i(l_i+1) + l_j(l_j+1)) Y_i Y_j) / 2

moves the derivatives onto ``sigma``, whose Laplace-Beltrami image is
diagonal in the harmonic basis.
"""

import numpy as np

from .space import SpaceError, SurfaceField


class CoefficientError(ValueError):
    """Boundary coefficients violate the standing positivity assumptions."""


def weighted_gram(f, space):
    """``int_{unit sphere} f Y_i Y_j`` for a surface field ``f``."""
    g = space.grid
    fv = np.real(f.values()) * g.weights
    return (space.Y * fv) @ space.Y.T


def surface_gram(f, space):
    """``int_{Gamma_1} f Y_i Y_j`` on the sphere of radius ``b``."""
    return space.b**2 * weighted_gram(f, space)


def node_min(f):
    return float(np.min(np.real(f.values())))


class MembraneOperator:
    """Assembled membrane operator.

    Attributes
    ----------
    stiffness : ndarray
        Weak form ``int sigma grad Y_i . grad Y_j + int kappa Y_i Y_j`` over
        the radius-``b`` sphere.
    matrix : ndarray
        ``stiffness / b**2``; maps coefficients of ``v`` to those of
        ``-Div_G(sigma grad_G v) + kappa v``.
    sigma_min, kappa_min : float
        Coefficient minima at the quadrature nodes.
    kappa_zero : bool
        Whether ``kappa`` vanishes identically.
    """

    def __init__(self, space, sigma, kappa, stiffness, sigma_min, kappa_min, kappa_zero):
        self.space = space
        self.sigma = sigma
        self.kappa = kappa
        self.stiffness = stiffness
        self.matrix = stiffness / space.b**2
        self.sigma_min = sigma_min
        self.kappa_min = kappa_min
        self.kappa_zero = kappa_zero

    def apply(self, z):
        return SurfaceField(self.space, self.matrix @ z.coeffs)

    def weak_form(self, z, psi):
        """``int sigma grad z . grad psi + kappa z psi`` (``psi`` conjugated)."""
        return np.vdot(psi.coeffs, self.stiffness @ z.coeffs)


def assemble_membrane(sigma, kappa, space, check=True):
    """Assemble the membrane operator for coefficients ``sigma`` and ``kappa``.

    Raises
    ------
    CoefficientError
        If ``min sigma <= 0`` or ``kappa < 0`` somewhere on the quadrature grid.
    """
    for f in (sigma, kappa):
        if not f.space.same(space):
            raise SpaceError("coefficient field lives on a different space")
    s_min, k_min = node_min(sigma), node_min(kappa)
    if check:
        if s_min <= 0.0:
            raise CoefficientError(f"min sigma > 0 required, got {s_min:.3e}")
        if k_min < -1e-14 * max(1.0, np.abs(kappa.coeffs).max()):
            raise CoefficientError(f"kappa >= 0 required, got min {k_min:.3e}")
    lam = space.degrees * (space.degrees + 1.0)
    lap_sigma = SurfaceField(space, -lam * np.real(sigma.coeffs))
    S = weighted_gram(sigma, space)
    grad = 0.5 * weighted_gram(lap_sigma, space) + 0.5 * (lam[:, None] + lam[None, :]) * S
    K = surface_gram(kappa, space)
    A = grad + K
    A = 0.5 * (A + A.T)
    kappa_zero = bool(np.abs(kappa.coeffs).max(initial=0.0) == 0.0)
    return MembraneOperator(space, sigma, kappa, A, s_min, k_min, kappa_zero)


class NoSolutionError(ValueError):
    """The surface equilibrium equation has no solution."""


def solve_surface_equilibrium(op, p0):
    """Solve ``-Div_G(sigma grad_G z) + kappa z + p0 = 0``.

    With ``kappa == 0`` solutions exist only for ``p0 == 0``, and the
    constant ``1`` is returned as representative of the kernel.
    """
    sp = op.space
    if op.kappa_zero:
        if p0 != 0:
            raise NoSolutionError("with kappa == 0 a solution exists only for p0 = 0")
        return SurfaceField.constant(sp, 1.0)
    rhs = np.zeros(sp.n_modes, dtype=np.result_type(p0, float))
    rhs[0] = -p0 * np.sqrt(4.0 * np.pi)
    return SurfaceField(sp, np.linalg.solve(op.matrix, rhs))


def weak_residual(op, z, p0, psi):
    """``int sigma grad z . grad psi + kappa z psi + p0 psi`` for a test ``psi``."""
    return op.weak_form(z, psi) + p0 * np.conj(psi.integrate())
