"""Radial polynomial bases, quadrature and per-degree operator matrices.

Ball (a == 0): degree-``l`` radial profiles are ``(r/b)**l * g(xi)`` with
``xi = 2 (r/b)**2 - 1`` and ``g`` expanded in Jacobi polynomials
``P_k^(0, l + 1/2)``. These are orthonormal (after scaling) for ``r**2 dr``
and regular at the origin.

Shell (a > 0): Legendre polynomials in the affine coordinate on ``[a, b]``.

Scalar profiles use the first ``n`` basis functions; gradient potentials use
``n + 1`` (ball) or ``n + 2`` (shell) so that the discrete Laplacian together
with the boundary normal derivatives determines a potential up to constants.
The discrete Laplacian is the L2 projection of the exact one onto the scalar
space, which makes Green's identity and the divergence theorem exact.
"""

from functools import lru_cache

import numpy as np
from scipy.special import eval_jacobi, eval_legendre, roots_legendre


def gauss_nodes(a, b, n):
    """Gauss-Legendre nodes on ``(a, b)`` and weights for ``int f r**2 dr``."""
    xi, w = roots_legendre(n)
    r = 0.5 * (b - a) * xi + 0.5 * (a + b)
    return r, w * 0.5 * (b - a) * r**2


def line_rule(a, b, n):
    """Gauss-Legendre nodes and weights for ``int_a^b f(r) dr``."""
    xi, w = roots_legendre(n)
    return 0.5 * (b - a) * xi + 0.5 * (a + b), 0.5 * (b - a) * w


def _jacobi_d(k, alpha, beta, xi, order):
    # order-th derivative of P_k^(alpha, beta)
    if order > k:
        return np.zeros_like(xi)
    c = 1.0
    for j in range(order):
        c *= 0.5 * (k + alpha + beta + 1 + j)
    return c * eval_jacobi(k - order, alpha + order, beta + order, xi)


class RadialBasis:
    """Radial basis for harmonic degree ``l`` with ``size`` functions."""

    def __init__(self, a, b, l, size):
        self.a = float(a)
        self.b = float(b)
        self.l = int(l)
        self.size = int(size)
        self.ball = self.a == 0.0
        k = np.arange(self.size)
        if self.ball:
            self.scale = np.sqrt((4 * k + 2 * self.l + 3) / self.b**3)
        else:
            rm2 = (self.a**2 + self.a * self.b + self.b**2) / 3.0
            self.scale = np.sqrt((2 * k + 1) / ((self.b - self.a) * rm2))

    def evaluate(self, r):
        """Values and first radial derivatives, each ``(len(r), size)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        f = np.empty((r.size, self.size))
        d1 = np.empty_like(f)
        l, b = self.l, self.b
        if self.ball:
            rho = r / b
            xi = 2.0 * rho**2 - 1.0
            pw = rho**l
            dpw = l * rho ** max(l - 1, 0) / b if l >= 1 else np.zeros_like(r)
            dxi = 4.0 * r / b**2
            for k in range(self.size):
                g = eval_jacobi(k, 0.0, l + 0.5, xi)
                g1 = _jacobi_d(k, 0.0, l + 0.5, xi, 1)
                f[:, k] = pw * g
                d1[:, k] = dpw * g + pw * g1 * dxi
        else:
            h = 2.0 / (b - self.a)
            xi = h * r - (self.a + b) / (b - self.a)
            for k in range(self.size):
                f[:, k] = eval_legendre(k, xi)
                d1[:, k] = _jacobi_d(k, 0.0, 0.0, xi, 1) * h
        return f * self.scale, d1 * self.scale


class RadialOperators:
    """Matrices for one harmonic degree ``l`` with ``n`` radial nodes.

    Attributes
    ----------
    gram : (n, n) exact ``L2(r**2 dr)`` Gram matrix of the scalar basis.
    grad_gram : (n_pot, n_pot) exact Gram matrix of gradients
        ``int (f' g' + l(l+1) f g / r**2) r**2 dr``.
    lap : (n, n_pot) coefficients of the projected Laplacian.
    val_b, dr_b, val_a, dr_a : boundary values and radial derivatives.
    integral : (n,) ``int f r**2 dr`` for the scalar basis.
    """

    def __init__(self, a, b, l, n):
        self.a, self.b, self.l, self.n = float(a), float(b), int(l), int(n)
        self.ball = self.a == 0.0
        self.n_pot = n + 1 if self.ball else n + 2
        self.basis = RadialBasis(self.a, self.b, l, self.n_pot)
        self.nodes, self.weights = gauss_nodes(self.a, self.b, n)
        f, d1 = self.basis.evaluate(self.nodes)
        self.sample = f[:, :n]
        self.sample_dr = d1
        self.sample_pot = f
        fb, db = self.basis.evaluate([self.b])
        self.val_b, self.dr_b = fb[0], db[0]
        if self.ball:
            self.val_a = np.zeros(self.n_pot)
            self.dr_a = np.zeros(self.n_pot)
        else:
            fa, da = self.basis.evaluate([self.a])
            self.val_a, self.dr_a = fa[0], da[0]
        rq, wq = line_rule(self.a, self.b, 2 * self.n_pot + l + 4)
        fq, dq = self.basis.evaluate(rq)
        wr = wq * rq**2
        self.quad_nodes, self.quad_weights, self.quad_vals = rq, wr, fq
        full_gram = (fq.T * wr) @ fq
        self.gram_pot = full_gram
        self.gram = full_gram[:n, :n]
        self.grad_gram = (dq.T * wr) @ dq + l * (l + 1) * (fq.T * wq) @ fq
        self.integral = (fq[:, :n].T * wr).sum(axis=1)
        self.integral_pot = (fq.T * wr).sum(axis=1)
        # weak Laplacian: (w_i, lap phi_k) = -(grad w_i, grad phi_k) + bdry
        weak = (-self.grad_gram[:n, :]
                + self.b**2 * np.outer(self.val_b[:n], self.dr_b)
                - self.a**2 * np.outer(self.val_a[:n], self.dr_a))
        self.weak_lap = weak
        self.lap = np.linalg.solve(self.gram, weak)
        self._solver = None
        self._from_samples = None

    def samples_to_coeffs(self, s):
        """Scalar coefficients interpolating samples (sample index last)."""
        if self._from_samples is None:
            self._from_samples = np.linalg.inv(self.sample)
        return s @ self._from_samples.T

    def neumann_matrix(self):
        """Square (or, for ``l == 0``, consistent) collocation-free system.

        Rows: projected Laplacian coefficients, then ``d/dr`` at ``a``
        (shell only) and at ``b``.
        """
        rows = [self.lap]
        if not self.ball:
            rows.append(self.dr_a[None, :])
        rows.append(self.dr_b[None, :])
        return np.vstack(rows)

    def neumann_solver(self):
        """Matrix mapping ``[lap coeffs, (dr_a), dr_b]`` to potential coeffs.

        For ``l == 0`` constants are removed and the volume mean of the
        result is zero; the system is then solved in the least-squares
        sense, which is exact for compatible data.
        """
        if self._solver is None:
            A = self.neumann_matrix()
            if self.l == 0:
                sol = np.zeros((self.n_pot, A.shape[0]))
                sol[1:] = np.linalg.pinv(A[:, 1:], rcond=1e-13)
                sol[0] -= (self.integral_pot @ sol) / self.integral_pot[0]
            else:
                sol = np.linalg.inv(A)
            self._solver = sol
        return self._solver


@lru_cache(maxsize=512)
def radial_operators(a, b, l, n):
    return RadialOperators(a, b, l, n)
