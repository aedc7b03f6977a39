"""Independent oracles for the evolution engine.

``reference_oracle`` propagates the dense first-order system with the
classical fourth-order Runge-Kutta method. Since the system is linear and
autonomous, ``n`` RK4 steps equal the ``n``-th power of the stability
polynomial ``R(hA)``, which is applied by repeated squaring.

``dispersion_roots`` solves the time-harmonic characteristic equation on a
ball with constant coefficients by an argument-principle scan followed by
Newton refinement.
"""

import warnings

import numpy as np
from scipy.optimize import newton
from scipy.special import spherical_jn

from .dynamics import PotentialState, assemble_dense
from .space import ScalarBulkField, SpaceError, SurfaceField

ORACLE_MAX_L = 4
ORACLE_MAX_NR = 32


def rk4_matrix(A, h):
    """Stability polynomial ``I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24``."""
    N = A.shape[0]
    X = h * A
    X2 = X @ X
    return np.eye(N) + X + X2 / 2.0 + X2 @ X / 6.0 + X2 @ X2 / 24.0


def matrix_power(R, n):
    out = np.eye(R.shape[0])
    base = R.copy()
    while n:
        if n & 1:
            out = out @ base
        base = base @ base
        n >>= 1
    return out


def dense_first_order(coeffs):
    M, G, K = assemble_dense(coeffs)
    N = M.shape[0]
    Minv = np.linalg.inv(M)
    return np.block([[np.zeros((N, N)), np.eye(N)], [-Minv @ K, -Minv @ G]])


def pack(state):
    return np.concatenate([state.u.coeffs.ravel(), state.v.coeffs,
                           state.u_t.coeffs.ravel(), state.v_t.coeffs])


def unpack(y, space, t=0.0):
    n, nm = space.n_r, space.n_modes
    N = nm * n + nm
    q, p = y[:N], y[N:]
    return PotentialState(ScalarBulkField(space, q[: nm * n].reshape(nm, n)),
                          SurfaceField(space, q[nm * n:]),
                          ScalarBulkField(space, p[: nm * n].reshape(nm, n)),
                          SurfaceField(space, p[nm * n:]), t)


def reference_oracle(initial, T, coeffs, dt_ref=1e-5):
    """Potential state at time ``T`` from the dense RK4 reference.

    Raises
    ------
    SpaceError
        If ``l_max > 4`` or ``n_r > 32``.
    """
    sp = coeffs.space
    if sp.l_max > ORACLE_MAX_L or sp.n_r > ORACLE_MAX_NR:
        raise SpaceError(f"reference oracle limited to l_max <= {ORACLE_MAX_L}, "
                         f"n_r <= {ORACLE_MAX_NR}")
    n = int(round(T / dt_ref))
    if abs(n * dt_ref - T) > 1e-9 * max(T, dt_ref):
        raise ValueError("T must be a multiple of dt_ref")
    A = dense_first_order(coeffs)
    R = matrix_power(rk4_matrix(A, dt_ref), n)
    return unpack(R @ pack(initial), sp, initial.t + T)


# -- dispersion relation -----------------------------------------------------------

def characteristic(omega, l, rho0, B, mu, sigma, delta, kappa, b):
    """Characteristic function whose zeros are the frequencies of degree ``l``.

    With ``u = j_l(k r) Y exp(i omega t)`` and ``k = omega sqrt(rho0/B)``:
    ``(-mu w^2 + sigma l(l+1)/b^2 + i w delta + kappa) k j_l'(k b) - rho0 w^2 j_l(k b)``.
    """
    omega = np.asarray(omega, dtype=complex)
    k = omega * np.sqrt(rho0 / B)
    mem = -mu * omega**2 + sigma * l * (l + 1) / b**2 + 1j * omega * delta + kappa
    return (mem * k * spherical_jn(l, k * b, derivative=True)
            - rho0 * omega**2 * spherical_jn(l, k * b))


def _winding(f, x0, x1, y0, y1, m=64):
    """Number of zeros of ``f`` inside the rectangle (argument principle)."""
    s = np.linspace(0.0, 1.0, m, endpoint=False)
    pts = np.concatenate([x0 + (x1 - x0) * s + 1j * y0,
                          x1 + 1j * (y0 + (y1 - y0) * s),
                          x1 - (x1 - x0) * s + 1j * y1,
                          x0 + 1j * (y1 - (y1 - y0) * s)])
    v = f(pts)
    if np.any(v == 0) or not np.all(np.isfinite(v)):
        return None
    ang = np.angle(np.concatenate([v, v[:1]]))
    d = np.diff(ang)
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    if np.max(np.abs(d)) > 2.5:
        return None
    return int(round(np.sum(d) / (2.0 * np.pi)))


def _isolate(f, box, depth, found, tol):
    x0, x1, y0, y1 = box
    # an unreliable winding count (None) falls through to subdivision
    w = _winding(f, x0, x1, y0, y1)
    if w == 0:
        return
    if (w == 1 and (x1 - x0) < 0.5) or depth == 0:
        z0 = 0.5 * (x0 + x1) + 0.5j * (y0 + y1)
        try:
            z = newton(f, z0, tol=tol, maxiter=200)
        except RuntimeError:
            return
        found.append(complex(z))
        return
    xm, ym = 0.5 * (x0 + x1) + 1e-7, 0.5 * (y0 + y1) + 1.3e-7
    for b in ((x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)):
        _isolate(f, b, depth - 1, found, tol)


def dispersion_roots(coeffs, l, re_max=None, im_max=None, count=None):
    """Roots with positive real part of the characteristic equation.

    Requires a ball and constant coefficients. Roots are searched in
    ``0 < Re w < re_max``, ``|Im w| < im_max``; the window doubles (with a
    warning) while no root is found. Sorted by modulus; zero is excluded.
    """
    sp = coeffs.space
    if not sp.is_ball:
        raise SpaceError("dispersion roots are available for the ball only")
    if not coeffs.is_constant:
        raise ValueError("dispersion roots need constant coefficients")
    par = dict(rho0=coeffs.rho0, B=coeffs.B, mu=coeffs.constant_value("mu"),
               sigma=coeffs.constant_value("sigma"), delta=coeffs.constant_value("delta"),
               kappa=coeffs.constant_value("kappa"), b=sp.b)
    par = {k: float(np.real(v)) for k, v in par.items()}
    c = np.sqrt(par["B"] / par["rho0"])
    if re_max is None:
        re_max = 12.0 * c / par["b"] + 2.0
    if im_max is None:
        im_max = 2.0 + 2.0 * par["delta"] / par["mu"]

    def f(w):
        return characteristic(w, l, **par)

    def df(w, h=1e-6):
        return (f(w + h) - f(w - h)) / (2 * h)

    for _ in range(6):
        found = []
        _isolate(f, (1e-3, re_max, -im_max, im_max), 10, found, 1e-14)
        roots = []
        for z in found:
            if abs(z) < 1e-6 or z.real <= 0:
                continue
            # polish
            for _ in range(5):
                d = df(z)
                if d == 0:
                    break
                z = z - f(z) / d
            if not any(abs(z - r) < 1e-8 * max(1.0, abs(z)) for r in roots):
                roots.append(z)
        if roots:
            roots.sort(key=abs)
            return roots[:count] if count else roots
        warnings.warn("no dispersion roots in the scan window; widening it")
        re_max *= 2.0
        im_max *= 2.0
    return []
