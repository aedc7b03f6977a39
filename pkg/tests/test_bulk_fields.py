import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as hst

from fluidmembrane.fields import (CompatibilityError, Potential, ToroidalField, VectorField,
                                  divergence, is_curl_free, normal_trace, random_toroidal,
                                  random_vector_field, solve_div_curl, solve_neumann_poisson)
from fluidmembrane.space import (DiscreteSpace, Geometry, ScalarBulkField, SpaceError,
                                 SurfaceField, mode_index)

R = sympy.symbols("r", positive=True)


def radial_laplacian(expr, l):
    """Symbolic ``f'' + 2 f'/r - l(l+1) f / r**2``."""
    return sympy.simplify(sympy.diff(expr, R, 2) + 2 * sympy.diff(expr, R) / R
                          - l * (l + 1) * expr / R**2)


def potential_mode(sp, l, m, f):
    """Potential ``f(r) Y_lm`` by projection of the radial profile."""
    r, w = sp.fine_radial
    ops = sp.radial(l)
    fv, _ = ops.basis.evaluate(r)
    c = np.zeros((sp.n_modes, sp.n_pot))
    c[mode_index(l, m)] = np.linalg.solve(ops.gram_pot, (fv.T * w) @ f(r))
    return Potential(sp, c)


def mode_profile(field, l, m, r):
    return field.values_at(r)[mode_index(l, m)]


def test_divergence_of_x_over_3(space):
    s = VectorField.position(space, 1.0 / 3.0)
    d = divergence(s)
    rr = np.linspace(space.a + 0.05, space.b, 7)
    assert np.allclose(mode_profile(d, 0, 0, rr), np.sqrt(4 * np.pi), atol=1e-10)
    assert np.abs(d.coeffs[1:]).max() < 1e-10


def test_divergence_of_toroidal_is_zero(space, rng):
    s = VectorField(space, None, random_toroidal(space, rng))
    assert np.abs(divergence(s).coeffs).max() == 0.0


@pytest.mark.parametrize("geo,power", [(Geometry.shell(0.5, 1.0), 3), (Geometry.ball(1.0), 4),
                                       (Geometry.ball(1.5), 6)])
def test_laplacian_against_symbolic_oracle(geo, power):
    sp = DiscreteSpace(geo, 3, 10)
    expr = R**power
    lap = sympy.lambdify(R, radial_laplacian(expr, 2), "numpy")
    f = sympy.lambdify(R, expr, "numpy")
    phi = potential_mode(sp, 2, 0, f)
    d = divergence(phi.gradient())
    rr = np.linspace(geo.a + 0.01, geo.b, 9)
    assert np.abs(mode_profile(d, 2, 0, rr) - lap(rr)).max() < 1e-8 * geo.b ** power


def test_normal_trace_examples():
    ball = DiscreteSpace(Geometry.ball(1.0), 2, 8)
    t = normal_trace(VectorField.position(ball))
    assert np.abs(t.coeffs - SurfaceField.constant(ball, 1.0).coeffs).max() < 1e-10
    shell = DiscreteSpace(Geometry.shell(0.5, 1.0), 2, 8)
    t0 = normal_trace(VectorField.position(shell), "inner")
    assert t0.radius == 0.5
    assert np.abs(t0.coeffs - SurfaceField.constant(shell, -0.5).coeffs).max() < 1e-10
    with pytest.raises(SpaceError):
        normal_trace(VectorField.position(ball), "inner")


def test_toroidal_fields_are_tangent(space, rng):
    s = VectorField(space, None, random_toroidal(space, rng))
    assert np.abs(normal_trace(s).coeffs).max() == 0.0
    if not space.is_ball:
        assert np.abs(normal_trace(s, "inner").coeffs).max() == 0.0


def test_gradient_is_curl_free_by_representation(space, rng):
    s = random_vector_field(space, rng).gradient_part
    assert np.all(s.toroidal.coeffs == 0.0)
    assert is_curl_free(s)


def test_neumann_zero_data_gives_zero(space):
    phi = solve_neumann_poisson(ScalarBulkField.zeros(space))
    assert np.abs(phi.coeffs).max() == 0.0


def test_div_curl_recovers_position():
    sp = DiscreteSpace(Geometry.ball(1.0), 2, 8)
    s = solve_div_curl(ScalarBulkField.constant(sp, 3.0), None, SurfaceField.constant(sp, -1.0))
    assert (s - VectorField.position(sp)).norm() < 1e-10
    phi = solve_neumann_poisson(ScalarBulkField.constant(sp, 3.0), None,
                                SurfaceField.constant(sp, -1.0))
    ref = potential_mode(sp, 0, 0, lambda r: -np.sqrt(4 * np.pi) * r**2 / 2).remove_mean()
    assert np.abs(phi.coeffs - ref.coeffs).max() < 1e-10


def test_div_curl_problem_minus_x_over_3():
    sp = DiscreteSpace(Geometry.ball(1.0), 2, 8)
    z1 = SurfaceField.constant(sp, sp.geometry.volume / sp.geometry.outer_area)
    s = solve_div_curl(ScalarBulkField.constant(sp, -1.0), None, z1)
    assert (s - VectorField.position(sp, -1.0 / 3.0)).norm() < 1e-10
    # quadrature route: divergence and trace sampled on the grids
    assert np.allclose(divergence(s).samples[0] / np.sqrt(4 * np.pi), -1.0, atol=1e-10)
    assert np.allclose(normal_trace(s).values(), -1.0 / 3.0, atol=1e-12)


def test_div_curl_homogeneous_returns_toroidal(space, rng):
    T = random_toroidal(space, rng)
    s = solve_div_curl(ScalarBulkField.zeros(space), None, None, T)
    assert (s - VectorField(space, None, T)).norm() < 1e-14


def test_manufactured_neumann_solution():
    sp = DiscreteSpace(Geometry.ball(1.0), 2, 10)
    c = sympy.Rational(7, 5)
    phi_s = R**3 - c * R
    w_s = -radial_laplacian(phi_s, 1)
    g1 = float(sympy.diff(phi_s, R).subs(R, 1))
    w = ScalarBulkField.from_radial(sp, {(1, 0): sympy.lambdify(R, w_s, "numpy")})
    g = np.zeros(sp.n_modes)
    g[mode_index(1, 0)] = g1
    # flux datum is d phi / d nu, which keeps int w + int g = 0
    phi = solve_neumann_poisson(w, None, SurfaceField(sp, g))
    ref = potential_mode(sp, 1, 0, sympy.lambdify(R, phi_s, "numpy"))
    assert np.abs(phi.coeffs - ref.coeffs).max() < 1e-8


def test_manufactured_neumann_solution_shell():
    sp = DiscreteSpace(Geometry.shell(0.5, 1.2), 3, 12)
    phi_s = sympy.exp(R / 2) * R**2
    w_s = -radial_laplacian(phi_s, 3)
    d = sympy.lambdify(R, sympy.diff(phi_s, R), "numpy")
    w = ScalarBulkField.from_radial(sp, {(3, -1): sympy.lambdify(R, w_s, "numpy")})
    g0 = np.zeros(sp.n_modes)
    g1 = np.zeros(sp.n_modes)
    g0[mode_index(3, -1)] = -d(0.5)      # d/dnu on the inner sphere is -d/dr
    g1[mode_index(3, -1)] = d(1.2)
    phi = solve_neumann_poisson(w, SurfaceField(sp, g0, 0.5), SurfaceField(sp, g1))
    rr = np.linspace(0.5, 1.2, 11)
    ref = sympy.lambdify(R, phi_s, "numpy")(rr)
    prof = mode_profile_pot(phi, 3, -1, rr)
    assert np.abs(prof - ref).max() < 1e-8


def mode_profile_pot(phi, l, m, r):
    fv, _ = phi.space.radial(l).basis.evaluate(r)
    return fv @ phi.coeffs[mode_index(l, m)]


def test_incompatible_data_rejected(space):
    with pytest.raises(CompatibilityError) as e:
        solve_div_curl(ScalarBulkField.constant(space, 1.0))
    assert e.value.defect == pytest.approx(space.geometry.volume)


def test_inner_data_on_ball_rejected():
    sp = DiscreteSpace(Geometry.ball(1.0), 1, 6)
    with pytest.raises(SpaceError):
        solve_neumann_poisson(ScalarBulkField.zeros(sp), SurfaceField.constant(sp, 1.0))


@given(hst.integers(0, 2**32 - 1), hst.sampled_from(["ball", "shell"]))
def test_divergence_theorem(seed, kind):
    geo = Geometry.ball(1.0) if kind == "ball" else Geometry.shell(0.4, 1.0)
    sp = DiscreteSpace(geo, 3, 10)
    s = random_vector_field(sp, np.random.default_rng(seed))
    flux = normal_trace(s).integrate()
    if not sp.is_ball:
        flux += normal_trace(s, "inner").integrate()
    lhs = divergence(s).integrate()
    assert abs(lhs - flux) <= 1e-9 * max(1.0, s.norm())


@given(hst.integers(0, 2**32 - 1), hst.sampled_from(["ball", "shell"]))
def test_div_curl_round_trip(seed, kind):
    geo = Geometry.ball(1.3) if kind == "ball" else Geometry.shell(0.5, 1.0)
    sp = DiscreteSpace(geo, 3, 10)
    rng = np.random.default_rng(seed)
    s0 = random_vector_field(sp, rng)
    w = divergence(s0)
    z1 = -normal_trace(s0)
    z0 = None if sp.is_ball else -normal_trace(s0, "inner")
    s = solve_div_curl(w, z0, z1, s0.toroidal)
    scale = max(1.0, s0.norm())
    assert (divergence(s) - w).norm() <= 1e-8 * scale
    assert (normal_trace(s) + z1).norm() <= 1e-8 * scale
    if z0 is not None:
        assert (normal_trace(s, "inner") + z0).norm() <= 1e-8 * scale
    # uniqueness: the field itself comes back
    assert (s - s0).norm() <= 1e-8 * scale


@given(hst.integers(0, 2**32 - 1))
def test_toroidal_sector_properties(seed):
    sp = DiscreteSpace(Geometry.shell(0.3, 1.0), 3, 8)
    T = random_toroidal(sp, np.random.default_rng(seed))
    s = VectorField(sp, None, T)
    assert divergence(s).norm() <= 1e-10
    assert normal_trace(s).norm() <= 1e-10
    assert normal_trace(s, "inner").norm() <= 1e-10
    assert ToroidalField(sp, T.coeffs).coeffs[0].max() == 0.0
