import numpy as np
import pytest
from hypothesis import given, strategies as st

from stokeslp.spectral import TorusGrid
from stokeslp.stokes import (Profile, StokesParams, VelocityPressureField, apply_first_order, apply_xi,
                             bilinear_form, conormal, energy_report, fft, green_residuals, modal_matrix,
                             random_field, random_vp_field, strip_inner, torus_inner, trace_coeffs)

BUMP = Profile("bump", 1.0)


def _params(V=1.0, V0=1.0, N=32, n=2):
    return StokesParams(TorusGrid(n, N), V, V0)


def test_def_of_constant_field_vanishes():
    g = TorusGrid(2, 16)
    u = np.stack([np.full(g.shape, 2.0), np.full(g.shape, -1.0)])
    assert np.abs(apply_first_order("Def", u, g)).max() < 1e-14


def test_def_of_shear():
    g = TorusGrid(2, 32)
    x1, x2 = g.points
    u = np.stack([np.sin(x2), np.zeros(g.shape)])
    d = apply_first_order("Def", u, g)
    assert np.abs(d[0, 0]).max() < 1e-13 and np.abs(d[1, 1]).max() < 1e-13
    assert np.allclose(d[0, 1], 0.5 * np.cos(x2), atol=1e-13)
    assert np.allclose(d[1, 0], 0.5 * np.cos(x2), atol=1e-13)


def test_divstar_grad_is_minus_laplacian():
    g = TorusGrid(2, 32)
    p = np.cos(g.points[0])
    out = apply_first_order("DivStar", apply_first_order("Grad", p, g), g)
    assert np.allclose(out, p, atol=1e-13)


def test_xi_on_constant_pressure():
    p = _params(V=1.0, V0=2.5, N=16)
    U = VelocityPressureField.from_parts(p.grid, np.zeros((2,) + p.grid.shape), np.full(p.grid.shape, 3.0))
    XU = apply_xi(p, U)
    assert np.abs(XU.u).max() < 1e-14
    assert np.allclose(XU.p, -7.5)


def test_flat_kernel_fields():
    p = _params(V=0.0, V0=0.0, N=16)
    U = VelocityPressureField(p.grid, np.ones((3,) + p.grid.shape))
    assert np.abs(apply_xi(p, U).data).max() < 1e-14


def test_single_mode_matches_symbol():
    p = _params(V=0.0, V0=0.0, N=16)
    g = p.grid
    e = np.exp(1j * g.points[1])
    U = VelocityPressureField.from_parts(g, np.stack([e, 0 * e]), 0 * e)
    col = modal_matrix(0.0, 0.0, np.array([0.0, 1.0]))[:, 0]
    assert np.allclose(apply_xi(p, U).data, col[:, None, None] * e[None], atol=1e-13)


def test_conormal_of_pressure():
    p = _params(N=16)
    g = p.grid
    U = VelocityPressureField.from_parts(g, np.zeros((2,) + g.shape), 2.0 + np.cos(g.points[0]))
    for c in (0, 1):
        tr = trace_coeffs((2.0 + np.cos(g.points[0]))[None] * p.normal(c)[:, None, None], g, p.heights[c])
        assert np.allclose(conormal(p, U, c), tr, atol=1e-14)


def _fd4(f, h, axis):
    return (-np.roll(f, -2, axis) + 8 * np.roll(f, -1, axis) - 8 * np.roll(f, 1, axis) + np.roll(f, 2, axis)) / (12 * h)


def test_dnu_against_finite_differences():
    g = TorusGrid(2, 64)
    x1 = g.points[0]
    u = np.stack([np.sin(x1), np.cos(2 * x1)])
    nu = np.array([0.3, -0.8])
    nu_field = np.broadcast_to(nu[:, None, None], (2,) + g.shape)
    grad = np.stack([np.stack([_fd4(u[b], g.spacing, a) for b in range(2)]) for a in range(2)])
    expect = 0.5 * np.einsum("ab...,a->b...", grad + np.swapaxes(grad, 0, 1), nu)
    assert np.allclose(apply_first_order("Dnu", u, g, nu_field).real, expect, atol=1e-4)
    assert np.allclose(apply_first_order("Dnu", u, g, -nu_field), -apply_first_order("Dnu", u, g, nu_field))


def test_conormal_independent_of_extension(rng):
    p = _params(N=32)
    g = p.grid
    U = random_vp_field(g, 6, rng)
    alt = np.zeros((2,) + g.shape)
    alt[-1] = -np.cos(g.points[-1]) + np.sin(g.points[-1]) ** 2 * np.cos(3 * g.points[0])
    t = -2 * apply_first_order("Dnu", U.u, g, alt) + U.p[None] * alt
    for c in (0, 1):
        assert np.abs(trace_coeffs(t, g, p.heights[c]) - conormal(p, U, c)).max() < 1e-12


@given(st.integers(0, 2 ** 31 - 1))
def test_adjointness(seed):
    g = TorusGrid(2, 16)
    rng = np.random.default_rng(seed)
    u = random_field(g, 4, rng, real=False, components=2)
    T = random_field(g, 4, rng, real=False, components=4).reshape((2, 2) + g.shape)
    a = torus_inner(apply_first_order("Def", u, g), T, g)
    b = torus_inner(u, apply_first_order("DefStar", T, g), g)
    scale = np.sqrt(abs(torus_inner(u, u, g)) * abs(torus_inner(T, T, g)))
    assert abs(a - b) <= 1e-10 * scale
    q = random_field(g, 4, rng, real=False, components=1)[0]
    a = torus_inner(apply_first_order("Grad", q, g), u, g)
    b = torus_inner(q, apply_first_order("DivStar", u, g), g)
    assert abs(a - b) <= 1e-10 * np.sqrt(abs(torus_inner(q, q, g)) * abs(torus_inner(u, u, g)))


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([(0.0, 0.0), (1.0, 1.0), (1.0, BUMP)]))
def test_xi_formally_self_adjoint(seed, coef):
    p = _params(*coef, N=32)
    rng = np.random.default_rng(seed)
    U, W = random_vp_field(p.grid, 6, rng, real=False), random_vp_field(p.grid, 6, rng, real=False)
    a = torus_inner(apply_xi(p, U).data, W.data, p.grid)
    b = torus_inner(U.data, apply_xi(p, W).data, p.grid)
    assert abs(a - b) <= 1e-10 * max(abs(a), 1.0)


@pytest.mark.parametrize("coef", [(1.0, 1.0), (1.0, BUMP), (0.0, 0.0)])
def test_green_identity_one_same_field(coef, rng):
    p = _params(*coef, N=64)
    U = random_vp_field(p.grid, 8, rng)
    r = green_residuals(p, U, U)
    assert r.first <= 1e-8 and r.second <= 1e-8 and r.third <= 1e-5


def test_green_with_constant_pressure_test_field(rng):
    # W = (0, 1) with V0 = 0 on Omega: (T_nu U, 0) - (u, nu) + (Xi U, W) = 0
    p = _params(1.0, BUMP, N=64)
    g = p.grid
    U = random_vp_field(g, 6, rng)
    W = VelocityPressureField.from_parts(g, np.zeros((2,) + g.shape), np.ones(g.shape))
    r = green_residuals(p, U, W)
    # limited by the grid resolution of the bump profile at N = 64
    assert r.second <= 1e-8


def test_bilinear_form_without_velocity(rng):
    p = _params(1.0, 2.0, N=32)
    g = p.grid
    U = random_vp_field(g, 6, rng)
    U = VelocityPressureField.from_parts(g, np.zeros((2,) + g.shape), U.p)
    W = random_vp_field(g, 6, rng)
    expect = strip_inner(U.p, apply_first_order("DivStar", W.u, g), p) - strip_inner(2.0 * U.p, W.p, p)
    assert bilinear_form(p, U, W) == pytest.approx(expect, rel=1e-12)


def test_energy_report():
    p = _params(0.0, 0.0, N=16)
    U = VelocityPressureField(p.grid, np.ones((3,) + p.grid.shape))
    assert max(energy_report(p, U).as_tuple()) < 1e-12
    q = _params(1.0, BUMP, N=16)
    rep = energy_report(q, random_vp_field(q.grid, 4, np.random.default_rng(3)))
    assert min(rep.as_tuple()) >= 0.0


def test_classification():
    assert _params(0.0, 0.0).classification["kernel_case"] == 1
    assert _params(0.0, 1.0).classification["kernel_case"] == 2
    assert _params(1.0, 0.0).classification["kernel_case"] == 3
    assert _params(1.0, 1.0).classification["kernel_case"] == 4
    assert _params(1.0, BUMP).classification["V0_zero_on_omega"]


def test_bump_negligible_on_omega():
    x = np.linspace(0, np.pi, 200)
    assert BUMP(x).max() < 1e-12
