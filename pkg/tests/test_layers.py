import numpy as np
import pytest
from hypothesis import given, strategies as st

from stokeslp.checks import symbol_deviation
from stokeslp.layers import (BoundaryOperatorMatrix, LayerEngine, adjoint_restriction_check, distribution_pairing,
                             embed_density, jump_residuals, normal_density, pompeiu_residual, random_density,
                             weak_layer_residual)
from stokeslp.spectral import SpectralField, TorusGrid, mode_sum, sobolev_norm
from stokeslp.stokes import (BoundaryDensity, Profile, StokesParams, VelocityPressureField, modal_matrix,
                             random_field, random_vp_field, trace_coeffs)

BUMP = Profile("bump", 1.0)


def _engine(V, V0, N):
    return LayerEngine(StokesParams(TorusGrid(2, N), V, V0))


@pytest.fixture(scope="module")
def eng11():
    return _engine(1.0, 1.0, 32)


@pytest.fixture(scope="module")
def eng_bump():
    return _engine(1.0, BUMP, 32)


def test_embed_constant_density():
    g = TorusGrid(2, 16)
    h = BoundaryDensity.zeros(2, 16)
    a = np.array([0.3, -1.2])
    h.coeffs[0, :, 0] = a
    c = embed_density(h, g)
    assert np.allclose(c[:, 0, :], a[:, None] / (2 * np.pi))
    assert np.abs(c[:, 1:, :]).max() == 0.0


def test_distribution_pairing(rng):
    g = TorusGrid(2, 16)
    for _ in range(20):
        h = random_density(2, 16, 4, rng, real=False)
        phi = random_field(g, 4, rng, real=False, components=2)
        k = BoundaryDensity(2, 16, np.stack([trace_coeffs(phi, g, z) for z in (0.0, np.pi)]))
        assert distribution_pairing(embed_density(h, g), phi, g) == pytest.approx(h.inner(k), abs=1e-12)


def test_delta_sobolev_growth(rng):
    g = TorusGrid(2, 64)
    h = BoundaryDensity(2, 64, rng.normal(size=(2, 2, 64)))
    F = SpectralField(g, embed_density(h, g))
    vals = [sobolev_norm(F, s) for s in (-0.8, -0.6, -0.51)]
    assert np.all(np.isfinite(vals)) and vals[0] < vals[1] < vals[2]


def test_single_layer_single_mode(eng11):
    h = BoundaryDensity.zeros(2, 32)
    j = eng11.mode_index([2])
    h.coeffs[0, :, j] = [0.4, 1.0 - 0.3j]
    x = 1.1
    got = eng11.potential("single", h).profile([x], "velocity")[0, :, j]

    def term(k):
        xi = np.stack([np.full(k.shape, 2.0), k.astype(float)], axis=-1)
        A = np.linalg.inv(modal_matrix(1.0, 1.0, xi))[:, :2, :2]
        return (A @ h.coeffs[0, :, j]) * (np.exp(1j * k * x) / (2 * np.pi))[:, None]
    expect = mode_sum(term, 2 ** 17).value
    assert np.abs(got - expect).max() <= 1e-8


def test_single_layer_solves_weakly(eng11, rng):
    g = eng11.params.grid
    h = random_density(2, 32, 4, rng)
    phi = random_vp_field(g, 6, rng)
    assert weak_layer_residual(eng11, "single", h, phi)["residual"] <= 1e-6
    assert weak_layer_residual(eng11, "double", h, phi)["residual"] <= 1e-6


def test_double_layer_pressure_defect(rng):
    eng = _engine(1.0, 0.0, 16)
    g = eng.params.grid
    h = random_density(2, 16, 3, rng)
    phi = np.zeros((3,) + g.shape)
    phi[2] = 1.0
    r = weak_layer_residual(eng, "double", h, VelocityPressureField(g, phi))
    # the kernel projection removes (1 / vol) int h . nu from the pressure equation
    assert r["kernel_term"] == pytest.approx(h.normal_flux(), abs=1e-12)
    assert abs(r["lhs"]) <= 1e-12


@pytest.mark.parametrize("V0", [0.0, 1.0])
def test_symbol_decay(V0):
    eng = _engine(1.0, V0, 64)
    for which in ("K", "S"):
        d = [symbol_deviation(eng, which, k) for k in (4, 8, 16)]
        assert d[1] <= 0.75 * d[0] and d[2] <= 0.75 * d[1]


def test_K_vanishes_to_leading_order_at_V0_zero():
    eng = _engine(1.0, 0.0, 64)
    j8, j16 = eng.mode_index([8]), eng.mode_index([16])
    n8 = np.abs(eng.block(j8, "K")[:2, :2]).max()
    n16 = np.abs(eng.block(j16, "K")[:2, :2]).max()
    assert n16 <= 0.75 * n8


@pytest.mark.parametrize("coef", [(1.0, 1.0), (1.0, BUMP), (0.0, 1.0)])
def test_adjoint_structure(coef):
    eng = _engine(*coef, 16)
    r = adjoint_restriction_check(eng)
    assert r["K_adjoint"] <= 1e-8 and r["S_hermitian"] <= 1e-8


def test_K_eigenvalues_at_mode_16():
    eng = _engine(1.0, 1.0, 64)
    ev = np.sort(np.linalg.eigvals(eng.block(eng.mode_index([16]), "K")[:2, :2]).real)
    assert np.abs(ev - np.array([-1 / 6, 1 / 6])).max() <= 1 / 16


@pytest.mark.parametrize("coef", [(1.0, 1.0), (1.0, BUMP)])
def test_jump_relations(coef, rng):
    eng = _engine(*coef, 64)
    rep = jump_residuals(eng, random_density(2, 64, 6, rng))
    assert max(rep.residuals.values()) <= 1e-4
    assert max(rep.side_differences.values()) <= 1e-4
    assert rep.trace_method_gap <= 1e-6


def test_pompeiu_bump_in_complement():
    eng = _engine(1.0, 1.0, 64)
    g = eng.params.grid
    prof = Profile("bump", 1.0)(g.points[1])
    data = np.stack([prof * np.cos(g.points[0]), prof, prof * np.sin(g.points[0])])
    r = pompeiu_residual(eng, VelocityPressureField(g, data))
    assert r["inside"] <= 1e-6 and r["outside"] <= 1e-6


@pytest.mark.parametrize("N,tol", [(64, 1e-4), (128, 1e-5)])
def test_pompeiu_random(N, tol):
    eng = _engine(1.0, 1.0, N)
    U = random_vp_field(eng.params.grid, 4, np.random.default_rng(5))
    r = pompeiu_residual(eng, U)
    assert max(r.values()) <= tol


def test_pompeiu_kernel_field():
    eng = _engine(0.0, 0.0, 32)
    g = eng.params.grid
    U = VelocityPressureField(g, np.ones((3,) + g.shape))
    assert max(pompeiu_residual(eng, U).values()) <= 1e-6


def test_operator_algebra_and_text(eng11):
    K = eng11.operator("K")
    ident = (K + 0.5) - (K - 0.5)
    assert np.allclose(ident.dense(), np.eye(ident.dense().shape[0]))
    assert np.allclose(K.adjoint().adjoint().dense(), K.dense())
    back = BoundaryOperatorMatrix.from_text(K.to_text())
    assert np.abs(back.dense() - K.dense()).max() <= 1e-15 * np.abs(K.dense()).max()


def test_variable_transverse_coefficient_rejected():
    g = TorusGrid(2, 16)
    V = 1.0 + 0.1 * np.cos(g.points[0])
    with pytest.raises(NotImplementedError):
        LayerEngine(StokesParams(g, V, 1.0)).operator("K")


@given(st.integers(0, 2 ** 31 - 1))
def test_image_of_half_plus_K_orthogonal_to_nu(eng_bump, seed):
    h = random_density(2, 32, 4, np.random.default_rng(seed))
    img = (eng_bump.operator("K") + 0.5).apply_density(h)
    nu = normal_density(2, 32)
    assert abs(img.inner(nu)) <= 1e-6 * h.norm() * nu.norm()


@given(st.integers(0, 2 ** 31 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_operator_linearity(eng11, seed, c):
    rng = np.random.default_rng(seed)
    h, k = random_density(2, 32, 4, rng), random_density(2, 32, 4, rng)
    S = eng11.operator("S")
    lhs = S.apply(h.scaled(c) + k)
    rhs = c * S.apply(h) + S.apply(k)
    assert np.abs(lhs - rhs).max() <= 1e-12 * (1 + abs(c))
