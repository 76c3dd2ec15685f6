import numpy as np
import pytest
from hypothesis import given, strategies as st

from stokeslp.symbols import (StokesSymbolParams, block_symbol, boundary_map, boundary_symbol,
                              deformation_conormal, double_layer_symbol, first_order_symbol, is_homogeneous,
                              stokes_symbol, stokes_symbol_inverse)

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])
V0S = [0.0, 0.5, 1.0, 10.0]


def _random_xi(rng, size, n=2):
    return rng.normal(size=(size, n)) * np.exp(rng.uniform(-2, 2, size=(size, 1)))


def test_zero_frequency_block():
    assert np.allclose(stokes_symbol(StokesSymbolParams(V=2, V0=3), np.zeros(2)), np.diag([2, 2, -3]))


def test_symbol_at_e1():
    expect = np.array([[2, 0, 1j], [0, 1, 0], [-1j, 0, 0]])
    assert np.allclose(stokes_symbol(StokesSymbolParams(), E1), expect)


def test_inverse_examples():
    inv0 = stokes_symbol_inverse(StokesSymbolParams(V0=0.0), E1)
    assert np.allclose(inv0, [[0, 0, 1j], [0, 1, 0], [-1j, 0, -2]])
    inv1 = stokes_symbol_inverse(StokesSymbolParams(V0=1.0), E1)
    assert np.allclose(inv1, [[1 / 3, 0, 1j / 3], [0, 1, 0], [-1j / 3, 0, -2 / 3]])


@pytest.mark.parametrize("V0", V0S)
@pytest.mark.parametrize("n", [2, 3])
def test_product_identity(V0, n, rng):
    xi = _random_xi(rng, 1000, n)
    p = StokesSymbolParams(V0=V0)
    assert np.abs(stokes_symbol(p, xi) @ stokes_symbol_inverse(p, xi) - np.eye(n + 1)).max() <= 1e-13


def test_symbol_self_adjoint(rng):
    xi = _random_xi(rng, 100)
    m = stokes_symbol(StokesSymbolParams(V=0.3, V0=2.0), xi)
    assert np.abs(m - np.conj(np.swapaxes(m, -1, -2))).max() == 0.0


def test_first_order_examples():
    d = (first_order_symbol("Def", E1) @ E2).reshape(2, 2)
    assert np.allclose(d, 0.5j * (np.outer(E1, E2) + np.outer(E2, E1)))
    assert np.allclose(first_order_symbol("Dnu", E1, E2), 0.5j * np.outer(E1, E2))
    comp = first_order_symbol("DefStar", E1) @ first_order_symbol("Def", E1)
    assert np.allclose(comp, np.diag([1.0, 0.5]))


def test_boundary_maps():
    nu = E2
    assert np.allclose(boundary_map("Grad", nu)[:, 0], nu)
    assert boundary_map("DivStar", nu) @ nu == pytest.approx(-1.0)


def test_deformation_conormal_is_minus_dnu(rng):
    for _ in range(20):
        nu = rng.normal(size=3)
        nu /= np.linalg.norm(nu)
        xi = rng.normal(size=3)
        assert np.allclose(deformation_conormal(nu, xi), -first_order_symbol("Dnu", xi, nu))


def test_block_examples(rng):
    assert np.allclose(block_symbol("A", StokesSymbolParams(V0=0.0), E1), np.diag([0.0, 1.0]))
    xi = _random_xi(rng, 100)
    p = StokesSymbolParams(V0=1.0)
    assert np.allclose(block_symbol("D", p, xi), -2 / 3)
    C, B = block_symbol("C", p, xi), block_symbol("B", p, xi)
    assert np.allclose(C, np.conj(np.swapaxes(B, -1, -2)))


@pytest.mark.parametrize("V0", V0S)
def test_blocks_are_leading_part_of_inverse(V0, rng):
    # at large |xi| the exact inverse approaches the homogeneous blocks
    xi = _random_xi(rng, 20) * 1e4
    p = StokesSymbolParams(V=1.0, V0=V0)
    inv = stokes_symbol_inverse(p, xi)
    r = np.sum(xi * xi, axis=-1)[:, None, None]
    assert np.abs(inv[:, :2, :2] - block_symbol("A", p, xi)).max() <= 1e-6 * np.abs(1 / r).max() * 1e2


def test_double_layer_at_normal():
    for V0 in V0S:
        nu = np.array([0.0, -1.0])
        mat, J = double_layer_symbol(StokesSymbolParams(V0=V0), nu, nu)
        assert np.allclose(mat, 1j * np.eye(2))
        assert np.allclose(J, -1j * np.eye(2))


@pytest.mark.parametrize("V0", V0S)
def test_double_layer_jump_limit(V0):
    nu = np.array([0.0, -1.0])
    p = StokesSymbolParams(V0=V0)
    # tau sigma_-1(P; xi' - tau nu) -> -i I for tau -> +inf and tau -> -inf
    for tau in (1e7, -1e7):
        mat, _ = double_layer_symbol(p, nu, np.array([0.7, 0.0]) - tau * nu)
        assert np.allclose(tau * mat, -1j * np.eye(2), atol=1e-6)


@pytest.mark.parametrize("V0", V0S)
def test_double_layer_composition(V0, rng):
    nu = np.array([0.0, -1.0])
    p = StokesSymbolParams(V0=V0)
    xi = _random_xi(rng, 50)
    A, B = block_symbol("A", p, xi), block_symbol("B", p, xi)
    expect = -2 * A @ first_order_symbol("DnuStar", xi, nu) + B * nu[None, None, :]
    assert np.allclose(double_layer_symbol(p, nu, xi)[0], expect, atol=1e-13)


def test_K_vanishes_at_V0_zero():
    assert np.abs(boundary_symbol("K", StokesSymbolParams(V0=0.0), [0.0, -1.0], [3.0, 0.0])).max() == 0.0


def test_K_eigenvalues_at_V0_one():
    k = boundary_symbol("K", StokesSymbolParams(V0=1.0), [0.0, -1.0], [3.0, 0.0])
    assert np.allclose(np.sort(np.linalg.eigvalsh(k)), [-1 / 6, 1 / 6])


def test_S_eigenvalues_3d():
    s = boundary_symbol("S", StokesSymbolParams(V0=0.0), [0.0, 0.0, -1.0], [0.6, 0.8, 0.0])
    assert np.allclose(np.sort(np.linalg.eigvalsh(s)), [0.25, 0.25, 0.5])


def test_K_3d_has_zero_eigenvalue():
    k = boundary_symbol("K", StokesSymbolParams(V0=1.0), [0.0, 0.0, -1.0], [1.0, 2.0, 0.0])
    ev = np.sort(np.linalg.eigvalsh(k))
    assert np.allclose(ev, [-1 / 6, 0.0, 1 / 6])


@given(st.floats(0, 1e6), st.floats(-50, 50).filter(lambda x: abs(x) > 1e-3))
def test_K_self_adjoint_and_bounded(V0, k):
    m = boundary_symbol("K", StokesSymbolParams(V0=V0), [0.0, -1.0], [k, 0.0])
    assert np.abs(m - m.conj().T).max() <= 1e-15
    assert np.linalg.norm(m, 2) < 0.25


@given(st.floats(0, 1e3), st.floats(-50, 50).filter(lambda x: abs(x) > 1e-3))
def test_S_spectrum_bounds(V0, k):
    p = StokesSymbolParams(V0=V0)
    m = boundary_symbol("S", p, [0.0, -1.0], [k, 0.0])
    ev = np.linalg.eigvalsh(m)
    a = abs(k)
    assert ev.min() >= (2 - p.f) / (4 * a) * (1 - 1e-12)
    assert ev.max() <= 2 / (4 * a) * (1 + 1e-12)


@given(st.floats(0, 1e4))
def test_f_g_identity(V0):
    p = StokesSymbolParams(V0=V0)
    assert abs(1 - 2 * p.f + p.g) <= 1e-15


@pytest.mark.parametrize("lam", [2.0, 10.0])
def test_homogeneity(lam, rng):
    p = StokesSymbolParams(V0=0.7)
    nu = np.array([0.0, -1.0])
    xi = _random_xi(rng, 10)
    for which, m in (("A", -2), ("B", -1), ("C", -1), ("D", 0)):
        assert is_homogeneous(lambda z: block_symbol(which, p, z), m, xi, lam) <= 1e-14
    assert is_homogeneous(lambda z: double_layer_symbol(p, nu, z)[0], -1, xi, lam) <= 1e-14
    xp = np.array([[1.3, 0.0], [-0.4, 0.0]])
    assert is_homogeneous(lambda z: boundary_symbol("K", p, nu, z), 0, xp, lam) <= 1e-14
    assert is_homogeneous(lambda z: boundary_symbol("S", p, nu, z), -1, xp, lam) <= 1e-14
    assert is_homogeneous(lambda z: boundary_symbol("C0", p, nu, z), 0, xp, lam) <= 1e-14
