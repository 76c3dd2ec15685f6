import numpy as np
import pytest

from stokeslp.dense import expected_kernel_dim, kernel_basis, pseudo_inverse, pseudo_inverse_relations
from stokeslp.spectral import TorusGrid
from stokeslp.stokes import Profile, StokesParams, VelocityPressureField, apply_xi, random_vp_field

BUMP = Profile("bump", 1.0)


def _params(V, V0, N=16):
    return StokesParams(TorusGrid(2, N), V, V0)


@pytest.mark.parametrize("V,V0,dim", [(0.0, 0.0, 3), (0.0, 1.0, 2), (1.0, 0.0, 1), (1.0, 1.0, 0)])
def test_kernel_dimension(V, V0, dim):
    ks = kernel_basis(_params(V, V0), route="dense")
    assert ks.dim == dim == expected_kernel_dim(ks.case, 2)
    assert ks.residual <= 1e-8


def test_flat_kernel_is_constants():
    ks = kernel_basis(_params(0.0, 0.0), route="dense")
    for b in ks.basis:
        assert np.abs(b.data - b.data[:, :1, :1]).max() < 1e-10
    ks3 = kernel_basis(_params(1.0, 0.0), route="dense")
    b = ks3.basis[0].data
    assert np.abs(b[:2]).max() < 1e-10 and np.abs(b[2] - b[2, 0, 0]).max() < 1e-10


@pytest.mark.parametrize("V,V0", [(0.0, 0.0), (1.0, 0.0), (0.0, BUMP), (1.0, 1.0)])
def test_pseudo_inverse_relations(V, V0):
    p = _params(V, V0)
    ks = kernel_basis(p)
    rel = pseudo_inverse_relations(p, pseudo_inverse(p), ks, samples=20)
    assert max(rel.values()) <= 1e-8


def test_zero_input():
    p = _params(1.0, 1.0)
    F = VelocityPressureField(p.grid, np.zeros((3,) + p.grid.shape))
    assert np.abs(pseudo_inverse(p).apply(F).data).max() == 0.0


def test_left_inverse(rng):
    p = _params(1.0, 0.0)
    ks = kernel_basis(p)
    G = random_vp_field(p.grid, 4, rng)
    G = G - ks.project(G)
    back = pseudo_inverse(p).apply(apply_xi(p, G))
    assert np.abs(back.data - G.data).max() <= 1e-8


@pytest.mark.parametrize("V,V0", [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])
def test_constant_and_dense_routes_agree(V, V0, rng):
    p = _params(V, V0)
    F = random_vp_field(p.grid, 4, rng)
    a = pseudo_inverse(p, "modal").apply(F)
    b = pseudo_inverse(p, "dense").apply(F)
    assert np.abs(a.data - b.data).max() <= 1e-8
