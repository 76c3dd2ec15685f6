"""n = 3 smoke tests at N = 16."""
import numpy as np
import pytest

from stokeslp.bvp import DirichletProblem, solve_dirichlet
from stokeslp.dense import kernel_basis
from stokeslp.layers import LayerEngine, adjoint_restriction_check, jump_residuals, random_density
from stokeslp.spectral import TorusGrid
from stokeslp.stokes import StokesParams, green_residuals, random_vp_field


@pytest.fixture(scope="module")
def eng():
    return LayerEngine(StokesParams(TorusGrid(3, 16), 1.0, 1.0))


def test_green_3d(eng):
    rng = np.random.default_rng(0)
    U, W = random_vp_field(eng.params.grid, 3, rng), random_vp_field(eng.params.grid, 3, rng)
    r = green_residuals(eng.params, U, W)
    assert max(r.first, r.second, r.third) <= 1e-10


def test_kernel_3d():
    assert kernel_basis(StokesParams(TorusGrid(3, 8), 0.0, 0.0), route="dense").dim == 4


def test_jumps_and_adjoints_3d(eng):
    rep = jump_residuals(eng, random_density(3, 16, 2, np.random.default_rng(1)), check_extrapolation=False)
    assert max(rep.residuals.values()) <= 1e-4
    assert max(rep.side_differences.values()) <= 1e-12
    r = adjoint_restriction_check(eng)
    assert r["K_adjoint"] <= 1e-8 and r["S_hermitian"] <= 1e-8


def test_dirichlet_3d(eng):
    f = random_density(3, 16, 2, np.random.default_rng(2))
    assert solve_dirichlet(DirichletProblem(eng, f)).diagnostics["trace_error"] <= 1e-4
