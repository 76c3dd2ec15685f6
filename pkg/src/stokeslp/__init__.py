"""Layer potentials for the generalized Stokes system on the flat torus.

The boundary is the pair of hyperplanes x_n = 0 and x_n = pi in T^n; the
operator is Xi = (2 Def* Def + V, grad; grad*, -V0) with V, V0 constant
or depending on x_n only.
"""
from .bvp import (DirichletProblem, DirichletSolution, dtn, field_distance, no_jump_check,
                  operator_spectrum, solve_dirichlet, stability_constant)
from .config import ConfigError, RunConfig, load_config
from .dense import SolverError, expected_kernel_dim, kernel_basis, pseudo_inverse
from .lateral import (ModelSymbol, jump_coefficients, restriction_symbol, stokes_double_layer_model,
                      verify_lateral_limits)
from .layers import (BoundaryOperatorMatrix, LayerEngine, PotentialField, boundary_operator,
                     jump_residuals, random_density)
from .spectral import QuadratureSpec, TorusGrid, line_quadrature, richardson_mode_sum
from .stokes import BoundaryDensity, Profile, StokesParams, VelocityPressureField, green_residuals
from .symbols import StokesSymbolParams, boundary_symbol, stokes_symbol, stokes_symbol_inverse

__version__ = "0.1.0"
