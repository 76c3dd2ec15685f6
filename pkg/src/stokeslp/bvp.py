"""Dirichlet problem on the strip by boundary integral equations, DtN map and spectra.

Per transverse mode the boundary operators are 2n x 2n blocks (both
components of Gamma), so every solve is a small dense factorization
followed by one step of iterative refinement.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dense import SolverError
from .layers import LayerEngine, PotentialField, normal_density
from .stokes import BoundaryDensity

SINGULAR_TOL = 1e-8
KERNEL_TOL = 1e-6


class GaugeError(ValueError):
    """Dirichlet datum violates the flux condition (f, nu) = 0 required when V0 = 0 on Omega."""


@dataclass
class DirichletProblem:
    engine: LayerEngine
    f: BoundaryDensity
    gauge: bool = True
    strict: bool = False

    @property
    def needs_flux_condition(self) -> bool:
        return self.engine.V0_ref == 0.0 and self.engine.params.classification["V0_zero_on_omega"]


@dataclass
class DirichletSolution:
    potential: PotentialField
    density: BoundaryDensity
    route: str
    diagnostics: dict = field(default_factory=dict)


def _block_solve(blocks: np.ndarray, rhs: np.ndarray, name: str) -> np.ndarray:
    """Solve blocks[j] x_j = rhs[:, j]; singular blocks get the minimum-norm solution."""
    out = np.zeros_like(rhs)
    for j, A in enumerate(blocks):
        b = rhs[:, j]
        if not np.any(b):
            continue
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] > SINGULAR_TOL * s[0]:
            x = np.linalg.solve(A, b)
            x = x + np.linalg.solve(A, b - A @ x)
        else:
            pinv = np.linalg.pinv(A, rcond=SINGULAR_TOL)
            x = pinv @ b
            x = x + pinv @ (b - A @ x)
            if np.linalg.norm(A @ x - b) > 1e-6 * np.linalg.norm(b):
                raise SolverError(f"{name} block {j} is singular and the datum is not in its range; "
                                  f"singular values {s}", float(s[0] / max(s[-1], 1e-300)))
        out[:, j] = x
    return out


def _stack(h: BoundaryDensity) -> np.ndarray:
    return np.concatenate([h.coeffs[0], h.coeffs[1]], axis=0)


def _unstack(x: np.ndarray, n: int, N: int) -> BoundaryDensity:
    return BoundaryDensity(n, N, x.reshape(2, n, -1))


def enforce_flux(problem: DirichletProblem) -> BoundaryDensity:
    f = problem.f
    if not problem.needs_flux_condition:
        return f
    nu = normal_density(f.n, f.N)
    flux = f.inner(nu)
    if abs(flux) <= 1e-10 * max(f.norm() * nu.norm(), 1e-300):
        return f
    if problem.strict:
        raise GaugeError(f"(f, nu) = {abs(flux):.3e} but V0 = 0 on Omega requires zero flux")
    warnings.warn(f"projecting out the flux (f, nu) = {abs(flux):.3e} of the Dirichlet datum")
    return f - nu.scaled(flux / nu.inner(nu))


def solve_dirichlet(problem: DirichletProblem, route: str = "double_layer",
                    operator_route: str = "modal") -> DirichletSolution:
    """U = D((1/2 + K)^(-1) f) or U = S(S^(-1) f), gauged to mean-zero pressure when needed."""
    eng = problem.engine
    f = enforce_flux(problem)
    if route == "double_layer":
        A = eng.operator("K", "principal", operator_route) + 0.5
        kind = "double"
    elif route == "single_layer":
        A = eng.operator("S", "principal", operator_route)
        kind = "single"
    else:
        raise ValueError(f"unknown route {route!r}")
    x = _block_solve(A.blocks, _stack(f), A.which)
    phi = _unstack(x, eng.n, eng.N)
    U = eng.potential(kind, phi)
    if problem.gauge and problem.needs_flux_condition:
        U.pressure_shift = -U.pressure_mean()
    fn = max(f.norm(), 1e-300)
    algebraic = float(np.linalg.norm(np.einsum("jab,bj->aj", A.blocks, x) - _stack(f)) / fn)
    trace = U.trace_density("interior", "velocity")
    diag = {"trace_error": (trace - f).norm() / fn, "algebraic_residual": algebraic,
            "pressure_mean": abs(U.pressure_mean())}
    return DirichletSolution(U, phi, route, diag)


# ---------------------------------------------------------------- norms on Omega

def _omega_quadrature(L: float, points: int = 64):
    x, w = np.polynomial.legendre.leggauss(points)
    return 0.5 * L * (x + 1), 0.5 * L * w


def omega_sobolev_norm(U: PotentialField, s: int, target: str = "velocity", subtract_mean: bool = False,
                       points: int = 64) -> float:
    """H^s(Omega) norm, sum_j sum_xi' <xi'>^(2(s-j)) int_0^L |d_n^j U^(xi', x)|^2 (2 pi)^(n-1) dx."""
    eng = U.engine
    x, w = _omega_quadrature(eng.L, points)
    brk = 1.0 + np.sum(eng.modes.astype(float) ** 2, axis=1)
    zero = eng.mode_index(np.zeros(eng.n - 1))
    total = 0.0
    for j in range(s + 1):
        prof = U.profile(x, target, deriv=j)  # (T, rows, M)
        if subtract_mean and j == 0:
            mean = np.sum(w[:, None] * prof[:, :, zero], axis=0) / eng.L
            prof = prof.copy()
            prof[:, :, zero] -= mean[None]
        dens = np.sum(w[:, None, None] * np.abs(prof) ** 2, axis=(0, 1))
        total += float(np.sum(brk ** (s - j) * dens))
    return float(np.sqrt((2 * np.pi) ** (eng.n - 1) * total))


def field_distance(U1: PotentialField, U2: PotentialField, points: int = 64) -> dict:
    """L2(Omega) distances of velocities and pressures, and of pressures up to a constant."""
    eng = U1.engine
    diff = U1 - U2
    x, w = _omega_quadrature(eng.L, points)
    prof = diff.profile(x, "full")
    zero = eng.mode_index(np.zeros(eng.n - 1))
    c = (2 * np.pi) ** (eng.n - 1)
    vel = np.sqrt(c * np.sum(w[:, None, None] * np.abs(prof[:, :eng.n]) ** 2))
    p = prof[:, eng.n].copy()
    pres = np.sqrt(c * np.sum(w[:, None] * np.abs(p) ** 2))
    const = np.sum(w * p[:, zero]) / eng.L
    p[:, zero] -= const
    pres_mod = np.sqrt(c * np.sum(w[:, None] * np.abs(p) ** 2))
    scale = np.sqrt(c * np.sum(w[:, None, None] * np.abs(U1.profile(x, "full")) ** 2))
    return {"velocity": float(vel / scale), "pressure": float(pres / scale),
            "pressure_mod_constant": float(pres_mod / scale), "constant": complex(const)}


def stability_constant(problem: DirichletProblem, m: int, route: str = "double_layer") -> float:
    """(||u||_{H^{m+1}} + ||p - mean||_{H^m}) / ||f||_{H^{m+1/2}} for the solution of the problem."""
    sol = solve_dirichlet(problem, route)
    U = sol.potential
    num = omega_sobolev_norm(U, m + 1, "velocity") + omega_sobolev_norm(U, m, "pressure", subtract_mean=True)
    return num / problem.f.sobolev_norm(m + 0.5)


# ---------------------------------------------------------------- DtN

@dataclass
class DtNResult:
    value: BoundaryDensity
    residual: float
    residual_ungauged: float
    solution: DirichletSolution


def dtn(engine: LayerEngine, f: BoundaryDensity, operator_route: str = "modal") -> DtNResult:
    """N f = [T_nu U_0]_+ for the gauged solution U_0, with ||S N f - (-1/2 + K) f|| / ||f||."""
    prob = DirichletProblem(engine, f)
    sol = solve_dirichlet(prob, "double_layer", operator_route)
    U = sol.potential
    val = U.trace_density("interior", "traction")
    raw = PotentialField(engine, U.terms).trace_density("interior", "traction")
    S = engine.operator("S", "principal", operator_route)
    K = engine.operator("K", "principal", operator_route)
    fn = max(f.norm(), 1e-300)
    target = K.apply(f) - 0.5 * f.coeffs
    res = BoundaryDensity(f.n, f.N, S.apply(val) - target).norm() / fn
    res_raw = BoundaryDensity(f.n, f.N, S.apply(raw) - target).norm() / fn
    return DtNResult(val, res, res_raw, sol)


def no_jump_check(engine: LayerEngine, f: BoundaryDensity, operator_route: str = "modal") -> dict:
    """[T_nu D f]_+ = [T_nu D f]_- = (1/2 + K*) N f, residuals relative to ||f||.

    "plus" and "minus" compare each one-sided traction with (1/2 + K*) N f;
    "jump" is the direct difference of the two one-sided tractions.
    """
    fn = f.norm()
    if fn == 0:
        return {"plus": 0.0, "minus": 0.0, "jump": 0.0}
    Nf = dtn(engine, f, operator_route).value
    Ks = engine.operator("Kstar", "principal", operator_route)
    rhs = Ks.apply(Nf) + 0.5 * Nf.coeffs
    D = engine.potential("double", f)
    tp = D.trace_density("interior", "traction").coeffs
    tm = D.trace_density("exterior", "traction").coeffs
    norm = lambda a: BoundaryDensity(f.n, f.N, a).norm() / fn  # noqa: E731
    return {"plus": norm(tp - rhs), "minus": norm(tm - rhs), "jump": norm(tp - tm)}


# ---------------------------------------------------------------- spectra

@dataclass
class OperatorSpectrum:
    name: str
    singular_values: np.ndarray
    kernel_dim: int
    condition: float
    nu_correlation: float = float("nan")
    restricted_min: float = float("nan")

    @property
    def smallest(self) -> float:
        return float(self.singular_values[0])


@dataclass
class SpectrumReport:
    S: OperatorSpectrum
    half_plus_K: OperatorSpectrum
    adjoint_kernel_dim: int
    case: str

    def as_dict(self) -> dict:
        out = {"case": self.case, "adjoint_kernel_dim": self.adjoint_kernel_dim}
        for op in (self.S, self.half_plus_K):
            out[op.name] = {"kernel_dim": op.kernel_dim, "smallest": op.smallest,
                            "second": float(op.singular_values[1]), "condition": op.condition,
                            "nu_correlation": op.nu_correlation, "restricted_min": op.restricted_min}
        return out


def _nu_vector(n: int) -> np.ndarray:
    v = np.zeros(2 * n, dtype=complex)
    v[n - 1], v[2 * n - 1] = -1.0, 1.0
    return v / np.sqrt(2.0)


def _spectrum(name, op, zero: int, n: int) -> OperatorSpectrum:
    sv = op.singular_values()
    top = sv[-1]
    kdim = int(np.sum(sv <= KERNEL_TOL * top))
    cond = float(top / sv[kdim]) if kdim < sv.size else float("inf")
    B = op.blocks[zero]
    _, s0, vh = np.linalg.svd(B)
    corr = float(abs(np.vdot(vh[-1], _nu_vector(n))))
    # restriction to nu-perp (only the zero mode carries nu)
    nu = _nu_vector(n)[:, None]
    Q = np.linalg.qr(np.hstack([nu, np.eye(2 * n)]))[0][:, 1:2 * n]
    others = np.delete(np.arange(op.blocks.shape[0]), zero)
    rest = [np.linalg.svd(Q.conj().T @ B @ Q, compute_uv=False).min()]
    if others.size:
        rest.append(np.min([np.linalg.svd(op.blocks[j], compute_uv=False).min() for j in others]))
    return OperatorSpectrum(name, sv, kdim, cond, corr, float(min(rest)))


def operator_spectrum(engine: LayerEngine, route: str = "modal") -> SpectrumReport:
    """Singular values of <xi'>^(1/2) S <xi'>^(1/2) and of 1/2 + K, kernel dimensions, nu correlations.

    The adjoint kernel dimension uses 1/2 + K* assembled independently from
    the traction of the single layer.
    """
    zero = engine.mode_index(np.zeros(engine.n - 1))
    S = engine.operator("S", "principal", route).weighted(0.5)
    A = engine.operator("K", "principal", route) + 0.5
    As = engine.operator("Kstar", "principal", route) + 0.5
    sS = _spectrum("S", S, zero, engine.n)
    sA = _spectrum("half_plus_K", A, zero, engine.n)
    sv = As.singular_values()
    adj = int(np.sum(sv <= KERNEL_TOL * sv[-1]))
    case = "V0 = 0 on Omega" if engine.params.classification["V0_zero_on_omega"] else "V0 > 0 on Omega"
    return SpectrumReport(sS, sA, adj, case)
