"""Named numerical checks: the acceptance criteria ac1..ac11 and the config-driven commands.

Every check returns a list of CheckRow. A row is an upper bound
(residual <= tolerance) unless its parameter name ends in "[min]", in which
case it is a lower bound (ratios of successive residuals, singular values).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, describe_coefficient
from .spectral import QuadratureSpec, TorusGrid, line_quadrature
from .stokes import Profile, StokesParams, green_residuals, random_vp_field

BUMP = Profile("bump", 1.0)


@dataclass(frozen=True)
class CheckRow:
    check: str
    n: int
    N: int
    case: str
    param: str
    residual: float
    tolerance: float
    lower: bool = False

    @property
    def passed(self) -> bool:
        r = self.residual
        if not np.isfinite(r):
            return False
        return r >= self.tolerance if self.lower else r <= self.tolerance

    def csv_fields(self) -> list:
        return [self.check, str(self.n), str(self.N), self.case, self.param,
                f"{self.residual:.6e}", f"{self.tolerance:.6e}", "pass" if self.passed else "fail"]


def _case(V, V0) -> str:
    return f"V={describe_coefficient(V)};V0={describe_coefficient(V0)}"


class _Rows(list):
    def __init__(self, check: str):
        super().__init__()
        self.check = check

    def add(self, n, N, case, param, value, tol, lower=False):
        self.append(CheckRow(self.check, n, N, case, param + ("[min]" if lower else ""),
                             float(value), float(tol), lower))


_ENGINES = {}


def engine_for(V, V0, N: int, n: int = 2):
    """Shared LayerEngine per configuration (operators are cached inside)."""
    from .layers import LayerEngine
    key = (_case(V, V0), N, n)
    if key not in _ENGINES:
        _ENGINES[key] = LayerEngine(StokesParams(TorusGrid(n, N), V, V0))
    return _ENGINES[key]


def clear_cache():
    _ENGINES.clear()


def _density(n, N, bandwidth, seed):
    from .layers import random_density
    return random_density(n, N, bandwidth, np.random.default_rng(seed))


def _flux_free(h):
    from .layers import normal_density
    nu = normal_density(h.n, h.N)
    h = h - nu.scaled(h.inner(nu) / nu.inner(nu))
    return h.scaled(1.0 / h.norm())


# ---------------------------------------------------------------- ac1

def ac1(cfg: RunConfig | None = None) -> list:
    """Residue integrals int x^2/(a^2+x^2)^2, int 1/(a^2+x^2)^2, int 1/(a^2+x^2) by quadrature."""
    rows = _Rows("ac1")
    spec = QuadratureSpec(atol=1e-15, rtol=1e-13)
    tol = cfg.tol("residue", 1e-10) if cfg else 1e-10
    for a in (0.5, 1.0, 2.0, 10.0):
        cases = [("x2_over_sq", lambda x: x * x / (a * a + x * x) ** 2, np.pi / (2 * a)),
                 ("one_over_sq", lambda x: 1.0 / (a * a + x * x) ** 2, np.pi / (2 * a ** 3)),
                 ("one_over", lambda x: 1.0 / (a * a + x * x), np.pi / a)]
        for name, fn, exact in cases:
            val = line_quadrature(fn, spec, scale=a).value
            rows.add(1, 0, "-", f"{name}:a={a:g}", abs(val - exact) / exact, tol)
    return rows


# ---------------------------------------------------------------- ac2

def ac2(cfg: RunConfig | None = None) -> list:
    """stokes_symbol * stokes_symbol_inverse = I on 1000 random xi."""
    from .symbols import StokesSymbolParams, stokes_symbol, stokes_symbol_inverse
    rows = _Rows("ac2")
    seed = cfg.seed if cfg else 0
    rng = np.random.default_rng(seed)
    for n in (2, 3):
        xi = rng.normal(size=(1000, n)) * np.exp(rng.uniform(-2, 2, size=(1000, 1)))
        for V0 in (0.0, 0.5, 1.0, 10.0):
            p = StokesSymbolParams(V=0.0, V0=V0)
            prod = stokes_symbol(p, xi) @ stokes_symbol_inverse(p, xi)
            err = float(np.abs(prod - np.eye(n + 1)).max())
            rows.add(n, 0, f"V0={V0:g}", "max|M Minv - I|", err, 1e-13)
    return rows


# ---------------------------------------------------------------- ac3

LADDER_RATIO = tuple(2.0 ** -k for k in range(3, 9))
LADDER_LIMIT = tuple(2.0 ** -k for k in range(5, 11))


def _extrapolated_slice(a, h, ladder, sign):
    from .lateral import potential_slice
    from .layers import neville_zero
    eps = np.array(ladder)
    vals = np.array([potential_slice(a, h, sign * e) for e in eps])
    return neville_zero(eps, vals)


def ac3(cfg: RunConfig | None = None) -> list:
    """Lateral limits on the model half-space for three symbols."""
    from .lateral import (bracket_model, jump_coefficients, odd_model, random_box_density,
                          restriction_apply, stokes_double_layer_model, verify_lateral_limits)
    rows = _Rows("ac3")
    seed = cfg.seed if cfg else 0
    Nb = 8
    for a in (bracket_model(), odd_model(), stokes_double_layer_model(1.0, 1.0)):
        rep = verify_lateral_limits(a, trials=1, N=Nb, bandwidth=2, ladder=LADDER_RATIO, seed=seed)
        for i, r in enumerate(rep.ratios):
            rows.add(a.n, Nb, a.name, f"ratio_eps{i}", r, 0.75)
        rng = np.random.default_rng(seed + 1)
        h = random_box_density(rng, a.shape[1], Nb, a.n - 1, 2)
        scale = np.abs(h).max()
        sides = ("principal", "principal") if a.order < -1 else ("plus", "minus")
        for sign, side in zip((1.0, -1.0), sides):
            lim = _extrapolated_slice(a, h, LADDER_LIMIT, sign)
            target = restriction_apply(a, h, side)
            label = "two_sided" if a.order < -1 else "one_sided"
            rows.add(a.n, Nb, a.name, f"{label}:{'+' if sign > 0 else '-'}", np.abs(lim - target).max() / scale, 1e-6)
        if a.order == -1:
            jc = jump_coefficients(a)
            jp, jm = jc.extrapolated
            expect = -1j * np.eye(a.shape[0]) if a.shape[0] > 1 else np.ones((1, 1))
            rows.add(a.n, Nb, a.name, "J+_extrapolated", np.abs(jp - expect).max(), 1e-6)
            rows.add(a.n, Nb, a.name, "J-_extrapolated", np.abs(jm - expect).max(), 1e-6)
    return rows


# ---------------------------------------------------------------- ac4

def green_rows(rows, V, V0, N, n, bandwidth, seed, tol12, tol3=1e-5):
    p = StokesParams(TorusGrid(n, N), V, V0)
    rng = np.random.default_rng(seed)
    U = random_vp_field(p.grid, bandwidth, rng)
    W = random_vp_field(p.grid, bandwidth, rng)
    r = green_residuals(p, U, W)
    case = _case(V, V0)
    rows.add(n, N, case, "identity1", r.first, tol12)
    rows.add(n, N, case, "identity2", r.second, tol12)
    rows.add(n, N, case, "identity3_weak", r.third, tol3)
    return r


def ac4(cfg: RunConfig | None = None) -> list:
    """Green identities for bandwidth-8 random fields at N = 64 and 128."""
    rows = _Rows("ac4")
    seed = cfg.seed if cfg else 0
    for V, V0 in ((1.0, 1.0), (1.0, BUMP)):
        for N, tol in ((64, 1e-6), (128, 1e-8)):
            green_rows(rows, V, V0, N, 2, 8, seed, tol)
    return rows


# ---------------------------------------------------------------- ac5

def ac5(cfg: RunConfig | None = None) -> list:
    """Kernel dimension of the assembled Xi for the four coefficient cases."""
    from .dense import expected_kernel_dim, kernel_basis
    rows = _Rows("ac5")
    n, N = 2, 16
    for (V, V0), case in (((0.0, 0.0), 1), ((0.0, 1.0), 2), ((1.0, 0.0), 3), ((1.0, 1.0), 4)):
        p = StokesParams(TorusGrid(n, N), V, V0)
        ks = kernel_basis(p, route="dense")
        rows.add(n, N, _case(V, V0), f"case{case}:|dim-{expected_kernel_dim(case, n)}|",
                 abs(ks.dim - expected_kernel_dim(case, n)), 0)
        rows.add(n, N, _case(V, V0), f"case{case}:kernel_residual", ks.residual, 1e-8)
    return rows


# ---------------------------------------------------------------- ac6

def jump_rows(rows, V, V0, N, n, bandwidth, seed, tol, extrapolate=True):
    from .layers import jump_residuals
    eng = engine_for(V, V0, N, n)
    h = _density(n, N, bandwidth, seed)
    rep = jump_residuals(eng, h, check_extrapolation=extrapolate)
    case = _case(V, V0)
    for k, v in rep.residuals.items():
        rows.add(n, N, case, k, v, tol)
    for k, v in rep.side_differences.items():
        rows.add(n, N, case, k, v, tol)
    if extrapolate:
        rows.add(n, N, case, "trace_method_gap", rep.trace_method_gap, 1e-6)
    return rep


def ac6(cfg: RunConfig | None = None) -> list:
    """Jump relations at N = 64 and 128, with >= 4x decay."""
    rows = _Rows("ac6")
    seed = cfg.seed if cfg else 0
    for V, V0 in ((1.0, BUMP), (1.0, 1.0)):
        r64 = jump_rows(rows, V, V0, 64, 2, 6, seed, 1e-4, extrapolate=True)
        r128 = jump_rows(rows, V, V0, 128, 2, 6, seed, 1e-4, extrapolate=False)
        for k in r64.residuals:
            rows.add(2, 128, _case(V, V0), f"{k}:ratio_64_128", r64.residuals[k] / r128.residuals[k], 4.0, lower=True)
    return rows


# ---------------------------------------------------------------- ac7

def symbol_deviation(eng, which: str, k: int, d: int = 0) -> float:
    from .symbols import StokesSymbolParams, boundary_symbol
    n = eng.n
    xi = np.zeros(n - 1)
    xi[0] = k
    j = eng.mode_index(xi)
    B = eng.block(j, which, "principal", "modal")[d * n:(d + 1) * n, d * n:(d + 1) * n]
    sym = boundary_symbol(which, StokesSymbolParams(V=eng.V_ref, V0=eng.V0_ref), eng.normal(d),
                          np.concatenate([xi.astype(float), [0.0]]))
    dev = float(np.abs(B - sym).max())
    if which == "S":
        dev /= float(np.abs(sym).max())
    return dev


def ac7(cfg: RunConfig | None = None) -> list:
    """Diagonal blocks of K and S approach sigma_0(K), sigma_-1(S); K eigenvalues at V0 = 1."""
    rows = _Rows("ac7")
    for V0 in (0.0, 1.0):
        eng = engine_for(1.0, V0, 128, 2)
        case = _case(1.0, V0)
        for which in ("K", "S"):
            devs = {k: symbol_deviation(eng, which, k) for k in (4, 8, 16, 32)}
            for k in (4, 8, 16):
                rows.add(2, 128, case, f"{which}:dev({2 * k})/dev({k})", devs[2 * k] / devs[k], 0.75)
        if V0 == 1.0:
            j = eng.mode_index([16])
            ev = np.sort(np.linalg.eigvals(eng.block(j, "K", "principal", "modal")[:2, :2]).real)
            c = V0 / (2 * (2 * V0 + 1))
            rows.add(2, 128, case, "K16_eigs_vs_pm1/6", float(np.abs(ev - np.array([-c, c])).max()), 1.0 / 16)
    return rows


# ---------------------------------------------------------------- ac8

def spectrum_rows(rows, V, V0, N, n, seed, report=None):
    from .bvp import operator_spectrum
    eng = engine_for(V, V0, N, n)
    rep = operator_spectrum(eng) if report is None else report
    case = _case(V, V0)
    zero_on_omega = eng.params.classification["V0_zero_on_omega"]
    S, A = rep.S, rep.half_plus_K
    if zero_on_omega:
        rows.add(n, N, case, "S:|kernel_dim-1|", abs(S.kernel_dim - 1), 0)
        rows.add(n, N, case, "S:smallest", S.smallest, 1e-6)
        rows.add(n, N, case, "S:nu_correlation", S.nu_correlation, 0.999, lower=True)
        rows.add(n, N, case, "S:second_smallest", float(S.singular_values[1]), 1e-2, lower=True)
        rows.add(n, N, case, "halfK:restricted_min", A.restricted_min, 1e-3, lower=True)
        rows.add(n, N, case, "halfK:image_nu", image_orthogonality(eng, seed), 1e-6)
    else:
        rows.add(n, N, case, "S:kernel_dim", S.kernel_dim, 0)
        rows.add(n, N, case, "halfK:kernel_dim", A.kernel_dim, 0)
        rows.add(n, N, case, "S:smallest", S.smallest, 1e-3, lower=True)
        rows.add(n, N, case, "halfK:smallest", A.smallest, 1e-3, lower=True)
    return rep


def image_orthogonality(eng, seed: int, samples: int = 20) -> float:
    """max |((1/2 + K) h, nu)| / ||h|| over random densities."""
    from .layers import normal_density
    A = eng.operator("K", "principal", "modal") + 0.5
    nu = normal_density(eng.n, eng.N)
    worst = 0.0
    for i in range(samples):
        h = _density(eng.n, eng.N, 4, seed + 100 + i)
        img = A.apply_density(h)
        worst = max(worst, abs(img.inner(nu)) / (h.norm() * nu.norm()))
    return worst


def ac8(cfg: RunConfig | None = None) -> list:
    """ker S = C nu and 1/2 + K invertible on nu-perp (V0 = 0 on Omega); both invertible for V0 >= 1."""
    rows = _Rows("ac8")
    seed = cfg.seed if cfg else 0
    for V, V0 in ((1.0, BUMP), (1.0, 1.0)):
        reps = {N: spectrum_rows(rows, V, V0, N, 2, seed) for N in (32, 64)}
        a, b = reps[32], reps[64]
        for name, x, y in (("S", a.S, b.S), ("halfK", a.half_plus_K, b.half_plus_K)):
            if x.kernel_dim:
                s32, s64 = x.restricted_min, y.restricted_min
                label = f"{name}:restricted_min_ratio_32_64"
            else:
                s32, s64 = x.smallest, y.smallest
                label = f"{name}:smallest_ratio_32_64"
            rows.add(2, 64, _case(V, V0), label, max(s32 / s64, s64 / s32), 2.0)
    return rows


# ---------------------------------------------------------------- ac9

def solve_rows(rows, V, V0, N, n, bandwidth, seed, tight: bool, tol_trace=1e-6, tol_route=1e-5):
    """Manufactured solution U* = D(h), both routes; returns stability constants."""
    from .bvp import DirichletProblem, field_distance, solve_dirichlet, stability_constant
    eng = engine_for(V, V0, N, n)
    case = _case(V, V0)
    h = _density(n, N, bandwidth, seed)
    Ustar = eng.potential("double", h)
    f = Ustar.trace_density("interior", "velocity")
    prob = DirichletProblem(eng, f)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s1 = solve_dirichlet(prob, "double_layer")
        s2 = solve_dirichlet(prob, "single_layer")
        if tight:
            rows.add(n, N, case, "trace_error:double_layer", s1.diagnostics["trace_error"], tol_trace)
            rows.add(n, N, case, "trace_error:single_layer", s2.diagnostics["trace_error"], tol_trace)
            man = field_distance(s1.potential, Ustar)
            rows.add(n, N, case, "manufactured:velocity", man["velocity"], tol_trace)
            rows.add(n, N, case, "manufactured:pressure_mod_constant", man["pressure_mod_constant"], tol_trace)
            rt = field_distance(s1.potential, s2.potential)
            rows.add(n, N, case, "routes:velocity", rt["velocity"], tol_route)
            rows.add(n, N, case, "routes:pressure_mod_constant", rt["pressure_mod_constant"], tol_route)
            if not prob.needs_flux_condition:
                rows.add(n, N, case, "routes:pressure", rt["pressure"], tol_route)
        return [stability_constant(prob, m) for m in (0, 1, 2)]


def ac9(cfg: RunConfig | None = None) -> list:
    """Manufactured Dirichlet solves, route agreement and stability constants across N."""
    rows = _Rows("ac9")
    seed = cfg.seed if cfg else 0
    for V, V0 in ((1.0, 1.0), (1.0, BUMP)):
        consts = {N: solve_rows(rows, V, V0, N, 2, 4, seed, tight=(N == 64)) for N in (32, 64, 128)}
        for m in (0, 1, 2):
            c = np.array([consts[N][m] for N in (32, 64, 128)])
            rows.add(2, 128, _case(V, V0), f"C_{m}:max/min_over_N", c.max() / c.min(), 2.0)
    return rows


# ---------------------------------------------------------------- ac10

def dtn_rows(rows, V, V0, N, n, bandwidth, seed, tol_dtn=1e-5, tol_jump=1e-4):
    from .bvp import dtn, no_jump_check
    eng = engine_for(V, V0, N, n)
    case = _case(V, V0)
    f = _flux_free(_density(n, N, bandwidth, seed)) if eng.params.classification["V0_zero_on_omega"] \
        else _density(n, N, bandwidth, seed)
    d = dtn(eng, f)
    nj = no_jump_check(eng, f)
    rows.add(n, N, case, "dtn_identity", d.residual, tol_dtn)
    rows.add(n, N, case, "dtn_identity_ungauged", d.residual_ungauged, tol_dtn)
    rows.add(n, N, case, "nojump:plus", nj["plus"], tol_jump)
    rows.add(n, N, case, "nojump:minus", nj["minus"], tol_jump)
    rows.add(n, N, case, "nojump:direct_difference", nj["jump"], tol_jump)
    return d.residual, max(nj["plus"], nj["minus"])


def ac10(cfg: RunConfig | None = None) -> list:
    """S N = -1/2 + K and the absence of a conormal jump of the double layer."""
    rows = _Rows("ac10")
    seed = cfg.seed if cfg else 0
    for V, V0 in ((1.0, 1.0), (1.0, BUMP)):
        a = dtn_rows(rows, V, V0, 64, 2, 4, seed)
        b = dtn_rows(rows, V, V0, 128, 2, 4, seed)
        rows.add(2, 128, _case(V, V0), "dtn_identity:ratio_64_128", a[0] / b[0], 4.0, lower=True)
        rows.add(2, 128, _case(V, V0), "nojump:ratio_64_128", a[1] / b[1], 4.0, lower=True)
    return rows


# ---------------------------------------------------------------- ac11

def ac11(cfg: RunConfig | None = None) -> list:
    """(P*)_0 = (P_0)*, S = S*, and equal kernel dimensions of 1/2 + K and its adjoint."""
    from .bvp import operator_spectrum
    from .lateral import jump_coefficients, restriction_symbol, stokes_double_layer_model, stokes_traction_model
    from .layers import adjoint_restriction_check
    rows = _Rows("ac11")
    seed = cfg.seed if cfg else 0
    N = 32
    for V, V0 in ((1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0), (1.0, BUMP)):
        eng = engine_for(V, V0, N, 2)
        case = _case(V, V0)
        adj = adjoint_restriction_check(eng)
        rows.add(2, N, case, "Kstar_vs_K^H", adj["K_adjoint"], 1e-8)
        rows.add(2, N, case, "S_hermitian", adj["S_hermitian"], 1e-8)
        rep = operator_spectrum(eng)
        rows.add(2, N, case, "|dimker(1/2+K)-dimker(1/2+K*)|",
                 abs(rep.half_plus_K.kernel_dim - rep.adjoint_kernel_dim), 0)
    rng = np.random.default_rng(seed)
    for i in range(5):
        V, V0 = rng.uniform(0.2, 3.0), rng.uniform(0.0, 3.0)
        a, b = stokes_double_layer_model(V, V0), stokes_traction_model(V, V0)
        label = f"V={V:.3f};V0={V0:.3f}"
        worst = 0.0
        for _ in range(3):
            xp = rng.normal(size=1) * 3
            worst = max(worst, float(np.abs(restriction_symbol(b, xp) - np.conj(restriction_symbol(a, xp)).T).max()))
            # the adjoint of the + limit is the - limit of the adjoint (J flips sign under conjugation)
            worst = max(worst, float(np.abs(restriction_symbol(b, xp, "plus")
                                            - np.conj(restriction_symbol(a, xp, "minus")).T).max()))
        rows.add(2, 0, label, "model:(P*)_0-(P_0)*", worst, 1e-8)
        rows.add(2, 0, label, "model:J+(P*)-J+(P)^H",
                 float(np.abs(jump_coefficients(b).plus - np.conj(jump_coefficients(a).plus).T).max()), 1e-8)
    return rows


ACCEPTANCE = {
    "ac1": ("residue lemma integrals", ac1),
    "ac2": ("exact inverse symbol", ac2),
    "ac3": ("lateral limits", ac3),
    "ac4": ("Green identities", ac4),
    "ac5": ("kernel classification", ac5),
    "ac6": ("jump relations", ac6),
    "ac7": ("symbol asymptotics", ac7),
    "ac8": ("invertibility", ac8),
    "ac9": ("well-posedness", ac9),
    "ac10": ("DtN identity and no jump", ac10),
    "ac11": ("adjoint structure", ac11),
}


# ---------------------------------------------------------------- config-driven commands

def verify_jumps(cfg: RunConfig) -> list:
    rows = _Rows("verify-jumps")
    jump_rows(rows, cfg.V, cfg.V0, cfg.N, cfg.n, cfg.bandwidth, cfg.seed, cfg.tol("jump", 1e-4))
    return rows


def verify_green(cfg: RunConfig) -> list:
    rows = _Rows("verify-green")
    green_rows(rows, cfg.V, cfg.V0, cfg.N, cfg.n, min(8, cfg.N // 4), cfg.seed,
               cfg.tol("green", 1e-6), cfg.tol("green_weak", 1e-5))
    return rows


def verify_lateral(cfg: RunConfig) -> list:
    rows = ac3(cfg)
    return [CheckRow("verify-lateral", *[getattr(r, f) for f in ("n", "N", "case", "param", "residual",
                                                                    "tolerance", "lower")]) for r in rows]


def spectrum(cfg: RunConfig) -> list:
    rows = _Rows("spectrum")
    spectrum_rows(rows, cfg.V, cfg.V0, cfg.N, cfg.n, cfg.seed)
    return rows


def solve(cfg: RunConfig) -> list:
    rows = _Rows("solve")
    solve_rows(rows, cfg.V, cfg.V0, cfg.N, cfg.n, cfg.bandwidth, cfg.seed, tight=True,
               tol_trace=cfg.tol("trace", 1e-6), tol_route=cfg.tol("route", 1e-5))
    return rows


def dtn(cfg: RunConfig) -> list:
    rows = _Rows("dtn")
    dtn_rows(rows, cfg.V, cfg.V0, cfg.N, cfg.n, cfg.bandwidth, cfg.seed, cfg.tol("dtn", 1e-5), cfg.tol("nojump", 1e-4))
    return rows


COMMAND_CHECKS = {
    "verify-jumps": verify_jumps,
    "verify-green": verify_green,
    "verify-lateral": verify_lateral,
    "spectrum": spectrum,
    "solve": solve,
    "dtn": dtn,
}
