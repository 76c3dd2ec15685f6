"""Deformation operators, the generalized Stokes operator and Green identities
on the strip Omega = {0 < x_n < L} of the flat torus [0, 2 pi)^n.

Fields are stored as grid values and differentiated spectrally. The
Nyquist mode is dropped from first derivatives, which keeps the discrete
Def and Def* exact adjoints. Inner products over Omega are computed exactly
for the trigonometric interpolants of the grid values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .spectral import TorusGrid, wavenumbers

OMEGA_ZERO_TOL = 1e-12


class AmbiguousClassificationError(ValueError):
    pass


@dataclass(frozen=True)
class Profile:
    """Coefficient depending on x_n only.

    kind "constant": amplitude everywhere. kind "bump": periodized Gaussian
    amplitude exp(-((x_n - center) / width)^2), which for the default width
    is below 1e-13 of its peak at distance pi/2 from the center.
    """

    kind: str = "constant"
    amplitude: float = 0.0
    center: float = 1.5 * np.pi
    width: float = 0.28

    def __post_init__(self):
        if self.kind not in ("constant", "bump"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.amplitude < 0 or self.width <= 0:
            raise ValueError("profile amplitude must be >= 0 and width > 0")

    def __call__(self, xn) -> np.ndarray:
        xn = np.asarray(xn, dtype=float)
        if self.kind == "constant":
            return np.full(xn.shape, float(self.amplitude))
        out = np.zeros(xn.shape)
        for j in (-2, -1, 0, 1, 2):
            out += np.exp(-(((xn - self.center + 2 * np.pi * j) / self.width) ** 2))
        return self.amplitude * out

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"


Coefficient = Union[float, Profile, np.ndarray]


def as_profile(c: Coefficient) -> Union[Profile, np.ndarray]:
    if isinstance(c, (int, float, np.floating, np.integer)):
        return Profile("constant", float(c))
    return c


@dataclass(frozen=True)
class StokesParams:
    """Coefficients V, V0 of the generalized Stokes operator on the strip geometry.

    V, V0 are constants, x_n-profiles, or arbitrary nonnegative grid arrays.
    Gamma_0 = {x_n = 0} has outer normal -e_n, Gamma_1 = {x_n = L} has +e_n.
    """

    grid: TorusGrid
    V: Coefficient = 0.0
    V0: Coefficient = 0.0
    L: float = np.pi
    zero_tol: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "V", as_profile(self.V))
        object.__setattr__(self, "V0", as_profile(self.V0))
        if not 0 < self.L < 2 * np.pi:
            raise ValueError("strip height must lie in (0, 2 pi)")
        for name in ("V", "V0"):
            if np.min(self.values(name)) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def heights(self) -> tuple:
        return (0.0, self.L)

    def normal(self, component: int) -> np.ndarray:
        nu = np.zeros(self.n)
        nu[-1] = -1.0 if component == 0 else 1.0
        return nu

    def values(self, name: str) -> np.ndarray:
        c = getattr(self, name)
        if isinstance(c, Profile):
            return c(self.grid.points[-1])
        arr = np.asarray(c, dtype=float)
        if arr.shape != self.grid.shape:
            raise ValueError(f"{name} grid function has shape {arr.shape}, expected {self.grid.shape}")
        return arr

    def is_constant(self, name: str) -> bool:
        c = getattr(self, name)
        return isinstance(c, Profile) and c.is_constant

    def is_profile(self, name: str) -> bool:
        return isinstance(getattr(self, name), Profile)

    def constant(self, name: str) -> float:
        if not self.is_constant(name):
            raise ValueError(f"{name} is not constant")
        return float(getattr(self, name).amplitude)

    def profile(self, name: str, xn) -> np.ndarray:
        c = getattr(self, name)
        if not isinstance(c, Profile):
            raise ValueError(f"{name} is a general grid function")
        return c(xn)

    def boundary_value(self, name: str, component: int) -> float:
        return float(self.profile(name, np.array([self.heights[component]]))[0])

    def _vanishes(self, vals) -> bool:
        top = float(np.max(np.abs(vals)))
        if top == 0.0:
            return True
        if top <= self.zero_tol:
            return True
        if top <= 1e-10:
            raise AmbiguousClassificationError(
                "coefficient is numerically tiny but not zero; set zero_tol to decide")
        return False

    @cached_property
    def classification(self) -> dict:
        V, V0 = self.values("V"), self.values("V0")
        xn = self.grid.points[-1]
        v_zero = self._vanishes(V)
        v0_zero = self._vanishes(V0)
        if self.is_profile("V0"):
            s = np.linspace(0.0, self.L, 2049)
            v0_omega = np.max(self.profile("V0", s))
            s2 = np.linspace(self.L, 2 * np.pi, 2049)[1:-1]
            v0_minus = np.max(self.profile("V0", s2))
        else:
            inside = (xn >= 0) & (xn <= self.L)
            v0_omega = np.max(V0[inside])
            v0_minus = np.max(V0[~inside]) if np.any(~inside) else 0.0
        peak = max(float(np.max(V0)), 1.0)
        case = {(True, True): 1, (True, False): 2, (False, True): 3, (False, False): 4}[(v_zero, v0_zero)]
        return {
            "kernel_case": case,
            "V_zero": v_zero,
            "V0_zero": v0_zero,
            "V0_zero_on_omega": bool(v0_omega <= OMEGA_ZERO_TOL * peak),
            "assumption_VV0": bool((not v_zero) and v0_minus > OMEGA_ZERO_TOL * peak),
        }


@dataclass
class VelocityPressureField:
    """U = (u, p) as grid values, data[:n] = u and data[n] = p."""

    grid: TorusGrid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (self.grid.n + 1,) + self.grid.shape:
            raise ValueError(f"field shape {self.data.shape} does not fit the grid")

    @property
    def u(self) -> np.ndarray:
        return self.data[:-1]

    @property
    def p(self) -> np.ndarray:
        return self.data[-1]

    @classmethod
    def from_parts(cls, grid, u, p):
        return cls(grid, np.concatenate([np.asarray(u, dtype=complex), np.asarray(p, dtype=complex)[None]]))

    def coeffs(self) -> np.ndarray:
        return fft(self.data, self.grid)

    def __add__(self, other):
        return VelocityPressureField(self.grid, self.data + other.data)

    def __sub__(self, other):
        return VelocityPressureField(self.grid, self.data - other.data)

    def scaled(self, c):
        return VelocityPressureField(self.grid, c * self.data)


@dataclass
class SymmetricTensorField:
    grid: TorusGrid
    data: np.ndarray  # (n, n) + grid.shape

    def asymmetry(self) -> float:
        return float(np.abs(self.data - np.swapaxes(self.data, 0, 1)).max())


def fft(vals, grid):
    axes = tuple(range(vals.ndim - grid.n, vals.ndim))
    return np.fft.fftn(vals, axes=axes) / grid.N ** grid.n


def ifft(coef, grid):
    axes = tuple(range(coef.ndim - grid.n, coef.ndim))
    return np.fft.ifftn(coef, axes=axes) * grid.N ** grid.n


def guarded_modes(grid: TorusGrid) -> np.ndarray:
    """Integer modes with the Nyquist entry zeroed, used for first derivatives."""
    k = wavenumbers(grid.N).astype(float)
    k[grid.N // 2] = 0.0
    return np.array(np.meshgrid(*([k] * grid.n), indexing="ij"))


def _ik(grid):
    return 1j * guarded_modes(grid)


def apply_first_order(which: str, data: np.ndarray, grid: TorusGrid, nu_field=None) -> np.ndarray:
    """Def, DefStar, Grad, DivStar or Dnu applied to grid values."""
    n = grid.n
    ik = _ik(grid)
    if which == "Def":
        if data.shape[0] != n:
            raise ValueError("Def acts on n-component fields")
        uh = fft(data, grid)
        th = 0.5 * (ik[:, None] * uh[None, :] + ik[None, :] * uh[:, None])
        return ifft(th, grid)
    if which == "DefStar":
        if data.shape[:2] != (n, n):
            raise ValueError("DefStar acts on n x n tensor fields")
        th = fft(data, grid)
        return ifft(-0.5 * np.einsum("b...,ab...->a...", ik, th + np.swapaxes(th, 0, 1)), grid)
    if which == "Grad":
        if data.shape != grid.shape:
            raise ValueError("Grad acts on scalar fields")
        return ifft(ik * fft(data, grid)[None], grid)
    if which == "DivStar":
        if data.shape[0] != n:
            raise ValueError("DivStar acts on n-component fields")
        return ifft(-np.sum(ik * fft(data, grid), axis=0), grid)
    if which == "Dnu":
        if nu_field is None:
            raise ValueError("Dnu needs a normal field")
        d = apply_first_order("Def", data, grid)
        return np.einsum("ab...,a...->b...", d, nu_field)
    raise ValueError(f"unknown operator {which!r}")


def extended_normal(params: StokesParams) -> np.ndarray:
    """nu_ext(x) = -cos(x_n) e_n, equal to the outer normals of Omega on Gamma when L = pi."""
    nu = np.zeros((params.n,) + params.grid.shape)
    nu[-1] = -np.cos(params.grid.points[-1])
    return nu


def apply_xi(params: StokesParams, U: VelocityPressureField) -> VelocityPressureField:
    g = params.grid
    if U.grid != g:
        raise ValueError("field grid does not match the parameters")
    V, V0 = params.values("V"), params.values("V0")
    u, p = U.u, U.p
    lu = 2 * apply_first_order("DefStar", apply_first_order("Def", u, g), g)
    top = lu + V[None] * u + apply_first_order("Grad", p, g)
    bot = apply_first_order("DivStar", u, g) - V0 * p
    return VelocityPressureField.from_parts(g, top, bot)


def modal_matrix(V: float, V0: float, xi) -> np.ndarray:
    """Full constant-coefficient matrix of Xi at integer mode(s) xi, shape (..., n+1, n+1)."""
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    r = np.sum(xi * xi, axis=-1)
    out = np.zeros(xi.shape[:-1] + (n + 1, n + 1), dtype=complex)
    out[..., :n, :n] = (r + V)[..., None, None] * np.eye(n) + xi[..., :, None] * xi[..., None, :]
    out[..., :n, n] = 1j * xi
    out[..., n, :n] = -1j * xi
    out[..., n, n] = -V0
    return out


# ---------------------------------------------------------------- boundary data

def transverse_modes(N: int, n: int) -> np.ndarray:
    """Transverse modes in FFT order, flattened, shape (N^(n-1), n-1)."""
    k = wavenumbers(N)
    grids = np.meshgrid(*([k] * (n - 1)), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass
class BoundaryDensity:
    """Coefficients of a vector density on Gamma_0 and Gamma_1.

    coeffs has shape (2, n, M) with M = N^(n-1) transverse modes in FFT order;
    h(x') = sum_xi' coeffs[c, :, j] exp(i xi'_j . x') on component c.
    """

    n: int
    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (2, self.n, self.N ** (self.n - 1)):
            raise ValueError(f"density shape {self.coeffs.shape} does not fit n={self.n}, N={self.N}")

    @classmethod
    def zeros(cls, n, N):
        return cls(n, N, np.zeros((2, n, N ** (n - 1)), dtype=complex))

    @property
    def modes(self) -> np.ndarray:
        return transverse_modes(self.N, self.n)

    def inner(self, other: "BoundaryDensity") -> complex:
        """(h, k)_Gamma, conjugate-linear in the second slot."""
        return complex((2 * np.pi) ** (self.n - 1) * np.sum(self.coeffs * np.conj(other.coeffs)))

    def norm(self) -> float:
        return float(np.sqrt(abs(self.inner(self))))

    def sobolev_norm(self, s: float) -> float:
        w = (1.0 + np.sum(self.modes.astype(float) ** 2, axis=1)) ** s
        return float(np.sqrt((2 * np.pi) ** (self.n - 1) * np.sum(w * np.abs(self.coeffs) ** 2)))

    def values(self, component: int) -> np.ndarray:
        """Grid values on the transverse torus, shape (n,) + (N,)*(n-1)."""
        shp = (self.n,) + (self.N,) * (self.n - 1)
        c = self.coeffs[component].reshape(shp)
        axes = tuple(range(1, self.n))
        return np.fft.ifftn(c, axes=axes) * self.N ** (self.n - 1)

    def __add__(self, o):
        return BoundaryDensity(self.n, self.N, self.coeffs + o.coeffs)

    def __sub__(self, o):
        return BoundaryDensity(self.n, self.N, self.coeffs - o.coeffs)

    def scaled(self, c):
        return BoundaryDensity(self.n, self.N, c * self.coeffs)

    def normal_flux(self) -> complex:
        """(h, nu)_Gamma with the outer normals -e_n on Gamma_0 and +e_n on Gamma_1."""
        j0 = 0
        return complex((2 * np.pi) ** (self.n - 1) * (self.coeffs[1, -1, j0] - self.coeffs[0, -1, j0]))


def trace_coeffs(vals: np.ndarray, grid: TorusGrid, height: float) -> np.ndarray:
    """Transverse coefficients of grid fields restricted to x_n = height, shape (..., M)."""
    c = fft(vals, grid)
    k = wavenumbers(grid.N)
    phase = np.exp(1j * k * height)
    tr = np.tensordot(c, phase, axes=([-1], [0]))
    return tr.reshape(vals.shape[:-grid.n] + (-1,))


def conormal(params: StokesParams, U: VelocityPressureField, component: int) -> np.ndarray:
    """T_nu U = -2 D_nu u + p nu on Gamma_component as transverse coefficients (n, M).

    Band-limited fields are smooth across Gamma, so the trigonometric
    interpolant is evaluated directly on the slice. The normal is the
    constant outer normal of the component, which is all that enters.
    """
    g = params.grid
    nu = params.normal(component)
    nu_field = np.broadcast_to(nu[:, None, None] if g.n == 2 else nu[:, None, None, None], (g.n,) + g.shape)
    t = -2 * apply_first_order("Dnu", U.u, g, nu_field) + U.p[None] * nu_field
    return trace_coeffs(t, g, params.heights[component])


def conormal_density(params: StokesParams, U: VelocityPressureField) -> BoundaryDensity:
    return BoundaryDensity(params.n, params.grid.N, np.stack([conormal(params, U, c) for c in (0, 1)]))


def velocity_trace(params: StokesParams, U: VelocityPressureField) -> BoundaryDensity:
    g = params.grid
    return BoundaryDensity(params.n, g.N, np.stack([trace_coeffs(U.u, g, h) for h in params.heights]))


# ---------------------------------------------------------------- inner products

def strip_weights(N: int, L: float) -> np.ndarray:
    """W[k, l] = int_0^L exp(i (k - l) x) dx for modes in FFT order."""
    k = wavenumbers(N)
    d = (k[:, None] - k[None, :]).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (np.exp(1j * d * L) - 1.0) / (1j * d)
    w[d == 0] = L
    return w


def strip_inner(f: np.ndarray, g: np.ndarray, params: StokesParams) -> complex:
    """(f, g)_Omega for grid fields of equal shape (..., grid), conjugate-linear in g."""
    grid = params.grid
    fc = fft(np.asarray(f, dtype=complex), grid)
    gc = fft(np.asarray(g, dtype=complex), grid)
    fc = fc.reshape(-1, grid.N)
    gc = gc.reshape(-1, grid.N)
    W = strip_weights(grid.N, params.L)
    total = np.einsum("jk,kl,jl->", fc, W, np.conj(gc))
    return complex((2 * np.pi) ** (grid.n - 1) * total)


def torus_inner(f: np.ndarray, g: np.ndarray, grid: TorusGrid) -> complex:
    return complex(np.sum(f * np.conj(g)) * grid.spacing ** grid.n)


# ---------------------------------------------------------------- Green identities

def bilinear_form(params: StokesParams, U: VelocityPressureField, W: VelocityPressureField) -> complex:
    g = params.grid
    du = apply_first_order("Def", U.u, g)
    dw = apply_first_order("Def", W.u, g)
    V, V0 = params.values("V"), params.values("V0")
    out = 2 * strip_inner(du, dw, params)
    out += strip_inner(apply_first_order("DivStar", U.u, g), W.p, params)
    out += strip_inner(U.p, apply_first_order("DivStar", W.u, g), params)
    out += strip_inner(V[None] * U.u, W.u, params) - strip_inner(V0 * U.p, W.p, params)
    return out


def boundary_pairing(params: StokesParams, U: VelocityPressureField, W: VelocityPressureField) -> complex:
    """(T_nu U, w)_Gamma."""
    return conormal_density(params, U).inner(velocity_trace(params, W))


@dataclass
class GreenResiduals:
    first: float
    second: float
    third: float
    scale: float = 1.0
    details: dict = field(default_factory=dict)


def _distribution_coeffs(dens: np.ndarray, height: float, grid: TorusGrid) -> np.ndarray:
    """Coefficients of (h delta_{x_n = height}) on the torus grid modes, shape (..., grid)."""
    n, N = grid.n, grid.N
    k = wavenumbers(N)
    h = dens.reshape(dens.shape[:-1] + (N,) * (n - 1))
    return h[..., None] * (np.exp(-1j * k * height) / (2 * np.pi))


def _indicator_coeffs(coef: np.ndarray, params: StokesParams) -> np.ndarray:
    """Fourier coefficients of 1_Omega f on the grid modes, exact for trig polynomials f."""
    N = params.grid.N
    k = wavenumbers(N)
    d = (k[:, None] - k[None, :]).astype(float)
    L = params.L
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (1.0 - np.exp(-1j * d * L)) / (2j * np.pi * d)
    s[d == 0] = L / (2 * np.pi)
    return np.tensordot(coef, s, axes=([-1], [1]))


def _pair(a: np.ndarray, b: np.ndarray, grid: TorusGrid) -> complex:
    return complex(grid.volume * np.sum(a * np.conj(b)))


def green_residuals(params: StokesParams, U: VelocityPressureField, W: VelocityPressureField) -> GreenResiduals:
    """Residuals of the three Green identities on Omega, relative to the term sizes.

    The third identity is checked weakly: both sides are paired with W in
    Fourier space, with the delta terms built from their coefficients.
    """
    g = params.grid
    XU, XW = apply_xi(params, U), apply_xi(params, W)
    lhs1 = strip_inner(XU.data, W.data, params)
    b = bilinear_form(params, U, W)
    tu = boundary_pairing(params, U, W)
    tw = boundary_pairing(params, W, U)
    scale1 = max(abs(lhs1), abs(b), abs(tu), 1e-300)
    r1 = abs(lhs1 - b - tu) / scale1
    lhs2 = lhs1 - strip_inner(U.data, XW.data, params)
    rhs2 = tu - np.conj(tw)
    r2 = abs(lhs2 - rhs2) / max(abs(lhs1), abs(tu), abs(tw), 1e-300)

    # weak form of Xi(1_Omega U) = 1_Omega Xi U - (T~ U) delta + T~*(U delta)
    lhs3 = _pair(_indicator_coeffs(U.coeffs(), params), XW.coeffs(), g)
    rhs3 = _pair(_indicator_coeffs(XU.coeffs(), params), W.coeffs(), g)
    kk = np.moveaxis(g.modes.astype(float), 0, -1)
    from .symbols import first_order_symbol
    for c in (0, 1):
        nu = params.normal(c)
        h = params.heights[c]
        tU = conormal(params, U, c)
        rhs3 -= _pair(_distribution_coeffs(tU, h, g), W.coeffs()[:-1], g)
        ut = trace_coeffs(U.u, g, h)
        dist = _distribution_coeffs(ut, h, g)
        dstar = first_order_symbol("DnuStar", kk, nu)
        top = -2 * np.einsum("...ab,b...->a...", dstar, dist)
        bot = np.einsum("a,a...->...", nu, dist)
        rhs3 += _pair(np.concatenate([top, bot[None]]), W.coeffs(), g)
    r3 = abs(lhs3 - rhs3) / max(abs(lhs3), abs(rhs3), 1e-300)
    return GreenResiduals(r1, r2, r3, scale1, {"lhs1": lhs1, "B": b, "TU_w": tu})


@dataclass
class EnergyReport:
    def_u: float
    sqrtV_u: float
    divstar_u: float
    sqrtV0_p: float
    grad_p: float

    def as_tuple(self):
        return (self.def_u, self.sqrtV_u, self.divstar_u, self.sqrtV0_p, self.grad_p)


def energy_report(params: StokesParams, U: VelocityPressureField) -> EnergyReport:
    g = params.grid
    V, V0 = params.values("V"), params.values("V0")

    def nrm(a, b=None):
        return float(np.sqrt(max(strip_inner(a, a if b is None else b, params).real, 0.0)))
    du = apply_first_order("Def", U.u, g)
    return EnergyReport(
        nrm(du),
        float(np.sqrt(max(strip_inner(V[None] * U.u, U.u, params).real, 0.0))),
        nrm(apply_first_order("DivStar", U.u, g)),
        float(np.sqrt(max(strip_inner(V0 * U.p, U.p, params).real, 0.0))),
        nrm(apply_first_order("Grad", U.p, g)),
    )


def random_field(grid: TorusGrid, bandwidth: int, rng, real: bool = True, components: int | None = None) -> np.ndarray:
    """Random band-limited grid field with |xi_j| <= bandwidth."""
    comps = grid.n + 1 if components is None else components
    k = grid.modes
    keep = np.all(np.abs(k) <= bandwidth, axis=0)
    c = (rng.normal(size=(comps,) + grid.shape) + 1j * rng.normal(size=(comps,) + grid.shape)) * keep
    vals = ifft(c, grid)
    if real:
        vals = vals.real
    return vals / np.abs(vals).max()


def random_vp_field(grid: TorusGrid, bandwidth: int, rng, real: bool = True) -> VelocityPressureField:
    return VelocityPressureField(grid, random_field(grid, bandwidth, rng, real))
