"""Lateral limits of potentials on the model half-space {x_n > 0} | {x_n < 0}.

For a symbol a(x_n, xi', xi_n) of order m <= -1 the slice multipliers

    a_{s,t}(xi') = (1/2 pi) int exp(i t xi_n) a(s, xi', xi_n) dxi_n

give the restriction of a(x, D)(h delta) to {x_n = t} when s = t. For m < -1
the limit t -> 0 is the restriction a_0; for m = -1 the one-sided limits are
a_{0+/-} = a_0 +/- (i/2) J_+ with a_0 the principal-value (even part) integral
and J_+ = lim tau a(xi', tau), which requires the leading part to be odd.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .spectral import QuadratureSpec, fourier_line_quadrature, line_quadrature, wavenumbers


class JumpUndefinedError(ValueError):
    pass


class InconsistentSymbolError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSymbol:
    """Symbol a(s, xi', xi_n) with x-dependence through s = x_n only.

    func(s, xi_p, xi_n) gets a real vector xi_p of length n - 1 and an array
    xi_n (possibly complex, for contour quadrature) and returns an array of
    shape xi_n.shape + shape. leading(s, xi) is the homogeneous part of
    degree order in the full covector xi (real, shape (..., n)). odd records
    the user's claim that the order -1 leading part is odd in xi.
    """

    func: Callable
    order: int
    shape: tuple
    n: int
    leading: Optional[Callable] = None
    odd: bool = True
    name: str = ""

    def line(self, s: float, xi_p) -> Callable:
        xi_p = np.asarray(xi_p, dtype=float)
        return lambda xn: np.asarray(self.func(s, xi_p, np.asarray(xn)))

    def adjoint(self) -> "ModelSymbol":
        # valid for real xi_n; conj(a(conj z)) is the analytic continuation
        def func(s, xi_p, xn):
            return np.conj(np.swapaxes(self.func(s, xi_p, np.conj(xn)), -1, -2))
        lead = None
        if self.leading is not None:
            def lead(s, xi):
                return np.conj(np.swapaxes(self.leading(s, xi), -1, -2))
        return ModelSymbol(func, self.order, self.shape[::-1], self.n, lead, self.odd, self.name + "*")


@dataclass
class JumpCoefficients:
    plus: np.ndarray
    minus: np.ndarray
    odd: bool
    extrapolated: Optional[tuple] = None


def _scale(xi_p) -> float:
    return float(np.sqrt(1.0 + np.sum(np.square(xi_p))))


def _extrapolate_tau(a: ModelSymbol, s, xi_p, sign: float) -> np.ndarray:
    # the tail expands in powers of <xi'>/tau
    taus = _scale(xi_p) * np.array([1e2, 1e3, 1e4])
    vals = [sign * tt * a.line(s, xi_p)(np.array([sign * tt]))[0] for tt in taus]
    r1 = [(10 * vals[i + 1] - vals[i]) / 9 for i in range(2)]
    return (100 * r1[1] - r1[0]) / 99


def jump_coefficients(a: ModelSymbol, s: float = 0.0, xi_p=None, tol: float = 1e-6) -> JumpCoefficients:
    """J_+ = lim tau a(xi', tau) as tau -> +inf and J_- as tau -> -inf."""
    if a.order != -1:
        raise ValueError("jump coefficients are defined for order -1 symbols")
    xi_p = np.zeros(a.n - 1) if xi_p is None else np.asarray(xi_p, dtype=float)
    ext = (_extrapolate_tau(a, s, xi_p, 1.0), _extrapolate_tau(a, s, xi_p, -1.0))
    if a.leading is not None:
        en = np.zeros(a.n)
        en[-1] = 1.0
        jp = np.asarray(a.leading(s, en), dtype=complex)
        jm = -np.asarray(a.leading(s, -en), dtype=complex)
        scale = max(1.0, np.abs(jp).max())
        if np.abs(jp - ext[0]).max() > tol * scale or np.abs(jm - ext[1]).max() > tol * scale:
            raise InconsistentSymbolError("leading term disagrees with the extrapolated limits")
    else:
        jp, jm = ext
    odd = bool(np.abs(jp - jm).max() <= tol * max(1.0, np.abs(jp).max()))
    return JumpCoefficients(jp, jm, odd, ext)


def _odd_model(c):
    return lambda xn: xn / (c * c + xn * xn)


def slice_symbol(a: ModelSymbol, s: float, t: float, xi_p, spec: QuadratureSpec = QuadratureSpec(),
                 method: str = "contour") -> np.ndarray:
    """a_{s,t}(xi') by one-dimensional inverse Fourier integration."""
    xi_p = np.asarray(xi_p, dtype=float)
    c = _scale(xi_p)
    line = a.line(s, xi_p)
    if a.order < -1:
        if t == 0:
            return line_quadrature(line, spec, scale=c).value / (2 * np.pi)
        return fourier_line_quadrature(line, t, spec, scale=c, method=method) / (2 * np.pi)
    if a.order == -1:
        if t == 0:
            raise JumpUndefinedError("order -1 slices at t = 0 need restriction_symbol")
        jc = jump_coefficients(a, s, xi_p)
        if not jc.odd:
            raise JumpUndefinedError("leading part is not odd in xi_n")
        J = jc.plus
        model = _odd_model(c)
        ext = [slice(None)] + [None] * len(a.shape)

        def rem(xn):
            return line(xn) - np.asarray(model(xn))[tuple(ext)] * J
        val = fourier_line_quadrature(rem, t, spec, scale=c, method=method) / (2 * np.pi)
        return val + 0.5j * np.sign(t) * np.exp(-c * abs(t)) * J
    raise ValueError("slices need order <= -1")


def restriction_symbol(a: ModelSymbol, xi_p, side: str = "principal", s: float = 0.0,
                       spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """a_0 (m < -1) or a_{0,0} / a_{0+} / a_{0-} (m = -1) at the hypersurface."""
    xi_p = np.asarray(xi_p, dtype=float)
    c = _scale(xi_p)
    line = a.line(s, xi_p)
    if a.order < -1:
        return line_quadrature(line, spec, scale=c).value / (2 * np.pi)
    if a.order != -1:
        raise ValueError("restriction needs order <= -1")
    jc = jump_coefficients(a, s, xi_p)
    if not jc.odd:
        raise JumpUndefinedError("leading part is not odd in xi_n")
    # int_0^inf (a(xi_n) + a(-xi_n)) = int_R (a(xi_n) + a(-xi_n)) / 2
    a0 = line_quadrature(line, spec, scale=c, symmetrize=True).value / (2 * np.pi)
    if side == "principal":
        return a0
    if side == "plus":
        return a0 + 0.5j * jc.plus
    if side == "minus":
        return a0 - 0.5j * jc.plus
    raise ValueError(f"unknown side {side!r}")


def box_modes(N: int, dim: int) -> np.ndarray:
    """Transverse modes of a periodic box with N points per axis, shape (N^dim, dim)."""
    k = wavenumbers(N)
    grids = np.meshgrid(*([k] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _apply_multiplier(mult: Callable, h: np.ndarray, period: float, active: float = 1e-14) -> np.ndarray:
    """h has shape (components, N, ..., N); mult(xi_p) returns a matrix."""
    dim = h.ndim - 1
    N = h.shape[1]
    axes = tuple(range(1, dim + 1))
    hh = np.fft.fftn(h, axes=axes) / N ** dim
    flat = hh.reshape(h.shape[0], -1)
    out = None
    modes = box_modes(N, dim)
    top = np.abs(flat).max()
    for j, m in enumerate(modes):
        if np.abs(flat[:, j]).max() <= active * top:
            continue
        mat = np.asarray(mult(2 * np.pi / period * m))
        if out is None:
            out = np.zeros((mat.shape[0], flat.shape[1]), dtype=complex)
        out[:, j] = mat @ flat[:, j]
    if out is None:
        out = np.zeros_like(flat)
    return np.fft.ifftn(out.reshape((-1,) + h.shape[1:]), axes=axes) * N ** dim


def potential_slice(a: ModelSymbol, h: np.ndarray, eps: float, period: float = 2 * np.pi,
                    spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """[a(x, D)(h delta)] on {x_n = eps} = a_{eps,eps}(D') h on a periodic box."""
    if a.order == -1 and eps == 0:
        raise JumpUndefinedError("order -1 potentials have no trace; use eps != 0")
    return _apply_multiplier(lambda xp: slice_symbol(a, eps, eps, xp, spec), np.asarray(h), period)


def restriction_apply(a: ModelSymbol, h: np.ndarray, side: str = "principal", period: float = 2 * np.pi,
                      spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    return _apply_multiplier(lambda xp: restriction_symbol(a, xp, side, spec=spec), np.asarray(h), period)


@dataclass
class LateralReport:
    eps: np.ndarray
    residual_plus: np.ndarray
    residual_minus: np.ndarray
    adjoint_residual: float
    jump_residual: float
    extras: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        r = np.maximum(self.residual_plus, self.residual_minus)
        return r[1:] / r[:-1]


def verify_lateral_limits(a: ModelSymbol, trials: int = 2, N: int = 8, bandwidth: int = 2,
                          ladder=tuple(2.0 ** -k for k in range(3, 9)), seed: int = 0) -> LateralReport:
    """Slices at +/- eps against the restriction operators on random densities."""
    rng = np.random.default_rng(seed)
    eps = np.array(list(ladder))
    dim = a.n - 1
    cols = a.shape[1]
    res_p = np.zeros(eps.size)
    res_m = np.zeros(eps.size)
    jump_res = 0.0
    for _ in range(trials):
        h = random_box_density(rng, cols, N, dim, bandwidth)
        scale = np.abs(h).max()
        side_p, side_m = ("plus", "minus") if a.order == -1 else ("principal", "principal")
        tp = restriction_apply(a, h, side_p)
        tm = restriction_apply(a, h, side_m)
        if a.order == -1:
            jc = jump_coefficients(a)
            jump = np.einsum("ij,j...->i...", 1j * jc.plus, h)
            jump_res = max(jump_res, np.abs(tp - tm - jump).max() / scale)
        for i, e in enumerate(eps):
            res_p[i] = max(res_p[i], np.abs(potential_slice(a, h, e) - tp).max() / scale)
            res_m[i] = max(res_m[i], np.abs(potential_slice(a, h, -e) - tm).max() / scale)
    adj = adjoint_restriction_residual(a, rng, samples=3)
    return LateralReport(eps, res_p, res_m, adj, jump_res)


def adjoint_restriction_residual(a: ModelSymbol, rng=None, samples: int = 3) -> float:
    """max |(a*)_0(xi') - (a_0(xi'))*| over sampled xi'."""
    rng = np.random.default_rng(1) if rng is None else rng
    b = a.adjoint()
    worst = 0.0
    for _ in range(samples):
        xp = rng.normal(size=a.n - 1) * 3
        lhs = restriction_symbol(b, xp)
        rhs = np.conj(restriction_symbol(a, xp)).T
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def random_box_density(rng, components: int, N: int, dim: int, bandwidth: int) -> np.ndarray:
    """Real band-limited density on a periodic box."""
    modes = box_modes(N, dim)
    keep = np.all(np.abs(modes) <= bandwidth, axis=1)
    coef = np.zeros((components, N ** dim), dtype=complex)
    coef[:, keep] = rng.normal(size=(components, keep.sum())) + 1j * rng.normal(size=(components, keep.sum()))
    coef = coef.reshape((components,) + (N,) * dim)
    vals = np.fft.ifftn(coef, axes=tuple(range(1, dim + 1))).real * N ** dim
    return vals / np.abs(vals).max()


# ---------------------------------------------------------------- model symbols

def _full_xi(xi_p, xn) -> np.ndarray:
    xn = np.asarray(xn)
    xp = np.broadcast_to(np.asarray(xi_p, dtype=complex), xn.shape + (len(xi_p),))
    return np.concatenate([xp, xn[..., None].astype(complex)], axis=-1)


def bracket_model(n: int = 2) -> ModelSymbol:
    """a = 1 / <xi>^2, order -2, x-independent."""
    def func(s, xi_p, xn):
        xi = _full_xi(xi_p, xn)
        return (1.0 / (1.0 + np.sum(xi * xi, axis=-1)))[..., None, None]
    return ModelSymbol(func, -2, (1, 1), n, name="1/<xi>^2")


def odd_model(n: int = 2) -> ModelSymbol:
    """a = xi_n / <xi>^2, order -1 with odd leading part xi_n / |xi|^2 and J_+ = J_- = 1."""
    def func(s, xi_p, xn):
        xi = _full_xi(xi_p, xn)
        return (xi[..., -1] / (1.0 + np.sum(xi * xi, axis=-1)))[..., None, None]

    def lead(s, xi):
        xi = np.asarray(xi, dtype=float)
        return (xi[..., -1] / np.sum(xi * xi, axis=-1))[..., None, None]
    return ModelSymbol(func, -1, (1, 1), n, lead, True, "xi_n/<xi>^2")


def even_model(n: int = 2) -> ModelSymbol:
    """a = <xi_n> / <xi>^2, order -1 with even leading part |xi_n| / |xi|^2."""
    def func(s, xi_p, xn):
        xi = _full_xi(xi_p, xn)
        return (np.sqrt(1.0 + xi[..., -1] ** 2) / (1.0 + np.sum(xi * xi, axis=-1)))[..., None, None]

    def lead(s, xi):
        xi = np.asarray(xi, dtype=float)
        return (np.abs(xi[..., -1]) / np.sum(xi * xi, axis=-1))[..., None, None]
    return ModelSymbol(func, -1, (1, 1), n, lead, False, "<xi_n>/<xi>^2")


def stokes_double_layer_model(V: float = 1.0, V0: float = 1.0, n: int = 2) -> ModelSymbol:
    """Full symbol of P = -2 A D_nu^* + B nu^T on Gamma = {x_n = 0} with nu = -e_n.

    A, B are blocks of the exact inverse of M(xi) (V > 0 keeps it invertible at
    xi = 0); the leading part is sigma_{-1}(P) with J_+ = J_- = -i I.
    """
    from .symbols import StokesSymbolParams, double_layer_symbol
    if V <= 0:
        raise ValueError("the model double-layer symbol needs V > 0")
    nu = np.zeros(n)
    nu[-1] = -1.0
    eye = np.eye(n)

    def func(s, xi_p, xn):
        xi = _full_xi(xi_p, xn)
        r = np.sum(xi * xi, axis=-1)[..., None, None]
        M = np.zeros(xi.shape[:-1] + (n + 1, n + 1), dtype=complex)
        M[..., :n, :n] = (r + V) * eye + xi[..., :, None] * xi[..., None, :]
        M[..., :n, n] = 1j * xi
        M[..., n, :n] = -1j * xi
        M[..., n, n] = -V0
        inv = np.linalg.inv(M)
        A, B = inv[..., :n, :n], inv[..., :n, n:]
        xnu = (xi @ nu)[..., None, None]
        dstar = -0.5j * (xnu * eye + nu[:, None] * xi[..., None, :])
        return -2.0 * A @ dstar + B * nu[None, :]

    params = StokesSymbolParams(V=V, V0=V0)

    def lead(s, xi):
        return double_layer_symbol(params, nu, xi)[0]
    return ModelSymbol(func, -1, (n, n), n, lead, True, "stokes double layer")


def stokes_traction_model(V: float = 1.0, V0: float = 1.0, n: int = 2) -> ModelSymbol:
    """Symbol of the conormal derivative of the single layer, -2 D_nu A + nu B^H.

    Built directly from the blocks of M(xi)^{-1} rather than by conjugating the
    double-layer symbol, so comparing the two restrictions is a genuine check of
    (P*)_0 = (P_0)*.
    """
    from .symbols import StokesSymbolParams, double_layer_symbol
    if V <= 0:
        raise ValueError("the model traction symbol needs V > 0")
    nu = np.zeros(n)
    nu[-1] = -1.0
    eye = np.eye(n)

    def func(s, xi_p, xn):
        xi = _full_xi(xi_p, xn)
        r = np.sum(xi * xi, axis=-1)[..., None, None]
        M = np.zeros(xi.shape[:-1] + (n + 1, n + 1), dtype=complex)
        M[..., :n, :n] = (r + V) * eye + xi[..., :, None] * xi[..., None, :]
        M[..., :n, n] = 1j * xi
        M[..., n, :n] = -1j * xi
        M[..., n, n] = -V0
        inv = np.linalg.inv(M)
        A, Bh = inv[..., :n, :n], inv[..., n:, :n]
        xnu = (xi @ nu)[..., None, None]
        # conormal derivative D_nu u = (i/2)((nu.xi) u + xi (nu.u))
        d = 0.5j * (xnu * eye + xi[..., :, None] * nu[None, :])
        return -2.0 * d @ A + nu[:, None] * Bh

    params = StokesSymbolParams(V=V, V0=V0)

    def lead(s, xi):
        return np.conj(np.swapaxes(double_layer_symbol(params, nu, xi)[0], -1, -2))
    return ModelSymbol(func, -1, (n, n), n, lead, True, "stokes traction")
