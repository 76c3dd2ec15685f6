"""Torus grids, Fourier series transforms, Sobolev norms, line quadrature and
lattice mode sums.

Fourier series convention: f(x) = sum_xi fhat(xi) exp(i xi.x) with
fhat(xi) = (2 pi)^-n int f exp(-i xi.x) dx, so fhat is the FFT divided by N^n.
"""
from __future__ import annotations

import heapq
import itertools
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate


class DimensionError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (achieved error estimate {estimate:.3e})")
        self.estimate = estimate


def wavenumbers(N: int) -> np.ndarray:
    """Integer modes in FFT order, -N/2 .. N/2-1."""
    return np.fft.fftfreq(N, 1.0 / N).round().astype(int)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on [0, 2 pi)^n with N points per axis."""

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DimensionError(f"dimension must be 2 or 3, got {self.n}")
        if self.N < 8 or self.N & (self.N - 1):
            raise DimensionError(f"N must be a power of two >= 8, got {self.N}")

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.N

    @property
    def volume(self) -> float:
        return (2 * np.pi) ** self.n

    @cached_property
    def points(self) -> np.ndarray:
        x = np.arange(self.N) * self.spacing
        return np.array(np.meshgrid(*([x] * self.n), indexing="ij"))

    @cached_property
    def modes(self) -> np.ndarray:
        k = wavenumbers(self.N)
        return np.array(np.meshgrid(*([k] * self.n), indexing="ij"))


@dataclass
class SpectralField:
    """Fourier coefficients with shape (components,) + grid.shape in FFT order."""

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim == self.grid.n:
            self.coeffs = self.coeffs[None]
        if self.coeffs.shape[1:] != self.grid.shape:
            raise DimensionError(f"coefficient shape {self.coeffs.shape} does not match {self.grid.shape}")

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def is_real(self, tol: float = 1e-12) -> bool:
        axes = tuple(range(1, self.coeffs.ndim))
        flipped = np.roll(np.flip(self.coeffs, axis=axes), 1, axis=axes)
        # the Nyquist plane has no partner inside the grid
        scale = max(np.abs(self.coeffs).max(), 1e-300)
        mask = np.ones(self.grid.shape, bool)
        for ax in range(self.grid.n):
            idx = [slice(None)] * self.grid.n
            idx[ax] = self.grid.N // 2
            mask[tuple(idx)] = False
        return bool(np.all(np.abs(self.coeffs - flipped.conj())[:, mask] <= tol * scale))


def transform(data, direction: str = "forward", grid: TorusGrid | None = None):
    """Forward: grid values -> SpectralField. Inverse: SpectralField -> grid values."""
    if direction == "forward":
        if grid is None:
            raise DimensionError("forward transform needs a grid")
        vals = np.asarray(data)
        if vals.ndim == grid.n:
            vals = vals[None]
        if vals.shape[1:] != grid.shape:
            raise DimensionError(f"values of shape {vals.shape} do not match grid {grid.shape}")
        axes = tuple(range(1, grid.n + 1))
        return SpectralField(grid, np.fft.fftn(vals, axes=axes) / grid.N ** grid.n)
    if direction == "inverse":
        if not isinstance(data, SpectralField):
            raise DimensionError("inverse transform expects a SpectralField")
        g = data.grid
        axes = tuple(range(1, g.n + 1))
        return np.fft.ifftn(data.coeffs, axes=axes) * g.N ** g.n
    raise ValueError(f"unknown direction {direction!r}")


def japanese_bracket(xi) -> np.ndarray:
    """<xi> = sqrt(1 + |xi|^2) along the last axis."""
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(1.0 + np.sum(xi * xi, axis=-1))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm (2 pi)^{n/2} (sum <xi>^{2s} |fhat|^2)^{1/2}; s = 0 is the L2 norm."""
    w = japanese_bracket(np.moveaxis(f.grid.modes, 0, -1)) ** (2 * s)
    total = np.sum(w[None] * np.abs(f.coeffs) ** 2)
    return float(np.sqrt(f.grid.volume * total))


def l2_grid_norm(values: np.ndarray, grid: TorusGrid) -> float:
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * grid.spacing ** grid.n))


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureSpec:
    atol: float = 1e-13
    rtol: float = 1e-11
    max_subdivisions: int = 2000
    decay: float = -2.0

    def __post_init__(self):
        if self.atol <= 0 or self.rtol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 16:
            raise ValueError("max_subdivisions must be at least 16")


_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_WKRON = np.concatenate([_WK[:-1], _WK[::-1]])
_WGAUSS = np.zeros(15)
_WGAUSS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass
class QuadratureResult:
    value: complex | np.ndarray
    error: float
    panels: int


def _gk_panel(func, a, b):
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    vals = np.asarray(func(c + h * _NODES))
    k = h * np.tensordot(_WKRON, vals, axes=(0, 0))
    g = h * np.tensordot(_WGAUSS, vals, axes=(0, 0))
    return k, float(np.max(np.abs(k - g)))


def adaptive_gk(func, a: float, b: float, spec: QuadratureSpec, initial: int = 8) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod (7, 15) on [a, b]; func is vectorized."""
    edges = np.linspace(a, b, initial + 1)
    heap, total, err = [], 0.0, 0.0
    tie = itertools.count()
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _gk_panel(func, lo, hi)
        heapq.heappush(heap, (-e, next(tie), lo, hi, v))
        total = total + v
        err += e
    count = initial
    while err > max(spec.atol, spec.rtol * float(np.max(np.abs(total)))):
        if count >= spec.max_subdivisions:
            raise QuadratureError("adaptive quadrature did not converge", err)
        e, _, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk_panel(func, lo, mid)
        v2, e2 = _gk_panel(func, mid, hi)
        total = total - v + v1 + v2
        err += e1 + e2 + e
        heapq.heappush(heap, (-e1, next(tie), lo, mid, v1))
        heapq.heappush(heap, (-e2, next(tie), mid, hi, v2))
        count += 1
    return QuadratureResult(total, err, count)


def line_quadrature(integrand: Callable, spec: QuadratureSpec = QuadratureSpec(),
                    scale: float = 1.0, symmetrize: bool = False) -> QuadratureResult:
    """Integral of a vectorized integrand over the real line.

    The line is mapped to (-1, 1) by xi = scale u / (1 - u^2). With decay
    |xi|^m, m <= -2, the mapped integrand stays bounded at the endpoints.
    With symmetrize the even part f(xi) + f(-xi) is integrated over (0, inf),
    which is the principal-value pairing used for order -1 integrands.
    """
    if symmetrize:
        def g(u):
            xi = scale * u / (1.0 - u)
            jac = scale / (1.0 - u) ** 2
            vals = np.asarray(integrand(xi)) + np.asarray(integrand(-xi))
            return vals * jac.reshape((-1,) + (1,) * (vals.ndim - 1))
        return adaptive_gk(g, 0.0, 1.0, spec)
    if spec.decay > -2:
        raise ValueError("integrand must decay like |xi|^-2 or be symmetrized")

    def h(u):
        xi = scale * u / (1.0 - u * u)
        jac = scale * (1.0 + u * u) / (1.0 - u * u) ** 2
        vals = np.asarray(integrand(xi))
        return vals * jac.reshape((-1,) + (1,) * (vals.ndim - 1))
    return adaptive_gk(h, -1.0, 1.0, spec)


def fourier_line_quadrature(integrand: Callable, t: float, spec: QuadratureSpec = QuadratureSpec(),
                            scale: float = 1.0, method: str = "contour") -> np.ndarray:
    """int_R exp(i t xi) a(xi) dxi for t != 0.

    method "contour": adaptive Gauss-Kronrod on [-X, X], X = 4 scale, and the
    two tails rotated onto vertical rays in the half plane where exp(i t xi)
    decays. The integrand must accept complex arguments and be analytic for
    |Re xi| >= X, which holds for symbols rational in xi with poles near the
    imaginary axis. method "qawf": QUADPACK's Fourier-weight rule on the even
    and odd parts, entry by entry (slow, real arguments only).
    """
    if t == 0:
        raise ValueError("use line_quadrature for t = 0")
    if method == "qawf":
        return _qawf(integrand, t, spec)
    if method != "contour":
        raise ValueError(f"unknown method {method!r}")
    X = 4.0 * scale
    sg = 1.0 if t > 0 else -1.0

    def mid(x):
        vals = np.asarray(integrand(x))
        return vals * np.exp(1j * t * x).reshape((-1,) + (1,) * (vals.ndim - 1))

    def rays(u):
        y = scale * u / (1.0 - u)
        jac = scale / (1.0 - u) ** 2
        zr, zl = X + 1j * sg * y, -X + 1j * sg * y
        vr, vl = np.asarray(integrand(zr)), np.asarray(integrand(zl))
        shp = (-1,) + (1,) * (vr.ndim - 1)
        w = (jac * np.exp(-abs(t) * y)).reshape(shp)
        return 1j * sg * w * (np.exp(1j * t * X) * vr - np.exp(-1j * t * X) * vl)

    body = adaptive_gk(mid, -X, X, spec, initial=max(8, int(abs(t) * X)))
    tails = adaptive_gk(rays, 0.0, 1.0, spec)
    return body.value + tails.value


def _qawf(integrand, t, spec):
    w, sgn = abs(t), np.sign(t)
    probe = np.asarray(integrand(np.array([1.0])))[0]
    shape = probe.shape

    def part(x, sign):
        x = np.array([x])
        return 0.5 * (np.asarray(integrand(x))[0] + sign * np.asarray(integrand(-x))[0])

    out = np.zeros(shape, dtype=complex)
    for idx in np.ndindex(*shape):
        acc = 0.0 + 0.0j
        for sign, weight, factor in ((1.0, "cos", 2.0), (-1.0, "sin", 2j * sgn)):
            for take, unit in ((np.real, 1.0), (np.imag, 1j)):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", integrate.IntegrationWarning)
                    val, _ = integrate.quad(lambda x: float(take(part(x, sign)[idx])), 0.0, np.inf,
                                            weight=weight, wvar=w, epsabs=spec.atol, limlst=200,
                                            limit=spec.max_subdivisions)
                acc += factor * unit * val
        out[idx] = acc
    return out


# ---------------------------------------------------------------- mode sums

@dataclass
class ModeSumResult:
    value: np.ndarray
    tail: float
    cutoff: int


def mode_sum(term: Callable, cutoff: int, symmetrize: bool = True) -> ModeSumResult:
    """sum_{|k| <= cutoff} term(k), pairing k with -k when symmetrize is set.

    term is vectorized over an integer array. The tail bound assumes the
    (symmetrized) term decays like |k|^-2 and is estimated from the last term.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    k = np.arange(1, cutoff + 1)
    t0 = np.asarray(term(np.array([0])))[0]
    tp, tm = np.asarray(term(k)), np.asarray(term(-k))
    pairs = tp + tm if symmetrize else None
    if symmetrize:
        value = t0 + np.sum(pairs, axis=0)
        last = np.max(np.abs(pairs[-1]))
    else:
        value = t0 + np.sum(tp, axis=0) + np.sum(tm, axis=0)
        last = max(np.max(np.abs(tp[-1])), np.max(np.abs(tm[-1])))
    return ModeSumResult(value, float(last * cutoff), cutoff)


def richardson_mode_sum(term: Callable, cutoff: int, levels: int = 4) -> ModeSumResult:
    """Symmetrized sum with Richardson elimination of the 1/L, 1/L^2, ... tail.

    Uses cutoffs cutoff, cutoff/2, ..., cutoff/2^(levels-1); the cutoffs
    must keep their parity so that alternating terms share one expansion.
    """
    if cutoff % (2 ** levels):
        raise ValueError("cutoff must be divisible by 2**levels")
    k = np.arange(1, cutoff + 1)
    t0 = np.asarray(term(np.array([0])))[0]
    pairs = np.asarray(term(k)) + np.asarray(term(-k))
    partial = np.cumsum(pairs, axis=0)
    sums = [t0 + partial[cutoff // 2 ** j - 1] for j in range(levels)]
    table = sums[::-1]
    for order in range(1, levels):
        table = [(2 ** order * table[i + 1] - table[i]) / (2 ** order - 1) for i in range(len(table) - 1)]
    tail = float(np.max(np.abs(table[0] - sums[0])))
    return ModeSumResult(table[0], tail, cutoff)
