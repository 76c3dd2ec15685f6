"""Per-transverse-mode description of the constant-coefficient pseudoinverse.

For fixed xi' every entry of M(xi', k)^-1 is a rational function of the
normal mode k with poles at +/- i beta_1 and +/- i beta_2,

    beta_1^2 = |xi'|^2 + V,    beta_2^2 = |xi'|^2 + V V0 / (2 V0 + 1).

Potentials of densities on a slice x_n = c are lattice sums over k of such
rational functions times exp(i k (x_n - c)). They are evaluated either
exactly through residues (lattice.Rational) or by truncated symmetric sums
with Richardson acceleration, which is the mode-sum route of the boundary
operator assembly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import Rational, polymat_eval, polymat_mul, reduce_offset
from .spectral import richardson_mode_sum

TARGETS = ("velocity", "pressure", "full", "traction")
SOURCES = ("single", "double")


def _xi_poly(xi_p) -> np.ndarray:
    """xi(k) = (xi', k) as a polynomial column vector, shape (2, n, 1)."""
    xi_p = np.asarray(xi_p, dtype=float)
    n = xi_p.size + 1
    out = np.zeros((2, n, 1), dtype=complex)
    out[0, :-1, 0] = xi_p
    out[1, -1, 0] = 1.0
    return out


def _transpose(a):
    return np.swapaxes(a, 1, 2)


def _scalar_poly(coeffs, size) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    return c[:, None, None] * np.eye(size)[None]


def _padd(*terms) -> np.ndarray:
    deg = max(t.shape[0] for t in terms)
    out = np.zeros((deg,) + terms[0].shape[1:], dtype=complex)
    for t in terms:
        out[:t.shape[0]] += t
    return out


def source_factor(kind: str, xi_p, nu) -> np.ndarray:
    """Polynomial (in k) matrix taking a density to the distribution coefficients.

    single: [I; 0]. double: T~_nu^* symbol [i((xi.nu) I + nu xi^T); nu^T].
    """
    xi_p = np.asarray(xi_p, dtype=float)
    n = xi_p.size + 1
    if kind == "single":
        out = np.zeros((1, n + 1, n), dtype=complex)
        out[0, :n] = np.eye(n)
        return out
    if kind == "double":
        nu = np.asarray(nu, dtype=float)
        xi = _xi_poly(xi_p)
        xn = np.einsum("dai,a->d", xi, nu)
        top = 1j * (_scalar_poly(xn, n) + np.einsum("a,dbi->dab", nu, xi))
        out = np.zeros((2, n + 1, n), dtype=complex)
        out[:, :n] = top
        out[0, n] = nu
        return out
    raise ValueError(f"unknown source {kind!r}")


def target_factor(kind: str, xi_p, nu=None) -> np.ndarray:
    """Polynomial matrix extracting velocity, pressure, everything, or T_nu."""
    xi_p = np.asarray(xi_p, dtype=float)
    n = xi_p.size + 1
    if kind == "velocity":
        out = np.zeros((1, n, n + 1), dtype=complex)
        out[0, :, :n] = np.eye(n)
        return out
    if kind == "pressure":
        out = np.zeros((1, 1, n + 1), dtype=complex)
        out[0, 0, n] = 1.0
        return out
    if kind == "full":
        return np.eye(n + 1, dtype=complex)[None]
    if kind == "traction":
        nu = np.asarray(nu, dtype=float)
        xi = _xi_poly(xi_p)
        xn = np.einsum("dai,a->d", xi, nu)
        left = -1j * (_scalar_poly(xn, n) + np.einsum("dai,b->dab", xi, nu))
        out = np.zeros((2, n, n + 1), dtype=complex)
        out[:, :, :n] = left
        out[0, :, n] = nu
        return out
    raise ValueError(f"unknown target {kind!r}")


def derivative_factor(order: int, size: int) -> np.ndarray:
    """(i k)^order as a polynomial matrix."""
    c = np.zeros(order + 1, dtype=complex)
    c[order] = 1j ** order
    return _scalar_poly(c, size)


@dataclass(frozen=True)
class ModalKernel:
    """X(k) = poly(k) + proper(k) for one transverse mode, plus the k = 0 value z0.

    The potential profile is (1/2 pi) sum_k exp(i k tau) X(k) off the slice,
    which equals (z0 - poly(0) + sum_{k != 0} exp(i k tau) proper(k)) / 2 pi.
    """

    proper: Rational
    poly: np.ndarray
    z0: np.ndarray

    @property
    def shape(self):
        return self.proper.shape

    @property
    def order(self) -> int:
        """Degree in k of X at infinity, ignoring round-off sized coefficients."""
        num = self.proper.num
        scale = max(np.abs(num).max(), np.abs(self.poly).max(), 1e-300)
        live = [i for i in range(self.poly.shape[0]) if np.abs(self.poly[i]).max() > 1e-12 * scale]
        if live:
            return max(live)
        den = sum(m for _, m in self.proper.poles)
        live = [i for i in range(num.shape[0]) if np.abs(num[i]).max() > 1e-12 * scale]
        return (max(live) - den) if live else -den

    @property
    def jump(self) -> np.ndarray:
        """J = lim k proper(k); the one-sided limits differ by i J."""
        den = sum(m for _, m in self.proper.poles)
        num = self.proper.num
        if num.shape[0] < den:
            return np.zeros(self.shape, dtype=complex)
        return num[den - 1].copy()

    def profile(self, tau) -> np.ndarray:
        """Values at offsets tau in [0, 2 pi], shape (T, rows, cols)."""
        base = self.z0 - self.poly[0]
        return (base[None] + self.proper.lattice_sum(tau)) / (2 * np.pi)

    def term(self, k) -> np.ndarray:
        k = np.asarray(k)
        out = np.zeros(k.shape + self.shape, dtype=complex)
        nz = k != 0
        if np.any(nz):
            out[nz] = self.proper(k[nz].astype(float))
        out[~nz] = self.z0 - self.poly[0]
        return out

    def mode_sum(self, tau: float, cutoff: int, levels: int = 4) -> np.ndarray:
        """Truncated symmetric sum (1/2 pi) sum_{|k| <= cutoff} exp(i k tau) X(k), accelerated."""
        def term(k):
            return self.term(k) * np.exp(1j * k * tau)[:, None, None]
        res = richardson_mode_sum(term, cutoff, levels)
        return res.value / (2 * np.pi)


def _monic(poles) -> np.ndarray:
    c = np.array([1.0 + 0j])
    for p, m in poles:
        for _ in range(m):
            c = np.convolve(c, np.array([-p, 1.0]))
    return c


def split_polynomial(num: np.ndarray, poles) -> tuple:
    """Divide a polynomial matrix by the monic denominator, returning (quotient, remainder)."""
    d = _monic(poles)
    D = d.size - 1
    deg = num.shape[0] - 1
    rem = num.astype(complex).copy()
    if deg < D:
        return np.zeros((1,) + num.shape[1:], dtype=complex), rem
    q = np.zeros((deg - D + 1,) + num.shape[1:], dtype=complex)
    for i in range(deg, D - 1, -1):
        coef = rem[i].copy()
        q[i - D] = coef
        rem[i - D:i + 1] -= coef[None] * d[:, None, None]
    return q, rem[:D]


@dataclass(frozen=True)
class ModalSystem:
    """Constant-coefficient strip system with coefficients V, V0 in dimension n."""

    V: float
    V0: float
    n: int

    @property
    def f(self) -> float:
        return (self.V0 + 1.0) / (2.0 * self.V0 + 1.0)

    @property
    def g(self) -> float:
        return 1.0 / (2.0 * self.V0 + 1.0)

    def betas(self, xi_p) -> tuple:
        b2 = float(np.sum(np.square(xi_p)))
        return np.sqrt(b2 + self.V), np.sqrt(b2 + self.V * self.V0 / (2 * self.V0 + 1))

    def poles(self, xi_p) -> tuple:
        b1, b2 = self.betas(xi_p)
        mult = {}
        for b in (b1, b2):
            if b == 0.0:
                mult[0j] = mult.get(0j, 0) + 2
            else:
                for p in (1j * b, -1j * b):
                    key = complex(p)
                    hit = [q for q in mult if abs(q - key) <= 1e-14 * max(1.0, abs(key))]
                    if hit:
                        mult[hit[0]] += 1
                    else:
                        mult[key] = 1
        return tuple(sorted(mult.items(), key=lambda t: (t[0].imag, t[0].real)))

    def numerator(self, xi_p) -> np.ndarray:
        """Q1 Q2 M(xi', k)^-1 as a polynomial matrix in k, shape (5, n+1, n+1)."""
        n = self.n
        xi_p = np.asarray(xi_p, dtype=float)
        b2 = float(np.sum(xi_p ** 2))
        f, g, V = self.f, self.g, self.V
        q1 = np.array([b2 + V, 0.0, 1.0])
        q2 = np.array([b2 + V * self.V0 / (2 * self.V0 + 1), 0.0, 1.0])
        xi = _xi_poly(xi_p)
        xxT = polymat_mul(xi, _transpose(xi))
        A = _padd(_scalar_poly(q2, n), -f * xxT)
        B = 1j * g * polymat_mul(xi, q1[:, None, None].astype(complex))
        C = -1j * g * polymat_mul(q1[:, None, None].astype(complex), _transpose(xi))
        dpoly = -g * np.convolve(np.array([2 * b2 + V, 0.0, 2.0]), q1)
        out = np.zeros((5, n + 1, n + 1), dtype=complex)
        out[:A.shape[0], :n, :n] = A
        out[:B.shape[0], :n, n:] = B
        out[:C.shape[0], n:, :n] = C
        out[:dpoly.size, n, n] = dpoly
        return out

    def matrix(self, xi_p, k) -> np.ndarray:
        from .stokes import modal_matrix
        xi = np.append(np.asarray(xi_p, dtype=float), float(k))
        return modal_matrix(self.V, self.V0, xi)

    def zero_pinv(self, xi_p) -> np.ndarray:
        """Pseudoinverse of M(xi', 0), the k = 0 mode of the strip sums."""
        return np.linalg.pinv(self.matrix(xi_p, 0.0), rcond=1e-13)

    def kernel(self, xi_p, target: str = "full", source: str = "single", nu_t=None, nu_s=None,
               deriv: int = 0) -> ModalKernel:
        xi_p = np.asarray(xi_p, dtype=float)
        tgt = target_factor(target, xi_p, nu_t)
        if source == "full":
            src = np.eye(self.n + 1, dtype=complex)[None]
        else:
            src = source_factor(source, xi_p, nu_s)
        num = polymat_mul(polymat_mul(tgt, self.numerator(xi_p)), src)
        if deriv:
            num = polymat_mul(derivative_factor(deriv, tgt.shape[1]), num)
        poles = self.poles(xi_p)
        q, r = split_polynomial(num, poles)
        z0 = np.zeros(num.shape[1:], dtype=complex)
        if deriv == 0:
            z0 = tgt[0] @ self.zero_pinv(xi_p) @ src[0]
        return ModalKernel(Rational(r, poles), q, z0)


@lru_cache(maxsize=64)
def modal_system(V: float, V0: float, n: int) -> ModalSystem:
    return ModalSystem(float(V), float(V0), int(n))


class KernelCache:
    """Memoized ModalKernel objects keyed by mode and factor choice."""

    def __init__(self, system: ModalSystem):
        self.system = system
        self._store = {}

    def get(self, xi_p, target, source, nu_t=None, nu_s=None, deriv=0) -> ModalKernel:
        key = (tuple(np.asarray(xi_p, dtype=float).tolist()), target, source,
               None if nu_t is None else tuple(np.asarray(nu_t, dtype=float)),
               None if nu_s is None else tuple(np.asarray(nu_s, dtype=float)), deriv)
        if key not in self._store:
            self._store[key] = self.system.kernel(xi_p, target, source, nu_t, nu_s, deriv)
        return self._store[key]


def offsets(x, height: float, side: int = 1) -> np.ndarray:
    """tau = x - height reduced to [0, 2 pi]; side picks the one-sided limit on the slice."""
    return reduce_offset(np.asarray(x, dtype=float) - height, side)


def polyval(a, k):
    return polymat_eval(a, k)
