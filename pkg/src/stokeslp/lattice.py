"""Exact lattice sums of rational matrix functions.

For a rational matrix function R(z) = P(z) / prod_j (z - p_j)^{m_j} the sum

    sum_{k != 0} exp(i k tau) R(k),    tau in [0, 2 pi],

is evaluated in closed form as minus the sum of the residues of
R(z) g_tau(z), with g_tau(z) = 2 pi i exp(i z tau) / (exp(2 pi i z) - 1).
tau = 0 returns the limit from tau > 0 and tau = 2 pi the limit from
tau < 2 pi, which are the two one-sided limits at the lattice origin.
Polynomial parts of R only contribute distributions supported at tau = 0
and are ignored, which is what is wanted off the hypersurface.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb, factorial

import numpy as np
from scipy.special import bernoulli

TWO_PI = 2.0 * np.pi


def polymat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of polynomial matrices stored as ascending coefficient stacks."""
    da, db = a.shape[0], b.shape[0]
    out = np.zeros((da + db - 1, a.shape[1], b.shape[2]), dtype=complex)
    for i in range(da):
        for j in range(db):
            out[i + j] += a[i] @ b[j]
    return out


def polymat_eval(a: np.ndarray, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + a.shape[1:], dtype=complex)
    for c in a[::-1]:
        out = out * z[..., None, None] + c
    return out


def _shift(a: np.ndarray, z0: complex, order: int) -> np.ndarray:
    """Taylor coefficients of a(z0 + w) up to w^(order-1)."""
    deg = a.shape[0] - 1
    out = np.zeros((order,) + a.shape[1:], dtype=complex)
    for j in range(min(order, deg + 1)):
        for i in range(j, deg + 1):
            out[j] += comb(i, j) * z0 ** (i - j) * a[i]
    return out


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    order = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for i in range(order):
        out[..., i:] += a[..., i:i + 1] * b[..., :order - i]
    return out


def _series_inv(a: np.ndarray) -> np.ndarray:
    order = a.shape[-1]
    out = np.zeros_like(a, dtype=complex)
    out[..., 0] = 1.0 / a[..., 0]
    for j in range(1, order):
        acc = np.zeros_like(out[..., 0])
        for i in range(1, j + 1):
            acc += a[..., i] * out[..., j - i]
        out[..., j] = -acc * out[..., 0]
    return out


def _exp_series(c: np.ndarray, order: int) -> np.ndarray:
    """Coefficients of exp(c w) for an array of c."""
    c = np.asarray(c, dtype=complex)
    return np.stack([c ** j / factorial(j) for j in range(order)], axis=-1)


def _kernel_series(p: complex, tau: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients of g_tau(p + w) at a non-real pole p."""
    if p.imag > 0:
        q = np.exp(2j * np.pi * p)
        den = q * _exp_series(2j * np.pi, order)
        den[..., 0] -= 1.0
        pref = 2j * np.pi * np.exp(1j * p * tau)
        num = _exp_series(1j * tau, order)
    elif p.imag < 0:
        q = np.exp(-2j * np.pi * p)
        den = -q * _exp_series(-2j * np.pi, order)
        den[..., 0] += 1.0
        pref = 2j * np.pi * np.exp(1j * p * (tau - TWO_PI))
        num = _exp_series(1j * (tau - TWO_PI), order)
    else:
        raise ValueError(f"real pole {p} is not supported")
    return pref[:, None] * _series_mul(num, _series_inv(den)[None, :])


def _origin_series(tau: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients of w g_tau(w) at w = 0."""
    b = bernoulli(max(order - 1, 1))[:order]
    bern = np.array([b[j] * (2j * np.pi) ** j / factorial(j) for j in range(order)])
    return _series_mul(_exp_series(1j * tau, order), bern[None, :])


def _factor_series(z0: complex, poles, order: int) -> np.ndarray:
    """Coefficients of prod_j (z0 - p_j + w)^(-m_j) over the given poles."""
    out = np.zeros(order, dtype=complex)
    out[0] = 1.0
    for pj, mj in poles:
        d = z0 - pj
        s = np.array([(-1) ** j * comb(mj + j - 1, j) / d ** j for j in range(order)])
        out = _series_mul(out, s) / d ** mj
    return out


@dataclass(frozen=True)
class Rational:
    """Rational matrix function P(z) / prod_j (z - p_j)^{m_j}.

    num has shape (deg + 1, rows, cols); poles is a tuple of (pole, multiplicity)
    with distinct poles. A pole at the origin is allowed.
    """

    num: np.ndarray
    poles: tuple

    @property
    def shape(self):
        return self.num.shape[1:]

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        den = np.ones(z.shape, dtype=complex)
        for p, m in self.poles:
            den = den * (z - p) ** m
        return polymat_eval(self.num, z) / den[..., None, None]

    def left(self, a: np.ndarray) -> "Rational":
        return Rational(polymat_mul(a, self.num), self.poles)

    def right(self, a: np.ndarray) -> "Rational":
        return Rational(polymat_mul(self.num, a), self.poles)

    @cached_property
    def closed_form(self) -> list:
        """Terms (p, tau shift, C) with lattice sum = -sum exp(i p t) sum_j t^j C[j], t = tau - shift.

        The residue of R g_tau at a pole p of order m is exp(i p t) times a
        polynomial of degree m - 1 in t, since only exp(i t w) depends on tau.
        """
        m0 = 0
        others = []
        for p, m in self.poles:
            if p == 0:
                m0 = m
            else:
                others.append((complex(p), m))
        terms = []
        for idx, (p, m) in enumerate(others):
            rest = others[:idx] + others[idx + 1:] + ([(0j, m0)] if m0 else [])
            if p.imag > 0:
                den = np.exp(2j * np.pi * p) * _exp_series(2j * np.pi, m)
                den[0] -= 1.0
                shift = 0.0
            else:
                den = -np.exp(-2j * np.pi * p) * _exp_series(-2j * np.pi, m)
                den[0] += 1.0
                shift = TWO_PI
            w = 2j * np.pi * _series_mul(_series_inv(den), _factor_series(p, rest, m))
            terms.append((p, shift, self._poly_in_t(_shift(self.num, p, m), w, m)))
        order = m0 + 1
        b = bernoulli(max(order - 1, 1))[:order]
        bern = np.array([b[j] * (2j * np.pi) ** j / factorial(j) for j in range(order)])
        w = _series_mul(bern, _factor_series(0.0, others, order))
        terms.append((0j, 0.0, self._poly_in_t(_shift(self.num, 0.0, order), w, order)))
        return terms

    @staticmethod
    def _poly_in_t(pser: np.ndarray, w: np.ndarray, order: int) -> np.ndarray:
        # coefficient of u^(order-1) in pser(u) w(u) exp(i t u), as a polynomial in t
        prod = np.zeros((order,) + pser.shape[1:], dtype=complex)
        for i in range(order):
            for j in range(order - i):
                prod[i + j] += pser[i] * w[j]
        return np.array([(1j) ** j / factorial(j) * prod[order - 1 - j] for j in range(order)])

    def lattice_sum(self, tau) -> np.ndarray:
        """sum_{k != 0} exp(i k tau) R(k) for tau in [0, 2 pi], shape (T, rows, cols)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if np.any(tau < 0) or np.any(tau > TWO_PI):
            raise ValueError("tau must lie in [0, 2 pi]")
        out = np.zeros((tau.size,) + self.shape, dtype=complex)
        for p, shift, C in self.closed_form:
            t = tau - shift
            powers = t[:, None] ** np.arange(C.shape[0])[None, :]
            out -= np.exp(1j * p * t)[:, None, None] * np.einsum("tj,jrc->trc", powers, C)
        return out

    def lattice_sum_series(self, tau) -> np.ndarray:
        """Same sum via Taylor series of the kernel at each pole (reference path)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if np.any(tau < 0) or np.any(tau > TWO_PI):
            raise ValueError("tau must lie in [0, 2 pi]")
        out = np.zeros((tau.size,) + self.shape, dtype=complex)
        m0 = 0
        others = []
        for p, m in self.poles:
            if p == 0:
                m0 = m
            else:
                others.append((complex(p), m))
        for idx, (p, m) in enumerate(others):
            rest = others[:idx] + others[idx + 1:] + ([(0j, m0)] if m0 else [])
            pser = _shift(self.num, p, m)
            sser = _series_mul(_kernel_series(p, tau, m), _factor_series(p, rest, m)[None, :])
            out -= np.einsum("jrc,tj->trc", pser, sser[:, ::-1])
        order = m0 + 1
        pser = _shift(self.num, 0.0, order)
        sser = _series_mul(_origin_series(tau, order), _factor_series(0.0, others, order)[None, :])
        out -= np.einsum("jrc,tj->trc", pser, sser[:, ::-1])
        return out


def reduce_offset(t, side: int = 1) -> np.ndarray:
    """Map offsets to [0, 2 pi]; offsets that are multiples of 2 pi go to the
    endpoint matching the requested side (+1 -> 0, -1 -> 2 pi)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tau = np.mod(t, TWO_PI)
    on = (np.abs(tau) <= 1e-14) | (np.abs(tau - TWO_PI) <= 1e-14)
    tau[on] = 0.0 if side > 0 else TWO_PI
    return tau
