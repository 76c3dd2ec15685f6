"""Principal symbols of the generalized Stokes operator and its relatives.

All evaluators are vectorized: xi has shape (..., n) and matrices come back
with shape (..., rows, cols). Quantization convention a(x, D)u =
(2 pi)^-n int exp(i x.xi) a(x, xi) uhat(xi) dxi, so d/dx_j has symbol i xi_j.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class SingularPointError(ValueError):
    pass


@dataclass(frozen=True)
class StokesSymbolParams:
    V: float = 0.0
    V0: float = 0.0

    def __post_init__(self):
        if self.V < 0 or self.V0 < 0:
            raise ValueError("V and V0 must be nonnegative")

    @property
    def f(self) -> float:
        return (self.V0 + 1.0) / (2.0 * self.V0 + 1.0)

    @property
    def g(self) -> float:
        return 1.0 / (2.0 * self.V0 + 1.0)


@dataclass(frozen=True)
class MatrixSymbol:
    """Matrix-valued symbol a(x, xi) of integer order with optional leading term.

    evaluator(xi, x) and leading(xi, x) take xi of shape (..., n); x is passed
    through untouched and may be None for constant-coefficient symbols.
    """

    order: int
    shape: tuple
    evaluator: Callable
    leading: Optional[Callable] = None
    name: str = ""

    def __call__(self, xi, x=None) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(xi, dtype=float), x))

    def principal(self, xi, x=None) -> np.ndarray:
        if self.leading is None:
            raise ValueError(f"symbol {self.name!r} has no leading term")
        return np.asarray(self.leading(np.asarray(xi, dtype=float), x))

    def adjoint(self) -> "MatrixSymbol":
        def ev(xi, x):
            return np.conj(np.swapaxes(self.evaluator(xi, x), -1, -2))
        lead = None
        if self.leading is not None:
            def lead(xi, x):
                return np.conj(np.swapaxes(self.leading(xi, x), -1, -2))
        return MatrixSymbol(self.order, self.shape[::-1], ev, lead, self.name + "*")


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _eye(n, batch):
    return np.broadcast_to(np.eye(n), batch + (n, n))


def _check_nonzero(xi):
    if np.any(np.sum(xi * xi, axis=-1) == 0):
        raise SingularPointError("symbol is singular at xi = 0")


def stokes_symbol(params: StokesSymbolParams, xi) -> np.ndarray:
    """ADN principal symbol [[|xi|^2 + xi xi^T, i xi], [-i xi^T, -V0]].

    At xi = 0 the zero-mode block diag(V I, -V0) of the full operator is
    returned instead.
    """
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    batch = xi.shape[:-1]
    r = np.sum(xi * xi, axis=-1)
    out = np.zeros(batch + (n + 1, n + 1), dtype=complex)
    out[..., :n, :n] = r[..., None, None] * _eye(n, batch) + _outer(xi, xi)
    out[..., :n, n] = 1j * xi
    out[..., n, :n] = -1j * xi
    out[..., n, n] = -params.V0
    zero = r == 0
    if np.any(zero):
        out[zero] = np.diag([params.V] * n + [-params.V0])
    return out


def stokes_symbol_inverse(params: StokesSymbolParams, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    _check_nonzero(xi)
    n = xi.shape[-1]
    out = np.zeros(xi.shape[:-1] + (n + 1, n + 1), dtype=complex)
    out[..., :n, :n] = block_symbol("A", params, xi)
    out[..., :n, n:] = block_symbol("B", params, xi)
    out[..., n:, :n] = block_symbol("C", params, xi)
    out[..., n:, n:] = block_symbol("D", params, xi)
    return out


def block_symbol(which: str, params: StokesSymbolParams, xi) -> np.ndarray:
    """Leading symbols of the blocks A, B, C, D of the inverse Stokes symbol."""
    xi = np.asarray(xi, dtype=float)
    _check_nonzero(xi)
    n = xi.shape[-1]
    batch = xi.shape[:-1]
    r = np.sum(xi * xi, axis=-1)[..., None, None]
    f, g = params.f, params.g
    if which == "A":
        return (_eye(n, batch) / r - f * _outer(xi, xi) / r ** 2).astype(complex)
    if which == "B":
        return 1j * g * xi[..., :, None] / r
    if which == "C":
        return -1j * g * xi[..., None, :] / r
    if which == "D":
        return np.full(batch + (1, 1), -2.0 * g, dtype=complex)
    raise ValueError(f"unknown block {which!r}")


FIRST_ORDER = ("Def", "DefStar", "Grad", "DivStar", "Dnu", "DnuStar")


def first_order_symbol(which: str, xi, nu=None) -> np.ndarray:
    """First-order symbols as matrices in the flat frame.

    Symmetric tensors are flattened row-major, so Def maps R^n -> R^{n*n}
    and DefStar maps R^{n*n} -> R^n.
    """
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    batch = xi.shape[:-1]
    eye = np.eye(n)
    if which in ("Dnu", "DnuStar"):
        if nu is None:
            raise ValueError(f"{which} needs a normal vector")
        nu = np.broadcast_to(np.asarray(nu, dtype=float), xi.shape)
        xn = np.sum(xi * nu, axis=-1)[..., None, None]
        if which == "Dnu":
            return 0.5j * (xn * eye + _outer(xi, nu))
        return -0.5j * (xn * eye + _outer(nu, xi))
    if which == "Def":
        # (i/2)(xi_a X_b + X_a xi_b)
        out = np.zeros(batch + (n, n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                out[..., a, b, b] += 0.5j * xi[..., a]
                out[..., a, b, a] += 0.5j * xi[..., b]
        return out.reshape(batch + (n * n, n))
    if which == "DefStar":
        # -(i/2)(T xi + T^T xi)
        out = np.zeros(batch + (n, n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                out[..., a, a, b] += -0.5j * xi[..., b]
                out[..., a, b, a] += -0.5j * xi[..., b]
        return out.reshape(batch + (n, n * n))
    if which == "Grad":
        return 1j * xi[..., :, None]
    if which == "DivStar":
        return -1j * xi[..., None, :]
    raise ValueError(f"unknown first-order operator {which!r}")


def boundary_map(which: str, nu) -> np.ndarray:
    """-i sigma_1(P; nu), the boundary map of the integration-by-parts formula."""
    if which not in ("Def", "DefStar", "Grad", "DivStar"):
        raise ValueError(f"no boundary map for {which!r}")
    return -1j * first_order_symbol(which, nu)


def deformation_conormal(nu, xi) -> np.ndarray:
    """Boundary map of Def* composed with sigma_1(Def); equals -sigma_1(D_nu)."""
    return boundary_map("DefStar", nu) @ first_order_symbol("Def", xi)


def double_layer_symbol(params: StokesSymbolParams, nu, xi):
    """sigma_{-1} of P = -2 A D_nu^* + B nu^T, with its jump coefficient.

    Returns (matrix, J) where J = -i I is the limit of tau sigma_{-1}(P; xi' - tau nu)
    in the direction pointing into the side the normal leaves.
    """
    xi = np.asarray(xi, dtype=float)
    _check_nonzero(xi)
    n = xi.shape[-1]
    nu = np.broadcast_to(np.asarray(nu, dtype=float), xi.shape)
    f, g = params.f, params.g
    r = np.sum(xi * xi, axis=-1)[..., None, None]
    xn = np.sum(xi * nu, axis=-1)[..., None, None]
    mat = (1j / r) * (xn * np.eye(n) + _outer(nu, xi) - (2 * f * xn / r) * _outer(xi, xi)
                      + g * _outer(xi, nu))
    return mat, -1j * np.eye(n)


def _tangential(nu, xi):
    nu = np.asarray(nu, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(np.sum(xi * nu, axis=-1)) > 1e-12 * np.maximum(1.0, np.linalg.norm(xi, axis=-1))):
        raise ValueError("xi' must be orthogonal to nu")
    _check_nonzero(xi)
    return nu, xi, np.linalg.norm(xi, axis=-1)[..., None, None]


def boundary_symbol(which: str, params: StokesSymbolParams, nu, xi) -> np.ndarray:
    """Leading symbols of K (order 0), S (order -1) and C0 (order 0) at xi' perpendicular to nu."""
    nu, xi, a = _tangential(nu, xi)
    n = xi.shape[-1]
    nu = np.broadcast_to(nu, xi.shape)
    f, g, V0 = params.f, params.g, params.V0
    if which == "K":
        return (1j * V0 / (2 * (2 * V0 + 1) * a)) * (_outer(nu, xi) - _outer(xi, nu))
    if which == "S":
        eta = xi / a[..., 0]
        return ((2 * np.eye(n) - f * _outer(nu, nu) - f * _outer(eta, eta)) / (4 * a)).astype(complex)
    if which == "C0":
        return -(1j * g / (2 * a)) * xi[..., None, :]
    raise ValueError(f"unknown boundary operator {which!r}")


def is_homogeneous(func: Callable, order: int, xi, lam: float) -> float:
    """Max deviation |func(lam xi) - lam^order func(xi)|, relative."""
    a = np.asarray(func(lam * np.asarray(xi)))
    b = lam ** order * np.asarray(func(np.asarray(xi)))
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
