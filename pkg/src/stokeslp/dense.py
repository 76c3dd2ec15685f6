"""Kernel of Xi and its Moore-Penrose pseudoinverse on the torus.

Two realizations share one interface. For constant V, V0 the operator is
diagonal in Fourier space and the pseudoinverse is the per-mode pinv of
M(xi). For grid-function coefficients Xi is assembled densely in the
Fourier basis of Nyquist-free modes (multiplication by V becomes a wrapped
convolution with the grid coefficients of V, exactly as the pseudospectral
product acts), and the pseudoinverse comes from its Hermitian eigensystem.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral import TorusGrid
from .stokes import (AmbiguousClassificationError, StokesParams, VelocityPressureField, fft, ifft,
                     modal_matrix, torus_inner)

KERNEL_TOL = 1e-9
GAP_TOL = 1e-5


class SolverError(RuntimeError):
    def __init__(self, message: str, condition: float = float("nan")):
        super().__init__(message)
        self.condition = condition


def nyquist_free(grid: TorusGrid) -> np.ndarray:
    """Mask of modes with no Nyquist component."""
    return np.all(grid.modes != -grid.N // 2, axis=0)


def free_modes(grid: TorusGrid) -> np.ndarray:
    """Nyquist-free modes, shape (K, n), in FFT order of the flattened grid."""
    mask = nyquist_free(grid)
    return np.stack([m[mask] for m in grid.modes], axis=-1)


def field_to_vector(U: VelocityPressureField) -> np.ndarray:
    """Coefficients at Nyquist-free modes, mode-major: index = mode * (n+1) + component."""
    mask = nyquist_free(U.grid)
    c = U.coeffs()
    return np.stack([ci[mask] for ci in c], axis=-1).ravel()


def vector_to_field(vec: np.ndarray, grid: TorusGrid) -> VelocityPressureField:
    mask = nyquist_free(grid)
    comps = grid.n + 1
    v = np.asarray(vec).reshape(-1, comps)
    c = np.zeros((comps,) + grid.shape, dtype=complex)
    for j in range(comps):
        c[j][mask] = v[:, j]
    return VelocityPressureField(grid, ifft(c, grid))


@dataclass
class DenseOperator:
    """Xi as a Hermitian matrix on the Nyquist-free Fourier coefficients."""

    params: StokesParams
    matrix: np.ndarray

    def apply(self, U: VelocityPressureField) -> VelocityPressureField:
        return vector_to_field(self.matrix @ field_to_vector(U), self.params.grid)

    @cached_property
    def eigh(self):
        # the coefficient pairing is (2 pi)^n sum a conj(b), a multiple of the identity
        return np.linalg.eigh(self.matrix)


def assemble_dense(params: StokesParams) -> DenseOperator:
    g = params.grid
    n, N = g.n, g.N
    modes = free_modes(g)
    K = modes.shape[0]
    comps = n + 1
    Vh = fft(params.values("V").astype(complex), g)
    V0h = fft(params.values("V0").astype(complex), g)
    diff = (modes[:, None, :] - modes[None, :, :]) % N
    idx = tuple(diff[..., j] for j in range(n))
    cv, cp = Vh[idx], V0h[idx]
    mat = np.zeros((K, comps, K, comps), dtype=complex)
    blocks = modal_matrix(0.0, 0.0, modes.astype(float))
    mat[np.arange(K), :, np.arange(K), :] = blocks
    for a in range(n):
        mat[:, a, :, a] += cv
    mat[:, n, :, n] -= cp
    mat = mat.reshape(K * comps, K * comps)
    return DenseOperator(params, 0.5 * (mat + mat.conj().T))


@dataclass
class KernelSpace:
    """Orthonormal basis of ker Xi in L2 of the torus."""

    grid: TorusGrid
    basis: list
    case: int
    residual: float = 0.0
    singular_values: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, U: VelocityPressureField) -> VelocityPressureField:
        out = np.zeros_like(U.data)
        for e in self.basis:
            out = out + torus_inner(U.data, e.data, self.grid) * e.data
        return VelocityPressureField(self.grid, out)

    def coefficient_projector(self) -> np.ndarray:
        """Projector onto the kernel within C^(n+1) at the zero mode (constant fields)."""
        comps = self.grid.n + 1
        P = np.zeros((comps, comps), dtype=complex)
        for e in self.basis:
            v = e.data[(slice(None),) + (0,) * self.grid.n]
            if not np.allclose(e.data, v.reshape((-1,) + (1,) * self.grid.n), atol=1e-10):
                raise ValueError("kernel is not spanned by constant fields")
            v = v / np.linalg.norm(v)
            P += np.outer(v, v.conj())
        return P


def expected_kernel_dim(case: int, n: int) -> int:
    return {1: n + 1, 2: n, 3: 1, 4: 0}[case]


def _constant_basis(params: StokesParams, case: int) -> list:
    g = params.grid
    n = g.n
    scale = (2 * np.pi) ** (-n / 2)
    dirs = []
    if case in (1, 2):
        dirs += list(range(n))
    if case in (1, 3):
        dirs.append(n)
    out = []
    for d in dirs:
        data = np.zeros((n + 1,) + g.shape, dtype=complex)
        data[d] = scale
        out.append(VelocityPressureField(g, data))
    return out


def kernel_basis(params: StokesParams, route: str = "auto") -> KernelSpace:
    """ker Xi, either from its singular values (dense) or from the constant-field classification.

    The dense route raises AmbiguousClassificationError when a singular value
    falls between the kernel threshold and the spectral gap threshold.
    """
    g = params.grid
    case = params.classification["kernel_case"]
    if route == "auto":
        route = "dense" if g.N ** g.n <= 32 ** 2 and g.n == 2 or g.N ** g.n <= 8 ** 3 else "classification"
    if route == "classification":
        basis = _constant_basis(params, case)
        from .stokes import apply_xi
        res = max([float(np.abs(apply_xi(params, e).data).max()) for e in basis], default=0.0)
        return KernelSpace(g, basis, case, res)
    if route != "dense":
        raise ValueError(f"unknown route {route!r}")
    op = assemble_dense(params)
    w, v = op.eigh
    top = max(np.abs(w).max(), 1.0)
    sv = np.sort(np.abs(w))
    small = np.abs(w) <= KERNEL_TOL * top
    grey = (np.abs(w) > KERNEL_TOL * top) & (np.abs(w) <= GAP_TOL * top)
    if np.any(grey):
        raise AmbiguousClassificationError(
            f"singular value {np.abs(w)[grey].min():.3e} lies between the kernel and gap thresholds")
    basis = [vector_to_field(v[:, j], g) for j in np.flatnonzero(small)]
    if basis:
        # orthonormalize in L2 of the torus
        data = np.array([b.data.ravel() for b in basis])
        q, _ = np.linalg.qr(data.T)
        shape = (g.n + 1,) + g.shape
        basis = [VelocityPressureField(g, q[:, j].reshape(shape)) for j in range(q.shape[1])]
        basis = [VelocityPressureField(g, b.data / np.sqrt(abs(torus_inner(b.data, b.data, g))))
                 for b in basis]
    res = max([float(np.linalg.norm(op.matrix @ field_to_vector(b))) for b in basis], default=0.0)
    return KernelSpace(g, basis, case, res, sv)


class PseudoInverse:
    """Moore-Penrose pseudoinverse of Xi acting on Nyquist-free fields."""

    route: str = ""

    def apply(self, F: VelocityPressureField) -> VelocityPressureField:
        raise NotImplementedError

    def apply_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def xi(self, U: VelocityPressureField) -> VelocityPressureField:
        raise NotImplementedError


class ConstantPseudoInverse(PseudoInverse):
    route = "modal"

    def __init__(self, params: StokesParams):
        if not (params.is_constant("V") and params.is_constant("V0")):
            raise ValueError("the per-mode pseudoinverse needs constant coefficients")
        self.params = params
        g = params.grid
        self.V, self.V0 = params.constant("V"), params.constant("V0")
        xi = np.moveaxis(g.modes.astype(float), 0, -1)
        M = modal_matrix(self.V, self.V0, xi)
        self.mask = nyquist_free(g)
        self.M = M
        self.P = np.linalg.pinv(M, rcond=1e-13, hermitian=True)

    def apply_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.einsum("...ab,b...->a...", self.P, coeffs)
        return out * self.mask

    def apply(self, F: VelocityPressureField) -> VelocityPressureField:
        g = self.params.grid
        return VelocityPressureField(g, ifft(self.apply_coeffs(F.coeffs()), g))

    def xi(self, U: VelocityPressureField) -> VelocityPressureField:
        g = self.params.grid
        c = np.einsum("...ab,b...->a...", self.M, U.coeffs()) * self.mask
        return VelocityPressureField(g, ifft(c, g))


class DensePseudoInverse(PseudoInverse):
    route = "dense"

    def __init__(self, params: StokesParams, op: DenseOperator | None = None):
        self.params = params
        self.op = assemble_dense(params) if op is None else op
        w, v = self.op.eigh
        top = max(np.abs(w).max(), 1.0)
        keep = np.abs(w) > KERNEL_TOL * top
        if np.any(keep):
            cond = np.abs(w[keep]).max() / np.abs(w[keep]).min()
            if cond > 1e13:
                raise SolverError("dense pseudoinverse is ill-conditioned", cond)
        inv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
        self.matrix = (v * inv) @ v.conj().T

    def apply(self, F: VelocityPressureField) -> VelocityPressureField:
        return vector_to_field(self.matrix @ field_to_vector(F), self.params.grid)

    def xi(self, U: VelocityPressureField) -> VelocityPressureField:
        return self.op.apply(U)


def pseudo_inverse(params: StokesParams, route: str = "auto") -> PseudoInverse:
    if route == "auto":
        route = "modal" if params.is_constant("V") and params.is_constant("V0") else "dense"
    if route == "modal":
        return ConstantPseudoInverse(params)
    if route == "dense":
        return DensePseudoInverse(params)
    raise ValueError(f"unknown route {route!r}")


def pseudo_inverse_relations(params: StokesParams, pinv: PseudoInverse, kernel: KernelSpace,
                             samples: int = 5, bandwidth: int | None = None, seed: int = 0) -> dict:
    """Max residuals of Xi X F = X Xi F = F - p_N F and of the symmetry of X."""
    from .stokes import random_vp_field
    g = params.grid
    bw = g.N // 4 if bandwidth is None else bandwidth
    rng = np.random.default_rng(seed)
    out = {"left": 0.0, "right": 0.0, "symmetry": 0.0, "orthogonal": 0.0}
    for _ in range(samples):
        F = random_vp_field(g, bw, rng, real=False)
        G = random_vp_field(g, bw, rng, real=False)
        scale = np.abs(F.data).max()
        target = F - kernel.project(F)
        XF = pinv.apply(F)
        out["left"] = max(out["left"], np.abs(pinv.xi(XF).data - target.data).max() / scale)
        out["right"] = max(out["right"], np.abs(pinv.apply(pinv.xi(F)).data - target.data).max() / scale)
        a = torus_inner(XF.data, G.data, g)
        b = torus_inner(F.data, pinv.apply(G).data, g)
        out["symmetry"] = max(out["symmetry"], abs(a - b) / max(abs(a), abs(b), 1e-300))
        out["orthogonal"] = max(out["orthogonal"], np.abs(kernel.project(XF).data).max() / scale)
    return out
