"""Single and double layer potentials on the strip, boundary operators and jump relations.

Coefficients may depend on x_n, so every transverse mode xi' decouples.
Per mode the potential splits as U = U_c + R: U_c uses constant reference
coefficients (the values on Gamma) and is evaluated exactly by residue
lattice sums; R solves Xi R = (p_c - p_N) F - (Xi - Xi_c) U_c by a Fourier
Galerkin method in x_n. The right-hand side is supported where the
coefficients differ from their boundary values, so R is smooth across Gamma.

Boundary operators come in two routes: "exact" takes one-sided limits of
the residue sums, "modal" assembles (even-part mode sum) +/- (i/2) J with
cutoff 8N and Richardson acceleration.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .lattice import polymat_eval
from .modal import KernelCache, modal_system, offsets, source_factor, target_factor
from .spectral import wavenumbers
from .stokes import (BoundaryDensity, Profile, StokesParams, _distribution_coeffs, transverse_modes)

OPERATORS = {
    "S": ("velocity", "single"),
    "K": ("velocity", "double"),
    "Kstar": ("traction", "single"),
    "C0": ("pressure", "single"),
    "H": ("traction", "double"),
    "Q": ("pressure", "double"),
}
SIDES = ("principal", "interior", "exterior")
ZERO_SNAP = 1e-12


class PrecisionError(RuntimeError):
    def __init__(self, message: str, suggested_cutoff: int):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


def _column_sampler(params: StokesParams, name: str):
    """Callable x_n -> coefficient value for coefficients depending on x_n only."""
    c = getattr(params, name)
    if isinstance(c, Profile):
        return c
    vals = np.asarray(c, dtype=float)
    g = params.grid
    col = vals.reshape(-1, g.N)
    if np.abs(col - col[:1]).max() > 1e-12 * max(1.0, np.abs(col).max()):
        raise NotImplementedError(f"{name} depends on x'; only x_n profiles decouple by transverse mode")
    coef = np.fft.fft(col[0]) / g.N
    k = wavenumbers(g.N)

    def sample(x):
        x = np.asarray(x, dtype=float)
        return np.real(np.exp(1j * x[..., None] * k) @ coef)
    return sample


class LayerEngine:
    """Potentials and boundary operators on Omega = {0 < x_n < L} for given coefficients.

    Parameters
    ----------
    params : StokesParams
    cutoff_factor : int
        Mode-sum cutoff is cutoff_factor * N.
    levels : int
        Richardson levels of the mode sums.
    galerkin_modes : int, optional
        Fourier modes in x_n for the smooth correction, default max(N, 128).
        Profiles are sampled analytically, so this may exceed N.
    """

    def __init__(self, params: StokesParams, cutoff_factor: int = 8, levels: int = 4,
                 galerkin_modes: int | None = None):
        self.params = params
        self.n, self.N = params.n, params.grid.N
        self.L = params.L
        self.heights = params.heights
        self.modes = transverse_modes(self.N, self.n)
        self.cutoff = cutoff_factor * self.N
        self.levels = levels
        self.galerkin_modes = max(self.N, 128) if galerkin_modes is None else int(galerkin_modes)
        cls = params.classification
        self.V_fn = _column_sampler(params, "V")
        self.V0_fn = _column_sampler(params, "V0")
        vg = float(self.V_fn(np.array([0.0]))[0])
        v0g = float(self.V0_fn(np.array([0.0]))[0])
        vtop = max(1.0, float(np.max(params.values("V"))))
        v0top = max(1.0, float(np.max(params.values("V0"))))
        self.V_ref = 0.0 if cls["V_zero"] or abs(vg) <= ZERO_SNAP * vtop else vg
        self.V0_ref = 0.0 if cls["V0_zero_on_omega"] or abs(v0g) <= ZERO_SNAP * v0top else v0g
        for fn, ref, nm in ((self.V_fn, self.V_ref, "V"), (self.V0_fn, self.V0_ref, "V0")):
            other = float(fn(np.array([self.L]))[0])
            if abs(other - ref) > 1e-8 * max(1.0, abs(ref)):
                warnings.warn(f"{nm} differs between the boundary components; the correction is not smooth")
        self.variable = not (params.is_constant("V") and params.is_constant("V0"))
        self.system = modal_system(self.V_ref, self.V0_ref, self.n)
        self.cache = KernelCache(self.system)
        self.case = cls["kernel_case"]
        self.ref_case = {(True, True): 1, (True, False): 2, (False, True): 3, (False, False): 4}[
            (self.V_ref == 0.0, self.V0_ref == 0.0)]
        self._galerkin = {}
        self._responses = {}
        self._ops = {}

    # ------------------------------------------------------------ geometry

    def normal(self, c: int) -> np.ndarray:
        return self.params.normal(c)

    def interior_side(self, d: int) -> int:
        """+1: Omega lies above Gamma_d (limit from above); -1: below."""
        return 1 if d == 0 else -1

    def side_sign(self, d: int, side: str) -> int:
        if side == "interior":
            return self.interior_side(d)
        if side == "exterior":
            return -self.interior_side(d)
        raise ValueError(f"no one-sided limit named {side!r}")

    @property
    def g(self) -> float:
        return 1.0 / (2.0 * self.V0_ref + 1.0)

    def mode_index(self, xi_p) -> int:
        hit = np.flatnonzero(np.all(self.modes == np.asarray(xi_p), axis=1))
        if hit.size == 0:
            raise ValueError(f"mode {xi_p} not on the transverse grid")
        return int(hit[0])

    # ------------------------------------------------------------ kernels

    def kernel(self, j: int, target: str, source: str, c: int, nu_t=None, deriv: int = 0):
        nu_s = self.normal(c) if source == "double" else None
        return self.cache.get(self.modes[j], target, source, nu_t, nu_s, deriv)

    def column_profile(self, j, target, source, c, x, side: int = 1, nu_t=None, deriv: int = 0):
        """Response at heights x to unit densities on Gamma_c, shape (T, rows, n)."""
        K = self.kernel(j, target, source, c, nu_t, deriv)
        val = K.profile(offsets(x, self.heights[c], side))
        if self.variable:
            val = val + self.correction(j, target, source, c, x, nu_t, deriv)
        return val

    # ------------------------------------------------------------ smooth correction

    def _galerkin_data(self, j):
        if j in self._galerkin:
            return self._galerkin[j]
        N, n = self.galerkin_modes, self.n
        ks = np.arange(-N // 2 + 1, N // 2)
        Mf = 4 * N
        xf = 2 * np.pi * np.arange(Mf) / Mf
        dV = self.V_fn(xf) - self.V_ref
        dV0 = self.V0_fn(xf) - self.V0_ref
        cV = np.fft.fft(dV) / Mf
        cV0 = np.fft.fft(dV0) / Mf
        diff = (ks[:, None] - ks[None, :]) % Mf
        Kn = ks.size
        comps = n + 1
        G = np.zeros((Kn, comps, Kn, comps), dtype=complex)
        for i, k in enumerate(ks):
            G[i, :, i, :] = self.system.matrix(self.modes[j], float(k))
        for a in range(n):
            G[:, a, :, a] += cV[diff]
        G[:, n, :, n] -= cV0[diff]
        G = G.reshape(Kn * comps, Kn * comps)
        data = (ks, xf, dV, dV0, G)
        self._galerkin[j] = data
        return data

    def _projector(self, case: int) -> np.ndarray:
        n = self.n
        d = np.zeros(n + 1)
        if case in (1, 2):
            d[:n] = 1.0
        if case in (1, 3):
            d[n] = 1.0
        return np.diag(d)

    def response(self, j: int, source: str, c: int) -> np.ndarray:
        """Coefficients of R per unit density, shape (K, n+1, n) over modes |k| < galerkin_modes / 2."""
        key = (j, source, c)
        if key in self._responses:
            return self._responses[key]
        n = self.n
        ks, xf, dV, dV0, G = self._galerkin_data(j)
        Kc = self.kernel(j, "full", source, c)
        Uc = Kc.profile(offsets(xf, self.heights[c], 1))  # (Mf, n+1, n)
        W = np.empty_like(Uc)
        W[:, :n] = dV[:, None, None] * Uc[:, :n]
        W[:, n] = -dV0[:, None] * Uc[:, n]
        What = np.fft.fft(W, axis=0) / xf.size
        rhs = -What[ks % xf.size]  # (K, n+1, n)
        zero = np.all(self.modes[j] == 0)
        if zero:
            S0 = source_factor(source, self.modes[j], self.normal(c) if source == "double" else None)[0]
            P = self._projector(self.ref_case) - self._projector(self.case)
            rhs[ks == 0] += (P @ S0) / (2 * np.pi)
        b = rhs.reshape(-1, n)
        if zero:
            sol = np.linalg.lstsq(G, b, rcond=1e-12)[0]
        else:
            sol = np.linalg.solve(G, b)
        R = sol.reshape(ks.size, n + 1, n)
        self._responses[key] = R
        return R

    def correction(self, j, target, source, c, x, nu_t=None, deriv: int = 0) -> np.ndarray:
        ks = self._galerkin_data(j)[0]
        R = self.response(j, source, c)
        T = polymat_eval(target_factor(target, self.modes[j], nu_t), ks.astype(float))  # (K, r, n+1)
        TR = np.einsum("kra,kab->krb", T, R) * ((1j * ks) ** deriv)[:, None, None]
        ph = np.exp(1j * np.outer(np.atleast_1d(np.asarray(x, dtype=float)), ks))
        return np.einsum("tk,krb->trb", ph, TR)

    # ------------------------------------------------------------ boundary operators

    def block(self, j: int, which: str, side: str = "principal", route: str = "exact") -> np.ndarray:
        """2 x 2 component block matrix of a boundary operator at mode j, shape (2r, 2n)."""
        target, source = OPERATORS[which]
        blocks = [[None, None], [None, None]]
        for d in (0, 1):
            nu_t = self.normal(d) if target == "traction" else None
            for c in (0, 1):
                K = self.kernel(j, target, source, c, nu_t)
                tau = self.heights[d] - self.heights[c]
                if route == "exact":
                    if d == c:
                        pv = K.profile(np.array([0.0, 2 * np.pi]))
                        if side == "principal":
                            val = 0.5 * (pv[0] + pv[1])
                        else:
                            val = pv[0] if self.side_sign(d, side) > 0 else pv[1]
                    else:
                        val = K.profile(offsets([tau], 0.0))[0]
                elif route == "modal":
                    val = K.mode_sum(float(tau), self.cutoff, self.levels)
                    if d == c and side != "principal":
                        val = val + self.side_sign(d, side) * 0.5j * K.jump
                else:
                    raise ValueError(f"unknown route {route!r}")
                if self.variable:
                    val = val + self.correction(j, target, source, c, [self.heights[d]], nu_t)[0]
                blocks[d][c] = val
        return np.block(blocks)

    def operator(self, which: str, side: str = "principal", route: str = "modal") -> "BoundaryOperatorMatrix":
        key = (which, side, route)
        if key not in self._ops:
            if which not in OPERATORS:
                raise ValueError(f"unknown boundary operator {which!r}")
            if side not in SIDES:
                raise ValueError(f"unknown side {side!r}")
            blocks = np.array([self.block(j, which, side, route) for j in range(len(self.modes))])
            self._ops[key] = BoundaryOperatorMatrix(which, side, route, self.n, self.N, blocks)
        return self._ops[key]

    # ------------------------------------------------------------ potentials

    def potential(self, kind: str, h: BoundaryDensity) -> "PotentialField":
        if kind not in ("single", "double"):
            raise ValueError(f"unknown potential {kind!r}")
        return PotentialField(self, [(kind, h)])


@dataclass
class BoundaryOperatorMatrix:
    """Per-transverse-mode blocks of a boundary operator on Gamma_0 u Gamma_1.

    blocks[j] has rows (component d, entry) and columns (component c, entry),
    i.e. shape (2 r, 2 n) with r = n except for C0 and Q (r = 1).
    """

    which: str
    side: str
    route: str
    n: int
    N: int
    blocks: np.ndarray

    @property
    def modes(self) -> np.ndarray:
        return transverse_modes(self.N, self.n)

    @property
    def rows(self) -> int:
        return self.blocks.shape[1] // 2

    def apply(self, h: BoundaryDensity) -> np.ndarray:
        """Coefficients of the image, shape (2, r, M)."""
        x = np.concatenate([h.coeffs[0], h.coeffs[1]], axis=0)  # (2n, M)
        y = np.einsum("jab,bj->aj", self.blocks, x)
        return y.reshape(2, self.rows, -1)

    def apply_density(self, h: BoundaryDensity) -> BoundaryDensity:
        if self.rows != self.n:
            raise ValueError(f"{self.which} does not map densities to densities")
        return BoundaryDensity(self.n, self.N, self.apply(h))

    def _like(self, blocks, which=None, side=None):
        return BoundaryOperatorMatrix(which or self.which, side or self.side, self.route, self.n, self.N, blocks)

    def adjoint(self) -> "BoundaryOperatorMatrix":
        return self._like(np.conj(np.swapaxes(self.blocks, 1, 2)), self.which + "^H")

    def __add__(self, other):
        if isinstance(other, BoundaryOperatorMatrix):
            return self._like(self.blocks + other.blocks, f"{self.which}+{other.which}")
        return self._like(self.blocks + other * np.eye(self.blocks.shape[1])[None], f"{self.which}+{other}")

    def __sub__(self, other):
        if isinstance(other, BoundaryOperatorMatrix):
            return self._like(self.blocks - other.blocks, f"{self.which}-{other.which}")
        return self + (-other)

    def __rsub__(self, other):
        return self._like(other * np.eye(self.blocks.shape[1])[None] - self.blocks, f"{other}-{self.which}")

    __radd__ = __add__

    def scaled(self, s):
        return self._like(s * self.blocks)

    def weighted(self, s: float) -> "BoundaryOperatorMatrix":
        """<xi'>^s B <xi'>^s, the natural scaling for an operator of order -2 s."""
        w = (1.0 + np.sum(self.modes.astype(float) ** 2, axis=1)) ** (0.5 * s)
        return self._like(self.blocks * (w ** 2)[:, None, None])

    def dense(self) -> np.ndarray:
        M = self.blocks.shape[0]
        r2, c2 = self.blocks.shape[1:]
        out = np.zeros((M * r2, M * c2), dtype=complex)
        for j in range(M):
            out[j * r2:(j + 1) * r2, j * c2:(j + 1) * c2] = self.blocks[j]
        return out

    def singular_values(self) -> np.ndarray:
        return np.sort(np.concatenate([np.linalg.svd(b, compute_uv=False) for b in self.blocks]))

    def hermitian_defect(self) -> float:
        return float(np.abs(self.blocks - np.conj(np.swapaxes(self.blocks, 1, 2))).max())

    def to_text(self) -> str:
        """Column text: mode indices, row, column, real part, imaginary part."""
        lines = [f"# operator {self.which} side {self.side} route {self.route} n {self.n} N {self.N}",
                 "# " + " ".join([f"xi{i + 1}" for i in range(self.n - 1)] + ["row", "col", "re", "im"])]
        for j, m in enumerate(self.modes):
            b = self.blocks[j]
            for r in range(b.shape[0]):
                for c in range(b.shape[1]):
                    lines.append(" ".join([str(int(v)) for v in m] + [str(r), str(c),
                                                                        repr(float(b[r, c].real)),
                                                                        repr(float(b[r, c].imag))]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BoundaryOperatorMatrix":
        lines = text.strip().splitlines()
        head = lines[0].split()
        meta = dict(zip(head[1::2], head[2::2]))
        n, N = int(meta["n"]), int(meta["N"])
        rows = np.array([[float(v) for v in ln.split()] for ln in lines[2:]])
        modes = transverse_modes(N, n)
        # columns: n - 1 mode entries, row, col, re, im
        r2 = int(rows[:, n - 1].max()) + 1
        c2 = int(rows[:, n].max()) + 1
        blocks = np.zeros((modes.shape[0], r2, c2), dtype=complex)
        index = {tuple(m): j for j, m in enumerate(modes.tolist())}
        for row in rows:
            j = index[tuple(int(v) for v in row[:n - 1])]
            blocks[j, int(row[n - 1]), int(row[n])] = row[n + 1] + 1j * row[n + 2]
        return cls(meta["operator"], meta["side"], meta["route"], n, N, blocks)


def boundary_operator(which: str, params_or_engine, side: str = "principal",
                      route: str = "modal") -> BoundaryOperatorMatrix:
    eng = params_or_engine if isinstance(params_or_engine, LayerEngine) else LayerEngine(params_or_engine)
    return eng.operator(which, side, route)


@dataclass
class PotentialField:
    """Linear combination of single and double layer potentials of boundary densities."""

    engine: LayerEngine
    terms: list
    pressure_shift: complex = 0.0

    def __add__(self, other):
        return PotentialField(self.engine, self.terms + other.terms, self.pressure_shift + other.pressure_shift)

    def scaled(self, s):
        return PotentialField(self.engine, [(k, h.scaled(s)) for k, h in self.terms], s * self.pressure_shift)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def profile(self, x, target: str = "full", side: int = 1, nu_t=None, deriv: int = 0) -> np.ndarray:
        """Transverse coefficients at heights x, shape (T, rows, M)."""
        eng = self.engine
        x = np.atleast_1d(np.asarray(x, dtype=float))
        rows = {"velocity": eng.n, "pressure": 1, "full": eng.n + 1, "traction": eng.n}[target]
        out = np.zeros((x.size, rows, len(eng.modes)), dtype=complex)
        for kind, h in self.terms:
            for c in (0, 1):
                active = np.flatnonzero(np.abs(h.coeffs[c]).max(axis=0) > 0)
                for j in active:
                    col = eng.column_profile(j, target, kind, c, x, side, nu_t, deriv)
                    out[:, :, j] += col @ h.coeffs[c, :, j]
        if self.pressure_shift and deriv == 0:
            shift = self.pressure_shift
            zero = eng.mode_index(np.zeros(eng.n - 1))
            if target == "full":
                out[:, eng.n, zero] += shift
            elif target == "pressure":
                out[:, 0, zero] += shift
            elif target == "traction":
                out[:, :, zero] += shift * nu_t[None, :]
        return out

    def trace(self, d: int, side: str = "interior", target: str = "velocity") -> np.ndarray:
        """One-sided limit on Gamma_d, shape (rows, M)."""
        s = self.engine.side_sign(d, side)
        nu_t = self.engine.normal(d) if target == "traction" else None
        return self.profile([self.engine.heights[d]], target, s, nu_t)[0]

    def trace_density(self, side: str = "interior", target: str = "velocity") -> BoundaryDensity:
        eng = self.engine
        return BoundaryDensity(eng.n, eng.N, np.stack([self.trace(d, side, target) for d in (0, 1)]))

    def values(self, x, target: str = "full", side: int = 1) -> np.ndarray:
        """Physical values on the transverse grid at heights x, shape (T, rows) + (N,)*(n-1)."""
        eng = self.engine
        prof = self.profile(x, target, side)
        shp = prof.shape[:2] + (eng.N,) * (eng.n - 1)
        axes = tuple(range(2, 2 + eng.n - 1))
        return np.fft.ifftn(prof.reshape(shp), axes=axes) * eng.N ** (eng.n - 1)

    def pressure_mean(self) -> complex:
        """Mean of the pressure over Omega."""
        eng = self.engine
        xg, wg = np.polynomial.legendre.leggauss(96)
        x = 0.5 * eng.L * (xg + 1)
        zero = eng.mode_index(np.zeros(eng.n - 1))
        p = self.profile(x, "pressure")[:, 0, zero]
        return complex(0.5 * np.sum(wg * p))


def embed_density(h: BoundaryDensity, grid) -> np.ndarray:
    """Torus coefficients of h delta_Gamma (both components), shape (n,) + grid.shape.

    (h delta_{x_n = c})^(xi', k) = h^(xi') exp(-i k c) / (2 pi); heights are 0 and pi.
    """
    if grid.N != h.N or grid.n != h.n:
        raise ValueError("density and grid sizes differ")
    out = np.zeros((h.n,) + grid.shape, dtype=complex)
    for c, height in enumerate((0.0, np.pi)):
        out += _distribution_coeffs(h.coeffs[c], height, grid)
    return out


def distribution_pairing(coeffs: np.ndarray, phi: np.ndarray, grid) -> complex:
    """<T, phi> for a distribution with torus coefficients and a grid test field."""
    from .stokes import fft
    return complex((2 * np.pi) ** grid.n * np.sum(coeffs * np.conj(fft(phi, grid))))


def random_density(n: int, N: int, bandwidth: int, rng, real: bool = True) -> BoundaryDensity:
    """Random band-limited density on both components, normalized to unit L2(Gamma) norm."""
    modes = transverse_modes(N, n)
    keep = np.all(np.abs(modes) <= bandwidth, axis=1)
    c = np.zeros((2, n, modes.shape[0]), dtype=complex)
    c[:, :, keep] = rng.normal(size=(2, n, keep.sum())) + 1j * rng.normal(size=(2, n, keep.sum()))
    h = BoundaryDensity(n, N, c)
    if real:
        vals = np.stack([h.values(k).real for k in (0, 1)])
        axes = tuple(range(2, 2 + n - 1))
        cc = np.fft.fftn(vals, axes=axes) / N ** (n - 1)
        h = BoundaryDensity(n, N, cc.reshape(2, n, -1))
    return h.scaled(1.0 / h.norm())


def normal_density(n: int, N: int) -> BoundaryDensity:
    """nu on Gamma: -e_n on Gamma_0 and +e_n on Gamma_1, as a density."""
    h = BoundaryDensity.zeros(n, N)
    h.coeffs[0, n - 1, 0] = -1.0
    h.coeffs[1, n - 1, 0] = 1.0
    return h


# ---------------------------------------------------------------- jump relations

def neville_zero(eps: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Polynomial extrapolation of vals(eps) to eps = 0 (Neville), vals shape (E, ...)."""
    p = [v.copy() for v in vals]
    m = len(eps)
    for k in range(1, m):
        for i in range(m - k):
            p[i] = (eps[i + k] * p[i] - eps[i] * p[i + 1]) / (eps[i + k] - eps[i])
    return p[0]


EPS_LADDER = tuple(2.0 ** -k for k in range(8, 14))


def extrapolated_trace(pot: PotentialField, d: int, side: str, target: str,
                       ladder=EPS_LADDER) -> np.ndarray:
    """Trace on Gamma_d from values at offsets eps * L / <xi'> on the requested side."""
    eng = pot.engine
    s = eng.side_sign(d, side)
    nu_t = eng.normal(d) if target == "traction" else None
    w = np.sqrt(1.0 + np.sum(eng.modes.astype(float) ** 2, axis=1))
    eps = np.array(ladder) * eng.L
    out = None
    for j in range(len(eng.modes)):
        x = eng.heights[d] + s * eps / w[j]
        prof = pot.profile(x, target, s, nu_t)[:, :, j]
        val = neville_zero(eps, prof)
        if out is None:
            out = np.zeros(prof.shape[1:] + (len(eng.modes),), dtype=complex)
        out[:, j] = val
    return out


@dataclass
class JumpReport:
    double_layer: float
    single_velocity: float
    single_pressure: float
    single_traction: float
    side_differences: dict = field(default_factory=dict)
    trace_method_gap: float = 0.0

    @property
    def residuals(self) -> dict:
        return {"W": self.double_layer, "V": self.single_velocity, "P": self.single_pressure,
                "TS": self.single_traction}


def _gamma_norm(a: np.ndarray, n: int) -> float:
    return float(np.sqrt((2 * np.pi) ** (n - 1) * np.sum(np.abs(a) ** 2)))


def jump_residuals(engine: LayerEngine, h: BoundaryDensity, route: str = "modal",
                   check_extrapolation: bool = True) -> JumpReport:
    """Distances between one-sided traces of the potentials of h and the jump formulas.

    W_pm = (+/- 1/2 + K) h,  V_pm = S h,  P_pm = (-/+ g/2 nu. + C0) h,
    [T_nu V]_pm = (-/+ 1/2 + K*) h, with + the side of Omega. Traces are the
    exact one-sided residue limits; the operators come from the chosen route.
    """
    n = engine.n
    hn = h.norm()
    Wp, Vp = engine.potential("double", h), engine.potential("single", h)
    K = engine.operator("K", "principal", route)
    S = engine.operator("S", "principal", route)
    C0 = engine.operator("C0", "principal", route)
    Ks = engine.operator("Kstar", "principal", route)
    Kh, Sh, Ch, Ksh = K.apply(h), S.apply(h), C0.apply(h), Ks.apply(h)
    nuh = np.stack([engine.normal(d) @ h.coeffs[d] for d in (0, 1)])[:, None]
    g = engine.g
    res = {"W": 0.0, "V": 0.0, "P": 0.0, "TS": 0.0}
    tr = {}
    for side, s in (("interior", 1.0), ("exterior", -1.0)):
        tw = Wp.trace_density(side, "velocity").coeffs
        tv = Vp.trace_density(side, "velocity").coeffs
        tp = np.stack([Vp.trace(d, side, "pressure") for d in (0, 1)])
        tt = Vp.trace_density(side, "traction").coeffs
        tr[side] = (tw, tv, tp, tt)
        res["W"] = max(res["W"], _gamma_norm(tw - (s * 0.5 * h.coeffs + Kh), n) / hn)
        res["V"] = max(res["V"], _gamma_norm(tv - Sh, n) / hn)
        res["P"] = max(res["P"], _gamma_norm(tp - (-s * 0.5 * g * nuh + Ch), n) / hn)
        res["TS"] = max(res["TS"], _gamma_norm(tt - (-s * 0.5 * h.coeffs + Ksh), n) / hn)
    (wi, vi, pi_, ti), (we, ve, pe, te) = tr["interior"], tr["exterior"]
    sides = {
        "W_jump": _gamma_norm(wi - we - h.coeffs, n) / hn,
        "V_jump": _gamma_norm(vi - ve, n) / hn,
        "P_jump": _gamma_norm(pi_ - pe + g * nuh, n) / hn,
        "TS_jump": _gamma_norm(ti - te + h.coeffs, n) / hn,
    }
    gap = 0.0
    if check_extrapolation:
        for d in (0, 1):
            for pot, tgt, exact in ((Wp, "velocity", wi), (Vp, "pressure", pi_), (Vp, "traction", ti)):
                ext = extrapolated_trace(pot, d, "interior", tgt)
                gap = max(gap, _gamma_norm(ext - exact[d], n) / hn)
    return JumpReport(res["W"], res["V"], res["P"], res["TS"], sides, gap)


def adjoint_restriction_check(engine: LayerEngine, route: str = "modal") -> dict:
    """K* assembled from the traction of the single layer against the adjoint of K, and S against S^H."""
    K = engine.operator("K", "principal", route)
    Ks = engine.operator("Kstar", "principal", route)
    S = engine.operator("S", "principal", route)
    return {
        "K_adjoint": float(np.abs(Ks.blocks - K.adjoint().blocks).max()),
        "S_hermitian": S.hermitian_defect(),
        "scale": float(np.abs(K.blocks).max()),
    }


# ---------------------------------------------------------------- representation formula

def pompeiu_residual(engine: LayerEngine, U, heights=None, cutoff_factor: int = 32) -> dict:
    """1_Omega U = Xi^(-1)(1_Omega Xi U) - S(T_nu U) + D(u) + p_N(1_Omega U) at sampled heights.

    Constant coefficients only. The volume term is a truncated mode sum in k
    after splitting off M^-1(infinity) = diag(0, ..., 0, -2g), whose part is
    applied pointwise. Returns max-norm residuals inside Omega (distance at
    least L/8 from Gamma) and in the complement, relative to max |U|.
    """
    from .stokes import conormal_density, fft, velocity_trace
    params = engine.params
    if engine.variable:
        raise NotImplementedError("the representation check uses constant coefficients")
    g = params.grid
    n, N, L = g.n, g.N, params.L
    if heights is None:
        inside = np.linspace(L / 8, L - L / 8, 7)
        outside = np.linspace(L + (2 * np.pi - L) / 8, 2 * np.pi - (2 * np.pi - L) / 8, 5)
    else:
        inside, outside = heights
    V, V0 = engine.V_ref, engine.V0_ref
    from .stokes import apply_xi
    F = apply_xi(params, U)
    Fc = fft(F.data, g).reshape(n + 1, -1, N)  # (n+1, M, N) transverse flattened, k last
    Uc = fft(U.data, g).reshape(n + 1, -1, N)
    kgrid = wavenumbers(N)
    cutoff = cutoff_factor * N
    ks = np.arange(-cutoff, cutoff + 1)
    d = (ks[:, None] - kgrid[None, :]).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        sm = (1.0 - np.exp(-1j * d * L)) / (2j * np.pi * d)
    sm[d == 0] = L / (2 * np.pi)
    ind = np.einsum("ql,aml->amq", sm, Fc)  # coefficients of 1_Omega F at ks
    Minf = np.zeros((n + 1, n + 1))
    Minf[n, n] = -2.0 / (2 * V0 + 1)
    modes = engine.modes
    xs = np.concatenate([inside, outside])
    vol_part = np.zeros((xs.size, n + 1, modes.shape[0]), dtype=complex)
    for j, m in enumerate(modes):
        xi = np.concatenate([np.broadcast_to(m.astype(float), (ks.size, n - 1)), ks[:, None].astype(float)], axis=1)
        from .stokes import modal_matrix
        Mk = modal_matrix(V, V0, xi)
        P = np.linalg.pinv(Mk, rcond=1e-13, hermitian=True) - Minf[None]
        coef = np.einsum("qab,bq->qa", P, ind[:, j, :])
        vol_part[:, :, j] = np.exp(1j * np.outer(xs, ks)) @ coef
    # pointwise part: M_inf F on Omega, zero outside
    Fprof = np.exp(1j * np.outer(xs, kgrid)) @ np.moveaxis(Fc, 2, 0).reshape(N, -1)
    Fprof = Fprof.reshape(xs.size, n + 1, -1)
    mask = (xs > 0) & (xs < L)
    vol_part += mask[:, None, None] * np.einsum("ab,tbj->taj", Minf, Fprof)
    trac = conormal_density(params, U)
    vel = velocity_trace(params, U)
    layer = engine.potential("double", vel) - engine.potential("single", trac)
    rhs = vol_part + layer.profile(xs, "full")
    # kernel projection of 1_Omega U: constant field with the kernel part of its mean
    mean = np.einsum("l,al->a", np.where(kgrid == 0, L, (np.exp(1j * kgrid * L) - 1) / (1j * np.where(kgrid == 0, 1, kgrid))),
                     Uc[:, engine.mode_index(np.zeros(n - 1)), :]) / (2 * np.pi)
    Pn = engine._projector(engine.case)
    rhs[:, :, engine.mode_index(np.zeros(n - 1))] += (Pn @ mean)[None]
    lhs = np.exp(1j * np.outer(xs, kgrid)) @ np.moveaxis(Uc, 2, 0).reshape(N, -1)
    lhs = lhs.reshape(xs.size, n + 1, -1) * mask[:, None, None]
    diff = rhs - lhs
    axes = tuple(range(2, 2 + n - 1))
    shp = diff.shape[:2] + (N,) * (n - 1)
    phys = np.fft.ifftn(diff.reshape(shp), axes=axes) * N ** (n - 1)
    scale = np.abs(U.data).max()
    ni = inside.size
    return {"inside": float(np.abs(phys[:ni]).max() / scale),
            "outside": float(np.abs(phys[ni:]).max() / scale)}


# ---------------------------------------------------------------- layer equations, weakly

def _source_coeffs(kind: str, h: BoundaryDensity, grid) -> np.ndarray:
    """Torus coefficients of (h delta, 0) or of T~*(h delta), shape (n+1,) + grid.shape."""
    n = grid.n
    xi = np.moveaxis(grid.modes.astype(float), 0, -1)
    out = np.zeros((n + 1,) + grid.shape, dtype=complex)
    for c, height in enumerate((0.0, np.pi)):
        hd = _distribution_coeffs(h.coeffs[c], height, grid)  # (n,) + shape
        if kind == "single":
            out[:n] += hd
        else:
            nu = np.zeros(n)
            nu[-1] = -1.0 if c == 0 else 1.0
            xn = xi @ nu
            # T~* = [i((xi.nu) I + nu xi^T); nu^T] applied to h delta
            out[:n] += 1j * (xn[None] * hd + nu.reshape((n,) + (1,) * n) * np.einsum("...a,a...->...", xi, hd))
            out[n] += np.einsum("a,a...->...", nu, hd)
    return out


def weak_layer_residual(engine: LayerEngine, kind: str, h: BoundaryDensity, phi) -> dict:
    """<Pot, Xi phi> against <F - p_N F, phi> for the potential of h and a grid test field phi.

    F is (h delta, 0) for the single layer and T~*(h delta) for the double
    layer. The pairing over the torus is computed per transverse mode with
    Gauss-Legendre rules on the two pieces (0, L) and (L, 2 pi), where the
    potential is smooth. Also returns the kernel term <p_N F, phi>.
    """
    from .stokes import apply_xi, fft
    params = engine.params
    g = params.grid
    n, N, L = g.n, g.N, engine.L
    pot = engine.potential(kind, h)
    xg, wg = np.polynomial.legendre.leggauss(48)
    x = np.concatenate([0.5 * L * (xg + 1), L + 0.5 * (2 * np.pi - L) * (xg + 1)])
    w = np.concatenate([0.5 * L * wg, 0.5 * (2 * np.pi - L) * wg])
    prof = pot.profile(x, "full")  # (T, n+1, M)
    Xc = fft(apply_xi(params, phi).data, g).reshape(n + 1, -1, N)
    kk = wavenumbers(N)
    xprof = np.einsum("tk,amk->tam", np.exp(1j * np.outer(x, kk)), Xc)
    lhs = complex((2 * np.pi) ** (n - 1) * np.sum(w[:, None, None] * prof * np.conj(xprof)))
    F = _source_coeffs(kind, h, g)
    Pc = fft(phi.data, g)
    full = complex((2 * np.pi) ** n * np.sum(F * np.conj(Pc)))
    zero = (slice(None),) + (0,) * n
    P = engine._projector(engine.case)
    kern = complex((2 * np.pi) ** n * np.vdot(Pc[zero], P @ F[zero]))
    scale = max(abs(full), abs(lhs), h.norm() * float(np.abs(phi.data).max()))
    return {"residual": abs(lhs - (full - kern)) / scale, "lhs": lhs, "source": full, "kernel_term": kern}
