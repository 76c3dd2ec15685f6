"""Run configuration: line-based ``key = value`` files with ``--set`` overrides.

Coefficients are numbers (constants) or ``bump(amplitude[, width[, center]])``
for a periodized Gaussian in x_n; the default bump sits on Omega_- = {pi < x_n < 2 pi}.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .spectral import TorusGrid
from .stokes import Profile, StokesParams


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


COMMANDS = ("verify-jumps", "verify-green", "verify-lateral", "spectrum", "solve", "dtn", "all", "check")
REQUIRED_IN_FILE = ("n", "N")
_BUMP = re.compile(r"^bump\(\s*([^,()]+)\s*(?:,\s*([^,()]+)\s*)?(?:,\s*([^,()]+)\s*)?\)$")


def parse_coefficient(text: str) -> float | Profile:
    text = text.strip()
    m = _BUMP.match(text)
    if m:
        amp = float(m.group(1))
        width = float(m.group(2)) if m.group(2) else 0.28
        center = float(m.group(3)) if m.group(3) else 1.5 * np.pi
        if amp < 0 or width <= 0:
            raise ConfigError(f"bump needs amplitude >= 0 and width > 0: {text!r}")
        return Profile("bump", amp, center, width)
    try:
        val = float(text)
    except ValueError:
        raise ConfigError(f"coefficient must be a number or bump(...): {text!r}") from None
    if val < 0:
        raise ConfigError(f"coefficients must be nonnegative: {text!r}")
    return val


def describe_coefficient(c) -> str:
    if isinstance(c, Profile):
        if c.kind == "constant":
            return f"{c.amplitude:g}"
        return f"bump({c.amplitude:g},{c.width:g})"
    return f"{c:g}"


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a batch run.

    Attributes
    ----------
    n, N : int
        Dimension and grid points per axis (N a power of two).
    L : float
        Strip height; the torus has period 2 pi, so only pi is supported.
    V, V0 : float or Profile
    command : str
        Default command when none is given on the command line.
    seed : int
        Seeds every random density and field.
    bandwidth : int
        Bandwidth of random boundary densities.
    outdir : str
    tolerances : dict
        Overrides of named tolerances, from ``tol.<name> = value`` keys.
    """

    n: int = 2
    N: int = 64
    L: float = float(np.pi)
    V: float | Profile = 1.0
    V0: float | Profile = 1.0
    command: str = "all"
    seed: int = 0
    bandwidth: int = 4
    outdir: str = "out"
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.N < 8 or self.N & (self.N - 1):
            raise ConfigError("N must be a power of two, at least 8")
        if not np.isclose(self.L, np.pi):
            raise ConfigError("only L = pi is supported (the strip is half of the 2 pi torus)")
        if self.bandwidth < 1 or self.bandwidth >= self.N // 2:
            raise ConfigError("bandwidth must lie in [1, N/2)")
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    @property
    def case(self) -> str:
        return f"V={describe_coefficient(self.V)};V0={describe_coefficient(self.V0)}"

    def params(self, N: int | None = None, n: int | None = None) -> StokesParams:
        return StokesParams(TorusGrid(n or self.n, N or self.N), self.V, self.V0, L=self.L)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = describe_coefficient(v) if f.name in ("V", "V0") else v
        return out


_INT_KEYS = {"n", "N", "seed", "bandwidth"}
_FLOAT_KEYS = {"L"}
_STR_KEYS = {"command", "outdir"}
_COEF_KEYS = {"V", "V0"}


def _convert(key: str, value: str):
    value = value.strip()
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be numeric, got {value!r}") from None
    if key in _STR_KEYS:
        return value
    if key in _COEF_KEYS:
        return parse_coefficient(value)
    raise ConfigError(f"unknown key {key!r}")


def parse_pairs(lines, source: str = "config") -> dict:
    out = {}
    tol = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("tol."):
            try:
                tol[key[4:]] = float(value)
            except ValueError:
                raise ConfigError(f"{source}:{lineno}: tolerance must be numeric") from None
            continue
        out[key] = _convert(key, value)
    if tol:
        out["tolerances"] = tol
    return out


def load_config(path: str | None = None, overrides=()) -> RunConfig:
    """Read a config file (n and N are required there) and apply key=value overrides."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} not found")
        values = parse_pairs(p.read_text().splitlines(), str(path))
        missing = [k for k in REQUIRED_IN_FILE if k not in values]
        if missing:
            raise ConfigError(f"{path}: missing required key(s) {', '.join(missing)}")
    extra = parse_pairs(list(overrides), "--set")
    tol = {**values.pop("tolerances", {}), **extra.pop("tolerances", {})}
    values.update(extra)
    try:
        cfg = RunConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    return replace(cfg, tolerances=tol) if tol else cfg
