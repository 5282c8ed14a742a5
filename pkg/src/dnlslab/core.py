"""
Domain types shared by the whole laboratory: the quadratic linear symbol
F(xi) = c2*xi^2 + c1*xi + c0, model parameters (alpha, lambda), periodic
grids, sampled complex fields, norms, and initial-condition construction.

Conventions
-----------
The equation solved is (D_t - F(D)) u = lambda |u|^alpha u with D = -i d/dx,
lambda = lambda1 + i*lambda2, lambda2 > 0 (dissipative), 0 < alpha < 2,
on the periodic box [-L, L) sampled at N points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SymbolF",
    "ModelParams",
    "Grid1D",
    "Field",
    "ScaledField",
    "validate_params",
    "eval_F",
    "eval_Fprime",
    "eval_w",
    "norms",
    "make_initial",
    "save_ic_file",
    "load_ic_file",
]

IC_HEADER_MAGIC = "dnlslab-ic v1"


@dataclass(frozen=True)
class SymbolF:
    """Quadratic symbol F(xi) = c2*xi^2 + c1*xi + c0 with c2 > 0 (elliptic)."""

    c2: float
    c1: float = 0.0
    c0: float = 0.0

    def __post_init__(self):
        if not self.c2 > 0:
            raise ValueError(f"ellipticity requires c2 > 0, got c2={self.c2}")

    def F(self, xi):
        return self.c2 * xi**2 + self.c1 * xi + self.c0

    def Fprime(self, xi):
        return 2.0 * self.c2 * xi + self.c1

    def w(self, x):
        """Phase velocity profile w(x) = -(x+c1)^2/(4 c2) + c0."""
        return -((x + self.c1) ** 2) / (4.0 * self.c2) + self.c0


def eval_F(F: SymbolF, xi):
    return F.F(xi)


def eval_Fprime(F: SymbolF, xi):
    return F.Fprime(xi)


def eval_w(F: SymbolF, x):
    return F.w(x)


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity exponent alpha in (0,2) and coefficient lambda1 + i*lambda2."""

    alpha: float
    lambda1: float
    lambda2: float

    @property
    def lam(self) -> complex:
        return complex(self.lambda1, self.lambda2)

    @property
    def dissipativity_threshold(self) -> float:
        """alpha*|lambda1| / (2*sqrt(alpha+1)): the large-dissipative bar."""
        return self.alpha * abs(self.lambda1) / (2.0 * math.sqrt(self.alpha + 1.0))

    @property
    def strictly_dissipative(self) -> bool:
        return (
            0 < self.alpha < 2
            and self.lambda2 > 0
            and self.lambda2 >= self.dissipativity_threshold
        )


def validate_params(p: ModelParams) -> str:
    """Classify parameters.

    Returns one of:
      'strictly-dissipative'   lambda2 > 0 and lambda2 >= alpha|lambda1|/(2 sqrt(alpha+1))
      'dissipative-non-large'  0 < lambda2 below the threshold
      'invalid'                lambda2 <= 0 or alpha outside (0,2)
    """
    if not (0.0 < p.alpha < 2.0) or p.lambda2 <= 0.0:
        return "invalid"
    if p.lambda2 >= p.dissipativity_threshold:
        return "strictly-dissipative"
    return "dissipative-non-large"


class Grid1D:
    """Uniform periodic grid on [-L, L): x_j = -L + j*dx, dx = 2L/N.

    Wavenumbers are the physical FFT frequencies k = (pi/L)*{-N/2..N/2-1}
    stored in FFT layout.
    """

    __slots__ = ("n", "half_width", "x", "k", "dx", "dk")

    def __init__(self, n: int, half_width: float):
        if n <= 0 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a positive power of two, got {n}")
        if half_width <= 0:
            raise ValueError("half_width must be positive")
        self.n = int(n)
        self.half_width = float(half_width)
        self.dx = 2.0 * self.half_width / self.n
        self.dk = math.pi / self.half_width
        x = -self.half_width + self.dx * np.arange(self.n)
        k = 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.dx)
        x.setflags(write=False)
        k.setflags(write=False)
        self.x = x
        self.k = k

    def __eq__(self, other):
        return (
            isinstance(other, Grid1D)
            and self.n == other.n
            and self.half_width == other.half_width
        )

    def __hash__(self):
        return hash((self.n, self.half_width))

    def __repr__(self):
        return f"Grid1D(n={self.n}, half_width={self.half_width})"


@dataclass
class Field:
    """Complex field u(t, x_j) sampled on a Grid1D."""

    grid: Grid1D
    t: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(self.values.view(np.float64))):
            raise FloatingPointError(f"non-finite field values at t={self.t}")

    def copy(self) -> "Field":
        return Field(self.grid, self.t, self.values.copy())


@dataclass
class ScaledField:
    """Field v(t, y_j) = sqrt(t) * u(t, t*y_j) on a fixed scaled grid; h = 1/t."""

    ygrid: Grid1D
    t: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.ygrid.n,):
            raise ValueError("values shape does not match scaled grid")
        if not np.all(np.isfinite(self.values.view(np.float64))):
            raise FloatingPointError(f"non-finite scaled field values at t={self.t}")

    @property
    def h(self) -> float:
        return 1.0 / self.t

    def copy(self) -> "ScaledField":
        return ScaledField(self.ygrid, self.t, self.values.copy())


def _grid_of(f) -> Grid1D:
    return f.grid if isinstance(f, Field) else f.ygrid


def norms(f, p: float | None = None):
    """Return (l2, linf) or (l2, linf, lp) of a Field/ScaledField.

    Plain Riemann sums on the periodic grid:
        l2  = sqrt(sum |f_j|^2 dx)
        lp  = (sum |f_j|^p dx)^(1/p)
        linf = max_j |f_j|
    """
    g = _grid_of(f)
    if g.n == 0:
        raise ValueError("empty field")
    a = np.abs(f.values)
    l2 = math.sqrt(float(np.sum(a * a)) * g.dx)
    linf = float(a.max())
    if p is None:
        return l2, linf
    if p < 1:
        raise ValueError("p must be >= 1")
    lp = float(np.sum(a**p) * g.dx) ** (1.0 / p)
    return l2, linf, lp


def weighted_l2(f, m: int = 1) -> float:
    """Discrete surrogate of ||x^m f||_L2 using the grid's x samples."""
    g = _grid_of(f)
    a = np.abs(f.values) * np.abs(g.x) ** m
    return math.sqrt(float(np.sum(a * a)) * g.dx)


def make_initial(kind: str, params: dict, grid: Grid1D) -> Field:
    """Construct a deterministic initial condition u0 on `grid` at t=0.

    kinds:
      gaussian       amplitude, width, chirp, velocity:
                     A*exp(-x^2/(2 w^2) + i c x^2 + i k0 x)
      supergaussian  amplitude, width, power: A*exp(-(x/w)^(2p))
      two-bump       amplitude, width, separation (two gaussians at +-sep/2)
      file           path: load from an initial-condition file (see save_ic_file)
    """
    x = grid.x
    if kind == "gaussian":
        A = float(params.get("amplitude", 1.0))
        w = float(params.get("width", 1.0))
        c = float(params.get("chirp", 0.0))
        k0 = float(params.get("velocity", 0.0))
        vals = A * np.exp(-(x**2) / (2.0 * w * w) + 1j * c * x**2 + 1j * k0 * x)
    elif kind == "supergaussian":
        A = float(params.get("amplitude", 1.0))
        w = float(params.get("width", 1.0))
        p = int(params.get("power", 2))
        vals = A * np.exp(-((x / w) ** (2 * p)) + 0j)
    elif kind == "two-bump":
        A = float(params.get("amplitude", 1.0))
        w = float(params.get("width", 1.0))
        sep = float(params.get("separation", 10.0))
        vals = A * (
            np.exp(-((x - sep / 2) ** 2) / (2 * w * w))
            + np.exp(-((x + sep / 2) ** 2) / (2 * w * w))
        ) + 0j
    elif kind == "file":
        f = load_ic_file(str(params["path"]))
        if f.grid != grid:
            raise ValueError(
                f"initial-condition file grid {f.grid} does not match requested {grid}"
            )
        return Field(grid, 0.0, f.values)
    else:
        raise ValueError(f"unknown initial-condition kind {kind!r}")
    return Field(grid, 0.0, vals)


def save_ic_file(path: str, f: Field) -> None:
    """Two-column text format: header '# dnlslab-ic v1 N=.. L=.. t=..' + (re, im) rows."""
    header = f"{IC_HEADER_MAGIC} N={f.grid.n} L={f.grid.half_width!r} t={f.t!r}"
    data = np.column_stack([f.values.real, f.values.imag])
    np.savetxt(path, data, header=header)


def load_ic_file(path: str) -> Field:
    with open(path) as fh:
        first = fh.readline()
    if IC_HEADER_MAGIC not in first:
        raise ValueError(f"{path}: not an initial-condition file (missing header)")
    meta = dict(
        tok.split("=", 1) for tok in first.split() if "=" in tok
    )
    n = int(meta["N"])
    L = float(meta["L"])
    t = float(meta["t"])
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape != (n, 2):
        raise ValueError(f"{path}: expected {n} rows of (re, im), got {data.shape}")
    grid = Grid1D(n, L)
    return Field(grid, t, data[:, 0] + 1j * data[:, 1])
