"""
Semiclassical Weyl quantization at parameter h.

Two realizations are provided:

* ``weyl_dense``: an O(N^3) dense-matrix oracle implementing the defining
  double integral by grid-node quadrature (intended only for small N
  cross-validation), and ``sharp_product_dense`` for composition checks.
* ``filter_fast``: the production chirp-FFT realization of the phase-space
  filter with symbol gamma((x + F'(xi))/sqrt(h)) — a function of the linear
  form x + 2 c2 xi + c1 only.  Conjugating by the quadratic chirp
  m(y) = exp(i (y+c1)^2 / (4 c2 h)) turns any such symbol into a plain
  Fourier multiplier gamma(2 c2 k sqrt(h)); this is exact in exact
  arithmetic because the phase is quadratic (metaplectic covariance).

The fast path refuses to run when the chirp phase is not resolved by the
grid (increment per cell >= pi) unless explicitly overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .core import Field, Grid1D, ScaledField, SymbolF

__all__ = [
    "CutoffSpec",
    "DenseOperator",
    "ChirpResolutionError",
    "chirp_phase",
    "chirp_increment",
    "weyl_dense",
    "sharp_product_dense",
    "filter_fast",
    "vector_field_scaled",
    "vector_field_scaled_forms",
]

DENSE_ORACLE_CAP = 512


class ChirpResolutionError(RuntimeError):
    """Raised when the quadratic chirp phase would alias on the given grid."""


@dataclass(frozen=True)
class CutoffSpec:
    """Even C-infinity bump gamma: 1 on [-r_inner, r_inner], 0 outside [-r_outer, r_outer].

    gamma(s) = psi((r_outer - |s|) / (r_outer - r_inner)) with the standard
    partition-of-unity ramp psi(tau) = e^{-1/tau} / (e^{-1/tau} + e^{-1/(1-tau)}).
    ``everywhere_one`` replaces gamma by the constant 1 (identity filter).
    """

    r_inner: float = 1.0
    r_outer: float = 2.0
    everywhere_one: bool = False

    def __post_init__(self):
        if not self.everywhere_one:
            if self.r_inner <= 0 or self.r_outer <= self.r_inner:
                raise ValueError("need 0 < r_inner < r_outer")

    def gamma(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        if self.everywhere_one:
            return np.ones_like(s)
        out = np.zeros_like(s)
        out[s <= self.r_inner] = 1.0
        band = (s > self.r_inner) & (s < self.r_outer)
        if np.any(band):
            tau = (self.r_outer - s[band]) / (self.r_outer - self.r_inner)
            a = np.exp(-1.0 / tau)
            b = np.exp(-1.0 / (1.0 - tau))
            out[band] = a / (a + b)
        return out


@dataclass
class DenseOperator:
    """N x N matrix realization of a Weyl operator on a specific grid."""

    grid: Grid1D
    h: float
    matrix: np.ndarray

    def apply(self, f):
        if _grid(f) != self.grid:
            raise ValueError("field grid does not match operator grid")
        out = self.matrix @ f.values
        if isinstance(f, Field):
            return Field(f.grid, f.t, out)
        return ScaledField(f.ygrid, f.t, out)


def _grid(f) -> Grid1D:
    return f.grid if isinstance(f, Field) else f.ygrid


def weyl_dense(a, h: float, grid: Grid1D, cap: int = DENSE_ORACLE_CAP) -> DenseOperator:
    """Dense quantization oracle: quadrature of the defining double integral.

    ``a(x, xi)`` must be vectorized over numpy arrays.  Entries are

        M_jl = (1/N) * sum_m a(mid_jl, h*k_m) * exp(i * sep_jl * k_m)

    with the separation sep and midpoint mid taken in the minimal-image
    sense on the periodic box (the quadrature phase is 2L-periodic in the
    separation, so the symbol arguments must be too).  Exact for a == 1
    (identity), a = x (multiplication) and a = xi (h * spectral derivative).
    Cost O(N^3); refuses above ``cap``.
    """
    if grid.n > cap:
        raise ValueError(f"dense oracle capped at N={cap}, got N={grid.n}")
    if not (0.0 < h <= 1.0):
        raise ValueError(f"need h in (0, 1], got {h}")
    x = grid.x
    L = grid.half_width
    sep = x[:, None] - x[None, :]
    sep = (sep + L) % (2.0 * L) - L
    mid = x[None, :] + 0.5 * sep
    mid = (mid + L) % (2.0 * L) - L
    M = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for km in grid.k:
        M += a(mid, h * km) * np.exp(1j * sep * km)
    M /= grid.n
    return DenseOperator(grid, h, M)


def sharp_product_dense(a, b, h: float, grid: Grid1D, cap: int = DENSE_ORACLE_CAP) -> DenseOperator:
    """Operator composition oracle: weyl_dense(a) @ weyl_dense(b)."""
    A = weyl_dense(a, h, grid, cap)
    B = weyl_dense(b, h, grid, cap)
    return DenseOperator(grid, h, A.matrix @ B.matrix)


def chirp_phase(y, F: SymbolF, h: float):
    """Quadratic chirp phase (y + c1)^2 / (4 c2 h)."""
    return (y + F.c1) ** 2 / (4.0 * F.c2 * h)


def chirp_increment(grid: Grid1D, F: SymbolF, h: float) -> float:
    """Max phase increment of the chirp between adjacent grid cells."""
    phi = chirp_phase(grid.x, F, h)
    return float(np.max(np.abs(np.diff(phi))))


def _check_chirp(grid: Grid1D, F: SymbolF, h: float, override: bool) -> float:
    inc = chirp_increment(grid, F, h)
    if inc >= math.pi and not override:
        raise ChirpResolutionError(
            f"chirp phase increment per cell {inc:.3g} >= pi on this grid "
            f"(h={h:.3g}); use a finer grid or smaller box, or pass "
            "unsafe_allow_aliased_chirp=True to record the aliased result"
        )
    return inc


def filter_fast(
    v: ScaledField,
    h: float,
    F: SymbolF,
    cutoff: CutoffSpec,
    complement: bool = False,
    unsafe_allow_aliased_chirp: bool = False,
) -> ScaledField:
    """Phase-space filter v_Lambda = (Weyl op with symbol gamma((x+F'(xi))/sqrt h)) v.

    Computed as  conj(m) * IFFT[ gamma(2 c2 k sqrt(h)) * FFT[ m * v ] ]  with
    the chirp m(y) = exp(i (y+c1)^2/(4 c2 h)).  ``complement=True`` uses
    1 - gamma instead (so the two calls sum to v exactly).
    """
    grid = v.ygrid
    _check_chirp(grid, F, h, unsafe_allow_aliased_chirp)
    if cutoff.everywhere_one:
        vals = np.zeros_like(v.values) if complement else v.values.copy()
        return ScaledField(grid, v.t, vals)
    m = np.exp(1j * chirp_phase(grid.x, F, h))
    mult = cutoff.gamma(2.0 * F.c2 * grid.k * math.sqrt(h))
    if complement:
        mult = 1.0 - mult
    out = np.conj(m) * sfft.ifft(mult * sfft.fft(m * v.values))
    return ScaledField(grid, v.t, out)


def vector_field_scaled_forms(v: ScaledField, t: float, F: SymbolF):
    """Scaled vector field applied two ways; returns (direct, chirp_form).

    direct:  (y + c1) * t * v + 2 c2 * D_y v   (D = -i d/dy, spectral)
    chirp:   conj(m) * 2 c2 D (m * v)          with the same chirp as filter_fast
    """
    grid = v.ygrid
    dv = sfft.ifft(grid.k * sfft.fft(v.values))
    direct = (grid.x + F.c1) * t * v.values + 2.0 * F.c2 * dv
    m = np.exp(1j * chirp_phase(grid.x, F, 1.0 / t))
    chirp = np.conj(m) * (2.0 * F.c2 * sfft.ifft(grid.k * sfft.fft(m * v.values)))
    return (
        ScaledField(grid, v.t, direct),
        ScaledField(grid, v.t, chirp),
    )


def vector_field_scaled(
    v: ScaledField, t: float, F: SymbolF, agreement_tol: float = 1e-10
) -> ScaledField:
    """Apply the scaled vector field (y+c1) t + 2 c2 D_y.

    Cross-checks the direct form against the chirp-conjugated form; the two
    are identical operators in exact arithmetic, so disagreement beyond
    roundoff signals an unresolved chirp or aliasing.
    """
    if t < 1.0:
        raise ValueError(f"scaled vector field defined for t >= 1, got t={t}")
    direct, chirp = vector_field_scaled_forms(v, t, F)
    scale = float(np.max(np.abs(direct.values)))
    if scale > 0.0:
        # only enforce when the chirp itself is representable on the grid
        if chirp_increment(v.ygrid, F, 1.0 / t) < math.pi:
            rel = float(np.max(np.abs(direct.values - chirp.values))) / scale
            if rel > agreement_tol * max(1.0, t):
                raise FloatingPointError(
                    f"direct and chirp forms of the vector field disagree: rel={rel:.3e}"
                )
    return direct
