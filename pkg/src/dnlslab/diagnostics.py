"""
Vector-field diagnostics in the physical frame.

The operator  Lv = x + t F'(D) = (x + c1 t) + 2 c2 t D  commutes with the
free flow; ||Lu||_2 and ||L^2 u||_2 act as weighted-Sobolev energies.  For
large t the direct form suffers cancellation (terms ~ t), so where the grid
resolves the associated quadratic chirp phi = (x^2 + 2 c1 t x)/(4 c2 t) the
equivalent chirp forms are used:

    L u   = e^{-i phi} (2 c2 t)   D   (e^{i phi} u)
    L^2 u = e^{-i phi} (2 c2 t)^2 D^2 (e^{i phi} u)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .core import Field, SymbolF, norms, weighted_l2
from .fits import last_decade_window, loglog_slope, theil_sen_slope

__all__ = [
    "VFReport",
    "VFObserver",
    "L_apply",
    "L_apply_forms",
    "L2_apply",
    "gn_ratios",
    "vf_monotonicity",
    "vf_growth_L2sq",
]


def _phys_chirp(x, t: float, F: SymbolF):
    return (x**2 + 2.0 * F.c1 * t * x) / (4.0 * F.c2 * t)


def _chirp_resolved(grid, t: float, F: SymbolF) -> bool:
    if t <= 0:
        return False
    inc = np.max(np.abs(grid.x + F.c1 * t)) * grid.dx / (2.0 * F.c2 * t)
    return inc < math.pi


def L_apply_forms(u: Field, t: float, F: SymbolF):
    """Direct and chirp realizations of Lu; chirp form is None when t=0."""
    g = u.grid
    du = sfft.ifft(g.k * sfft.fft(u.values))
    direct = Field(g, u.t, (g.x + F.c1 * t) * u.values + 2.0 * F.c2 * t * du)
    if t <= 0:
        return direct, None
    m = np.exp(1j * _phys_chirp(g.x, t, F))
    chirp_vals = np.conj(m) * (2.0 * F.c2 * t) * sfft.ifft(g.k * sfft.fft(m * u.values))
    return direct, Field(g, u.t, chirp_vals)


def L_apply(u: Field, t: float, F: SymbolF, agreement_tol: float = 0.05) -> Field:
    """Apply L = (x + c1 t) + 2 c2 t D, cross-checking the two forms.

    The cross-check is an L2-relative comparison with a deliberately loose
    tolerance: any residual tail of u at the periodic wrap makes both forms
    ring there (sawtoothed x, chirp-phase branch jump), which pollutes a
    pointwise comparison while leaving the norms unaffected.  The check is
    meant to catch convention-level (order-one) mistakes only.
    """
    direct, chirp = L_apply_forms(u, t, F)
    if chirp is not None and _chirp_resolved(u.grid, t, F):
        scale = float(np.sqrt(np.sum(np.abs(direct.values) ** 2)))
        if scale > 0:
            rel = float(
                np.sqrt(np.sum(np.abs(direct.values - chirp.values) ** 2))
            ) / scale
            if rel > agreement_tol:
                raise FloatingPointError(
                    f"vector-field direct vs chirp forms disagree: rel={rel:.3e} at t={t:.4g}"
                )
        return chirp
    return direct


def L2_apply(u: Field, t: float, F: SymbolF) -> Field:
    """Apply L twice; uses a single chirped second derivative when resolved."""
    g = u.grid
    if t > 0 and _chirp_resolved(g, t, F):
        m = np.exp(1j * _phys_chirp(g.x, t, F))
        vals = np.conj(m) * (2.0 * F.c2 * t) ** 2 * sfft.ifft(
            g.k**2 * sfft.fft(m * u.values)
        )
        return Field(g, u.t, vals)
    d1, _ = L_apply_forms(u, t, F)
    d2, _ = L_apply_forms(d1, t, F)
    return d2


def gn_ratios(u: Field, t: float, F: SymbolF):
    """Interpolation-inequality ratios (both should stay bounded along a run).

    r1 = ||u||_inf / (t^{-1/2} ||u||_2^{1/2} ||Lu||_2^{1/2})
    r4 = ||Lu||_4  / (||u||_inf^{1/2} ||L^2 u||_2^{1/2})
    """
    if t < 1:
        raise ValueError("gn_ratios defined for t >= 1")
    l2, linf = norms(u)
    Lu = L_apply(u, t, F)
    L2u = L2_apply(u, t, F)
    Ln, _ = norms(Lu)
    L2n, _ = norms(L2u)
    _, _, L4 = norms(Lu, p=4)
    if l2 == 0 or Ln == 0 or linf == 0 or L2n == 0:
        raise ZeroDivisionError("zero norm in gn_ratios")
    r1 = linf / (t**-0.5 * math.sqrt(l2) * math.sqrt(Ln))
    r4 = L4 / (math.sqrt(linf) * math.sqrt(L2n))
    return r1, r4


@dataclass
class VFReport:
    """Norm series over checkpoints: (t, l2, Lnorm, L2norm, linf, r1, r4)."""

    times: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    Lnorm: list = field(default_factory=list)
    L2norm: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    r1: list = field(default_factory=list)
    r4: list = field(default_factory=list)

    def arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in
                ("times", "l2", "Lnorm", "L2norm", "linf", "r1", "r4")}

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("# dnlslab vfreport schema v1\n")
            fh.write("t,l2,Lnorm,L2norm,linf,r1,r4\n")
            for row in zip(self.times, self.l2, self.Lnorm, self.L2norm,
                           self.linf, self.r1, self.r4):
                fh.write(",".join(f"{v:.12e}" for v in row) + "\n")


class VFObserver:
    """Solver observer accumulating a VFReport at every checkpoint."""

    def __init__(self, F: SymbolF, with_ratios: bool = True):
        self.F = F
        self.with_ratios = with_ratios
        self.report = VFReport()

    def on_checkpoint(self, u: Field):
        t = u.t
        l2, linf = norms(u)
        Lu = L_apply(u, t, self.F)
        L2u = L2_apply(u, t, self.F)
        Ln, _ = norms(Lu)
        L2n, _ = norms(L2u)
        r1 = r4 = float("nan")
        if self.with_ratios and t >= 1 and linf > 0 and L2n > 0:
            _, _, L4 = norms(Lu, p=4)
            r1 = linf / (t**-0.5 * math.sqrt(l2) * math.sqrt(Ln)) if Ln > 0 else float("nan")
            r4 = L4 / (math.sqrt(linf) * math.sqrt(L2n))
        rep = self.report
        rep.times.append(t)
        rep.l2.append(l2)
        rep.Lnorm.append(Ln)
        rep.L2norm.append(L2n)
        rep.linf.append(linf)
        rep.r1.append(r1)
        rep.r4.append(r4)


def vf_monotonicity(report: VFReport, u0: Field, tol: float = 1e-3):
    """Check ||Lu(t)||_2 <= ||x u0||_2 * (1 + tol) at every checkpoint.

    Returns (ok, max_violation, bound) where max_violation is
    max_t ||Lu||_2 / bound - 1 (can be negative).
    """
    bound = weighted_l2(u0, m=1)
    Ln = np.asarray(report.Lnorm)
    if bound == 0:
        return bool(np.all(Ln <= tol)), 0.0, 0.0
    viol = float(Ln.max() / bound - 1.0)
    return viol <= tol, viol, bound


def vf_growth_L2sq(report: VFReport, alpha: float, slack: float = 0.15):
    """Fit the growth exponent of ||L^2 u||_2 over the last decade.

    Returns (slope, robust_slope, ok) with ok := slope <= (2 - alpha) + slack.
    """
    if alpha < 1:
        raise ValueError("growth bound stated for alpha >= 1")
    t = np.asarray(report.times)
    y = np.asarray(report.L2norm)
    mask = last_decade_window(t, min_points=8)
    slope = loglog_slope(t, y, mask)
    robust = theil_sen_slope(t, y, mask)
    return slope, robust, slope <= (2.0 - alpha) + slack
