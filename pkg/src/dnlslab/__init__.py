"""Pseudo-spectral laboratory for the 1D dissipative nonlinear Schrödinger
equation (D_t - F(D)) u = lambda |u|^alpha u: long-time decay, semiclassical
phase-space filtering, and modified-scattering profile extraction."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .core import (
    Field,
    Grid1D,
    ModelParams,
    ScaledField,
    SymbolF,
    make_initial,
    norms,
    validate_params,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Field",
    "Grid1D",
    "ModelParams",
    "ScaledField",
    "SymbolF",
    "make_initial",
    "norms",
    "validate_params",
    "__version__",
]
