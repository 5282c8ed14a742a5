"""Kernel backend selection: compiled extension if available, numpy otherwise."""

try:
    from ._nlstep import nonlinear_substep

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from .fallback import nonlinear_substep

    BACKEND = "numpy"

__all__ = ["nonlinear_substep", "BACKEND"]
