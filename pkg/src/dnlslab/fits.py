"""Log-log slope extraction helpers for decay/growth rate estimation."""

from __future__ import annotations

import numpy as np

__all__ = ["loglog_slope", "theil_sen_slope", "last_decade_window"]


def last_decade_window(t, decades: float = 1.0, min_points: int = 8):
    """Boolean mask selecting the final `decades` of log-time."""
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        raise ValueError("empty time series")
    mask = t >= t.max() / 10.0**decades
    if int(mask.sum()) < min_points:
        raise ValueError(
            f"only {int(mask.sum())} checkpoints in the last {decades} decade(s); "
            f"need >= {min_points}"
        )
    return mask


def loglog_slope(t, y, mask=None) -> float:
    """Least-squares slope of log y vs log t (positive entries only)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = np.ones_like(t, dtype=bool)
    sel = mask & (t > 0) & (y > 0)
    if int(sel.sum()) < 2:
        raise ValueError("need at least two positive points for a slope fit")
    lt, ly = np.log(t[sel]), np.log(y[sel])
    return float(np.polyfit(lt, ly, 1)[0])


def theil_sen_slope(t, y, mask=None) -> float:
    """Median of pairwise slopes in log-log coordinates (robust cross-check)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = np.ones_like(t, dtype=bool)
    sel = mask & (t > 0) & (y > 0)
    lt, ly = np.log(t[sel]), np.log(y[sel])
    if lt.size < 2:
        raise ValueError("need at least two positive points for a slope fit")
    dt = lt[:, None] - lt[None, :]
    dy = ly[:, None] - ly[None, :]
    iu = np.triu_indices(lt.size, k=1)
    return float(np.median(dy[iu] / dt[iu]))
