"""Benchmark: compiled nonlinear-substep kernel vs the pure-numpy fallback.

Usage:  python3 benchmarks/bench_kernels.py [--sizes 4096,65536,1048576]

Reports per-call wall time for both backends plus the FFT time of one linear
substep at the same size, so the kernel's share of a full Strang step is
visible.  Also cross-checks that both backends produce identical output.
"""

from __future__ import annotations

import argparse
import time

import numpy as np
from scipy import fft as sfft

from dnlslab import _kernels
from dnlslab._kernels import fallback


def _time(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_size(n: int, reps: int = 5):
    rng = np.random.default_rng(0)
    base = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    dt, alpha, l1, l2 = 1e-3, 1.8, 0.3, 1.0

    u_c = base.copy()
    u_f = base.copy()
    s_c = _kernels.nonlinear_substep(u_c, dt, alpha, l1, l2)
    s_f = fallback.nonlinear_substep(u_f, dt, alpha, l1, l2)
    max_dev = float(np.abs(u_c - u_f).max())
    sum_dev = abs(s_c - s_f) / abs(s_f)

    t_compiled = _time(
        lambda: _kernels.nonlinear_substep(base.copy(), dt, alpha, l1, l2), reps
    )
    t_fallback = _time(
        lambda: fallback.nonlinear_substep(base.copy(), dt, alpha, l1, l2), reps
    )
    t_copy = _time(lambda: base.copy(), reps)
    t_fft = _time(lambda: sfft.ifft(sfft.fft(base)), reps)
    return {
        "n": n,
        "compiled_ms": (t_compiled - t_copy) * 1e3,
        "fallback_ms": (t_fallback - t_copy) * 1e3,
        "fft_pair_ms": t_fft * 1e3,
        "speedup": (t_fallback - t_copy) / max(t_compiled - t_copy, 1e-12),
        "max_dev": max_dev,
        "sum_dev": sum_dev,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="4096,65536,1048576")
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"active backend: {_kernels.BACKEND}")
    hdr = f"{'n':>9}  {'compiled':>10}  {'fallback':>10}  {'speedup':>7}  {'fft pair':>10}  {'max dev':>9}"
    print(hdr)
    print("-" * len(hdr))
    for n in sizes:
        r = bench_size(n, args.reps)
        print(
            f"{r['n']:>9}  {r['compiled_ms']:>8.3f}ms  {r['fallback_ms']:>8.3f}ms  "
            f"{r['speedup']:>6.2f}x  {r['fft_pair_ms']:>8.3f}ms  {r['max_dev']:>9.2e}"
        )
        assert r["max_dev"] < 1e-12, "backends disagree"
        assert r["sum_dev"] < 1e-10, "backend sums disagree"


if __name__ == "__main__":
    main()
