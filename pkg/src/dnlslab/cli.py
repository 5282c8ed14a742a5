"""
Experiment orchestration: `python -m dnlslab <subcommand>`.

Subcommands:
  solve         run one evolution from a config; write checkpoints + CSV series
  asymptotics   post-process a solve output directory into profile/residuals
  oracle        run the dense-vs-fast quantization validation suite
  sweep         run several configs concurrently (independent processes)
  verify        run the acceptance test suite end-to-end (requires pytest)

Exit codes: 0 success, 2 config error, 3 numerical abort (NaN/boundary),
4 non-convergence verdict.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys

import numpy as np

from . import asymptotics as asym
from . import semiclassical as semi
from .config import ConfigError, ExperimentConfig, parse_config, serialize_config
from .core import Field, Grid1D, ModelParams, ScaledField, SymbolF, make_initial, norms
from .diagnostics import VFObserver
from .solver import (
    BoundaryTripError,
    NumericalAbortError,
    load_checkpoint,
    save_checkpoint,
    strang_evolve,
)
from .weyl import CutoffSpec, filter_fast, sharp_product_dense, weyl_dense

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NOT_CONVERGED = 4


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------

def run_solve(cfg: ExperimentConfig, out_dir: str):
    """Run one evolution and write all artifacts; returns (trajectory, observers)."""
    os.makedirs(out_dir, exist_ok=True)
    p = cfg.model()
    F = cfg.symbol()
    grid = cfg.grid()
    u0 = make_initial(cfg.ic_kind, cfg.initial_params(), grid)
    observers = []
    vf = None
    if cfg.diagnostics:
        vf = VFObserver(F)
        observers.append(vf)
    scaled = None
    if cfg.scaled:
        scaled = semi.ScaledFrameObserver(
            cfg.scaled_grid(), F, cfg.cutoff(), t_start=cfg.t_scaled_start
        )
        observers.append(scaled)

    traj = strang_evolve(u0, cfg.stepping(), p, F, observers=observers, keep="dyadic")

    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(serialize_config(cfg))
    times, defect = np.asarray(traj.ledger.times), traj.ledger.defect()
    with open(os.path.join(out_dir, "ledger.csv"), "w") as fh:
        fh.write("# dnlslab ledger schema v1\n")
        fh.write("t,l2sq,cumulative_dissipation,defect\n")
        for t, l2sq, cum, d in zip(times, traj.ledger.l2sq, traj.ledger.cumulative, defect):
            fh.write(f"{t:.12e},{l2sq:.12e},{cum:.12e},{d:.12e}\n")
    with open(os.path.join(out_dir, "norms.csv"), "w") as fh:
        fh.write("# dnlslab norms schema v1\n")
        fh.write("t,l2,linf\n")
        for t, l2, linf in zip(traj.times, traj.l2, traj.linf):
            fh.write(f"{t:.12e},{l2:.12e},{linf:.12e}\n")
    if vf is not None:
        vf.report.write_csv(os.path.join(out_dir, "vfreport.csv"))
    for t, f in traj.snapshots.items():
        save_checkpoint(os.path.join(out_dir, f"checkpoint_t{t:g}.npz"), f, p, F)
    save_checkpoint(os.path.join(out_dir, "checkpoint_final.npz"), traj.final, p, F)
    if scaled is not None and scaled.checkpoints:
        yg = scaled.ygrid
        np.savez_compressed(
            os.path.join(out_dir, "scaled_series.npz"),
            times=np.array([c.t for c in scaled.checkpoints]),
            vlam=np.stack([c.v_lam.values for c in scaled.checkpoints]),
            v_l2=np.array([c.v_norms[0] for c in scaled.checkpoints]),
            v_inf=np.array([c.v_norms[1] for c in scaled.checkpoints]),
            vlamc_l2=np.array([c.v_lamc_norms[0] for c in scaled.checkpoints]),
            vlamc_inf=np.array([c.v_lamc_norms[1] for c in scaled.checkpoints]),
            interp_tail=np.array([c.interp_tail for c in scaled.checkpoints]),
            ygrid_n=yg.n,
            ygrid_half_width=yg.half_width,
        )
    _write_gnuplot_script(out_dir)
    return traj, {"vf": vf, "scaled": scaled}


def _write_gnuplot_script(out_dir: str):
    with open(os.path.join(out_dir, "plots.gp"), "w") as fh:
        fh.write(
            "set datafile separator ','\n"
            "set logscale xy\n"
            "plot 'norms.csv' using 1:3 every ::2 with lines title 'linf'\n"
            "pause -1\n"
        )


# --------------------------------------------------------------------------
# asymptotics post-processing
# --------------------------------------------------------------------------

def load_scaled_checkpoints(out_dir: str, alpha: float):
    d = np.load(os.path.join(out_dir, "scaled_series.npz"))
    yg = Grid1D(int(d["ygrid_n"]), float(d["ygrid_half_width"]))
    cps = []
    for i, t in enumerate(d["times"]):
        cp = semi.ScaledCheckpoint(
            t=float(t),
            v_lam=ScaledField(yg, float(t), d["vlam"][i]),
            v_norms=(float(d["v_l2"][i]), float(d["v_inf"][i])),
            v_lamc_norms=(float(d["vlamc_l2"][i]), float(d["vlamc_inf"][i])),
            interp_tail=float(d["interp_tail"][i]),
        )
        cps.append(cp)
    asym.attach_alpha(cps, alpha)
    return cps, yg


def run_asymptotics(out_dir: str, cfg: ExperimentConfig | None = None):
    """Derive profile + residual artifacts from a solve output directory.

    Returns (verdict_dict, exit_code).
    """
    if cfg is None:
        with open(os.path.join(out_dir, "config.txt")) as fh:
            cfg = parse_config(fh.read())
    p = cfg.model()
    F = cfg.symbol()
    cps, yg = load_scaled_checkpoints(out_dir, p.alpha)
    asym.attach_alpha(cps, p.alpha)
    phases = asym.phi_accumulate(cps)
    z_series = [
        (c.t, asym.z_of(c.v_lam, phases.phi[i], F, p)) for i, c in enumerate(cps)
    ]
    profile = asym.extract_zplus(z_series, yg)
    psi_end, psi_int, disc, budget = asym.psi_plus(z_series, profile, phases, p)
    profile.psi_plus = psi_end
    profile.write_csv(os.path.join(out_dir, "profile.csv"))

    rem = semi.remainder_rates(cps, F, p)
    rem.write_csv(os.path.join(out_dir, "remainders.csv"))

    # residuals at the stored dyadic physical checkpoints
    rows = []
    uplus = None
    for name in sorted(os.listdir(out_dir)):
        if not (name.startswith("checkpoint_t") and name.endswith(".npz")):
            continue
        u, _, _ = load_checkpoint(os.path.join(out_dir, name))
        if u.t < 1.0 or u.t * yg.half_width < u.grid.half_width * (1 - 1e-12):
            continue
        if uplus is None:
            uplus = asym.u_plus(profile, F, u.grid)
        r_inf, r_l2 = asym.profile_residuals(u, profile, psi_end, F, p)
        scat = asym.scattering_residual(u, profile, psi_end, uplus, F, p)
        rows.append((u.t, r_inf * math.sqrt(u.t), r_l2, scat))
    rows.sort()

    # universal limit probe from the recorded norm series
    norms_csv = np.loadtxt(os.path.join(out_dir, "norms.csv"), delimiter=",", skiprows=2)
    t_all, linf_all = norms_csv[:, 0], norms_csv[:, 2]

    class _T:  # minimal trajectory view
        times = t_all
        linf = linf_all

    tt, series, target, limit_verdict = asym.universal_limit_probe(_T(), p, cfg.limit_tolerance)

    with open(os.path.join(out_dir, "residuals.csv"), "w") as fh:
        fh.write("# dnlslab residual-series schema v1\n")
        fh.write("t,r_inf_scaled,r_l2,scat_l2,limit_probe,target\n")
        probe_at = {float(f"{t:.6g}"): s for t, s in zip(tt, series)}
        for t, ri, rl, sc in rows:
            pr = probe_at.get(float(f"{t:.6g}"), float("nan"))
            fh.write(f"{t:.12e},{ri:.12e},{rl:.12e},{sc:.12e},{pr:.12e},{target:.12e}\n")

    verdict = {
        "converged": profile.converged,
        "kappa_est": profile.kappa_est,
        "T_max": profile.T_max,
        "psi_plus_discrepancy": disc,
        "psi_plus_budget": budget,
        "limit_probe": limit_verdict["final_ratio"] * target,
        "limit_target": target,
        "limit_within_tolerance": limit_verdict["within_tolerance"],
        "limit_monotone": limit_verdict["monotone_approach"],
        "slope_vlamc_inf": rem.slopes.get("vlamc_inf", float("nan")),
        "slope_vlamc_l2": rem.slopes.get("vlamc_l2", float("nan")),
        "slope_r_inf": rem.slopes.get("r_inf", float("nan")),
    }
    with open(os.path.join(out_dir, "verdict.txt"), "w") as fh:
        for k, v in verdict.items():
            fh.write(f"{k} = {v}\n")
    code = EXIT_OK if profile.converged else EXIT_NOT_CONVERGED
    return verdict, code


# --------------------------------------------------------------------------
# oracle suite
# --------------------------------------------------------------------------

def build_oracle_report(cfg: ExperimentConfig, h_values=(0.25, 0.0625), rng_seed=1234):
    """Quantization validation: dense certifications, dense-vs-fast, identities.

    Returns a list of (name, residual, tolerance, passed) rows.
    """
    F = cfg.symbol()
    cutoff = cfg.cutoff()
    grid = Grid1D(cfg.oracle_n, cfg.oracle_half_width)
    tol = cfg.oracle_tolerance
    rows = []
    rng = np.random.default_rng(rng_seed)
    x = grid.x

    def add(name, res, tol_row=tol):
        rows.append((name, float(res), tol_row, float(res) <= tol_row))

    for h in h_values:
        one = weyl_dense(lambda X, XI: np.ones_like(X), h, grid)
        add(f"h={h}: a=1 -> identity", np.abs(one.matrix - np.eye(grid.n)).max(), 1e-8)
        mx = weyl_dense(lambda X, XI: X + 0.0 * XI, h, grid)
        add(f"h={h}: a=x -> multiplication", np.abs(mx.matrix - np.diag(x)).max() / grid.half_width, 1e-8)
        u = np.exp(-(x**2)) * np.exp(0.7j * x)
        mxi = weyl_dense(lambda X, XI: XI + 0.0 * X, h, grid)
        hdu = h * np.fft.ifft(grid.k * np.fft.fft(u))
        add(
            f"h={h}: a=xi -> h*D action",
            np.abs(mxi.matrix @ u - hdu).max() / np.abs(hdu).max(),
        )

        # dense vs fast filter on a random band-limited field
        sigma = 1.0 + rng.random()
        v = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) * np.exp(
            -(x**2) / (2 * sigma**2)
        )
        vf = ScaledField(grid, 1.0 / h, v)
        gam = lambda X, XI: cutoff.gamma((X + F.Fprime(XI)) / math.sqrt(h))
        dense = weyl_dense(gam, h, grid)
        fast = filter_fast(vf, h, F, cutoff, unsafe_allow_aliased_chirp=True)
        add(
            f"h={h}: filter_fast vs dense(Gamma)",
            np.abs(fast.values - dense.matrix @ v).max() / np.abs(dense.matrix @ v).max(),
        )

        # sharp-product identities with the linear factor
        sh = math.sqrt(h)
        lin = lambda X, XI: (X + F.Fprime(XI)) / sh
        g0 = lambda X, XI: cutoff.gamma(lin(X, XI))
        prod = lambda X, XI: cutoff.gamma(lin(X, XI)) * lin(X, XI)
        prod2 = lambda X, XI: cutoff.gamma(lin(X, XI)) * lin(X, XI) ** 2
        P = weyl_dense(prod, h, grid).matrix
        P2 = weyl_dense(prod2, h, grid).matrix
        AB = sharp_product_dense(g0, lin, h, grid).matrix
        BA = sharp_product_dense(lin, g0, h, grid).matrix
        scale = np.abs(P).max()
        add(f"h={h}: Gamma0 # lin == Gamma0*lin", np.abs(AB - P).max() / scale)
        add(f"h={h}: lin # Gamma0 == Gamma0*lin", np.abs(BA - P).max() / scale)
        A = weyl_dense(g0, h, grid).matrix
        B = weyl_dense(lin, h, grid).matrix
        add(
            f"h={h}: (Gamma0 # lin) # lin == Gamma0*lin^2",
            np.abs(A @ B @ B - P2).max() / np.abs(P2).max(),
        )

        # first-order composition check a=x, b=xi -> x*xi + i h/2
        mm = weyl_dense(lambda X, XI: X * XI, h, grid).matrix + 1j * h / 2 * np.eye(grid.n)
        add(
            f"h={h}: x # xi == x*xi + ih/2",
            np.abs(mx.matrix @ mxi.matrix - mm).max() / np.abs(mm).max(),
        )
    return rows


def print_oracle_report(rows, file=sys.stdout):
    width = max(len(r[0]) for r in rows)
    ok_all = True
    for name, res, tol, ok in rows:
        ok_all &= ok
        file.write(f"{name:<{width}}  residual={res:.3e}  tol={tol:.1e}  {'PASS' if ok else 'FAIL'}\n")
    return ok_all


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _load_cfg(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _solve_one(args_tuple):
    path, out = args_tuple
    cfg = _load_cfg(path)
    run_solve(cfg, out)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dnlslab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    ap_solve = sub.add_parser("solve", help="run one evolution")
    ap_solve.add_argument("--config", required=True)
    ap_solve.add_argument("--out", default=None)

    ap_asym = sub.add_parser("asymptotics", help="post-process a solve directory")
    ap_asym.add_argument("--resume", required=True, help="solve output directory")

    ap_oracle = sub.add_parser("oracle", help="quantization validation suite")
    ap_oracle.add_argument("--config", default=None)

    ap_sweep = sub.add_parser("sweep", help="run several configs concurrently")
    ap_sweep.add_argument("--config", nargs="+", required=True)
    ap_sweep.add_argument("--out", default="sweep_out")

    sub.add_parser("verify", help="run the acceptance suite (needs pytest + repo tests/)")

    args = ap.parse_args(argv)
    try:
        if args.cmd == "solve":
            cfg = _load_cfg(args.config)
            out = args.out or cfg.out_dir
            run_solve(cfg, out)
            return EXIT_OK
        if args.cmd == "asymptotics":
            _, code = run_asymptotics(args.resume)
            return code
        if args.cmd == "oracle":
            cfg = _load_cfg(args.config) if args.config else ExperimentConfig()
            rows = build_oracle_report(cfg)
            print_oracle_report(rows)
            return EXIT_OK
        if args.cmd == "sweep":
            jobs = [
                (path, os.path.join(args.out, f"run{i:03d}"))
                for i, path in enumerate(args.config)
            ]
            with concurrent.futures.ProcessPoolExecutor() as ex:
                list(ex.map(_solve_one, jobs))
            return EXIT_OK
        if args.cmd == "verify":
            import subprocess

            return subprocess.call(
                [sys.executable, "-m", "pytest", "-v", "tests/test_acceptance.py"]
            )
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (BoundaryTripError, NumericalAbortError, FloatingPointError) as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
