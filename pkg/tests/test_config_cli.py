import os

import numpy as np
import pytest

from dnlslab.cli import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    build_oracle_report,
    load_scaled_checkpoints,
    main,
    run_asymptotics,
    run_solve,
)
from dnlslab.config import (
    ConfigError,
    ExperimentConfig,
    parse_config,
    serialize_config,
)
from dnlslab.solver import load_checkpoint


def test_config_round_trip_bit_exact():
    cfg = ExperimentConfig(
        alpha=1.9,
        lambda1=0.30000000000000004,  # deliberately non-representable decimal
        c1=-0.125,
        n=2**14,
        half_width=160.0,
        dt=2e-3,
        schedule=((0.0, 2e-3), (1.0, 0.05), (10.0, 0.2)),
        scaled=True,
        ic_kind="two-bump",
        ic_separation=7.5,
        out_dir="somewhere",
    )
    text = serialize_config(cfg)
    cfg2 = parse_config(text)
    assert cfg2 == cfg
    assert serialize_config(cfg2) == text


def test_config_defaults_parse_empty():
    assert parse_config("") == ExperimentConfig()
    assert parse_config("# only a comment\n\n") == ExperimentConfig()


def test_config_rejects_unknown_and_malformed():
    with pytest.raises(ConfigError):
        parse_config("[nosuch]\nalpha = 1.8\n")
    with pytest.raises(ConfigError):
        parse_config("[model]\nnope = 1\n")
    with pytest.raises(ConfigError):
        parse_config("alpha = 1.8\n")  # key outside any section
    with pytest.raises(ConfigError):
        parse_config("[model]\nalpha\n")
    with pytest.raises(ConfigError):
        parse_config("[model]\nalpha = not_a_number\n")
    with pytest.raises(ConfigError):
        parse_config("[pipeline]\nscaled = yes\n")  # must be true/false
    # key from the right section only
    with pytest.raises(ConfigError):
        parse_config("[grid]\nalpha = 1.8\n")


def test_schedule_parsing():
    cfg = parse_config("[stepping]\nschedule = 0.0:0.002,1.0:0.05\n")
    assert cfg.schedule == ((0.0, 0.002), (1.0, 0.05))
    cfg = parse_config("[stepping]\nschedule = \n")
    assert cfg.schedule == ()


SMALL_RUN = """
[model]
alpha = 1.8
[grid]
n = 4096
half_width = 64.0
[scaled_grid]
scaled_n = 1024
scaled_half_width = 4.0
[stepping]
dt = 0.005
t_max = 8.0
schedule = 0.0:0.005,1.0:0.05
[pipeline]
scaled = true
"""


def run_small(tmp_path, name):
    cfg = parse_config(SMALL_RUN)
    out = str(tmp_path / name)
    traj, obs = run_solve(cfg, out)
    return cfg, out, traj, obs


def test_run_solve_artifacts(tmp_path):
    cfg, out, traj, obs = run_small(tmp_path, "run")
    for name in (
        "config.txt",
        "ledger.csv",
        "norms.csv",
        "vfreport.csv",
        "scaled_series.npz",
        "checkpoint_final.npz",
        "plots.gp",
    ):
        assert os.path.exists(os.path.join(out, name)), name
    # config written back parses to the same object
    with open(os.path.join(out, "config.txt")) as fh:
        assert parse_config(fh.read()) == cfg
    # dyadic physical checkpoints on disk
    for t in (1, 2, 4, 8):
        assert os.path.exists(os.path.join(out, f"checkpoint_t{t}.npz"))
    u, p, F = load_checkpoint(os.path.join(out, "checkpoint_final.npz"))
    assert u.t == 8.0
    # norms.csv agrees with the trajectory
    data = np.loadtxt(os.path.join(out, "norms.csv"), delimiter=",", skiprows=2)
    assert np.allclose(data[:, 0], traj.times)
    assert np.allclose(data[:, 2], traj.linf)
    # scaled series reloads into checkpoints
    cps, yg = load_scaled_checkpoints(out, cfg.alpha)
    assert yg == cfg.scaled_grid()
    assert cps[0].t >= 1.0
    assert cps[-1].t == 8.0


def test_run_solve_deterministic(tmp_path):
    _, out1, traj1, _ = run_small(tmp_path, "a")
    _, out2, traj2, _ = run_small(tmp_path, "b")
    assert np.array_equal(traj1.final.values, traj2.final.values)
    u1, _, _ = load_checkpoint(os.path.join(out1, "checkpoint_final.npz"))
    u2, _, _ = load_checkpoint(os.path.join(out2, "checkpoint_final.npz"))
    assert np.array_equal(u1.values, u2.values)
    with open(os.path.join(out1, "norms.csv")) as f1, open(
        os.path.join(out2, "norms.csv")
    ) as f2:
        assert f1.read() == f2.read()


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("[model]\nalpha = banana\n")
    assert main(["solve", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["solve", "--config", str(tmp_path / "missing.txt")]) == EXIT_CONFIG
    # box far too small for the requested horizon -> boundary trip
    trip = tmp_path / "trip.txt"
    trip.write_text(
        "[grid]\nn = 1024\nhalf_width = 10.0\n[stepping]\ndt = 0.01\nt_max = 20.0\n"
        f"[output]\nout_dir = {tmp_path / 'tripout'}\n"
    )
    assert main(["solve", "--config", str(trip)]) == EXIT_NUMERICAL
    capsys.readouterr()


def test_cli_solve_and_asymptotics_round(tmp_path, capsys):
    cfgp = tmp_path / "cfg.txt"
    cfgp.write_text(SMALL_RUN)
    out = str(tmp_path / "run")
    assert main(["solve", "--config", str(cfgp), "--out", out]) == 0
    verdict, code = run_asymptotics(out)
    # artifacts exist regardless of the convergence verdict at this tiny T
    for name in ("profile.csv", "remainders.csv", "residuals.csv", "verdict.txt"):
        assert os.path.exists(os.path.join(out, name)), name
    assert code in (0, 4)
    assert code == (0 if verdict["converged"] else 4)
    assert main(["asymptotics", "--resume", out]) == code
    capsys.readouterr()


def test_oracle_report_structure(capsys):
    cfg = ExperimentConfig(oracle_n=64, oracle_half_width=8.0)
    rows = build_oracle_report(cfg, h_values=(0.25,))
    names = [r[0] for r in rows]
    assert any("identity" in n for n in names)
    assert any("filter_fast vs dense" in n for n in names)
    assert any("x # xi" in n for n in names)
    for name, res, tol, ok in rows:
        assert ok == (res <= tol)
    # quantization certifications must pass even when composition rows do not
    certs = [r for r in rows if "->" in r[0]]
    assert certs and all(r[3] for r in certs)


def test_verdict_file_names_every_acceptance_quantity(tmp_path):
    cfg, out, _, _ = run_small(tmp_path, "run")
    run_asymptotics(out, cfg)
    with open(os.path.join(out, "verdict.txt")) as fh:
        text = fh.read()
    keys = {line.split("=", 1)[0].strip() for line in text.splitlines() if "=" in line}
    for want in (
        "converged",
        "kappa_est",
        "T_max",
        "psi_plus_discrepancy",
        "psi_plus_budget",
        "limit_probe",
        "limit_target",
        "limit_within_tolerance",
        "limit_monotone",
        "slope_vlamc_inf",
        "slope_vlamc_l2",
        "slope_r_inf",
    ):
        assert want in keys, want


def test_reanalysis_is_deterministic(tmp_path):
    cfg, out, _, _ = run_small(tmp_path, "run")
    v1, c1 = run_asymptotics(out, cfg)
    with open(os.path.join(out, "verdict.txt")) as fh:
        text1 = fh.read()
    v2, c2 = run_asymptotics(out, cfg)
    with open(os.path.join(out, "verdict.txt")) as fh:
        text2 = fh.read()
    assert c1 == c2
    assert set(v1) == set(v2)
    for k in v1:
        a, b = v1[k], v2[k]
        if isinstance(a, float) and np.isnan(a):
            assert np.isnan(b), k
        else:
            assert a == b, k
    assert text1 == text2


def test_asymptotics_empty_trajectory_hard_error(tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    with pytest.raises(FileNotFoundError):
        run_asymptotics(str(empty))
