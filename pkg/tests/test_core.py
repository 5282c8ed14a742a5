import math

import numpy as np
import pytest

from dnlslab.core import (
    Field,
    Grid1D,
    ModelParams,
    SymbolF,
    load_ic_file,
    make_initial,
    norms,
    save_ic_file,
    validate_params,
    weighted_l2,
)


def test_symbol_evaluations():
    F = SymbolF(0.5, -1.0, 2.0)
    xi = np.array([-2.0, 0.0, 3.0])
    assert np.allclose(F.F(xi), 0.5 * xi**2 - xi + 2.0)
    assert np.allclose(F.Fprime(xi), xi - 1.0)
    # w is the critical value of x*s + F(s) over s: x + F'(s) = 0
    x = np.array([-1.5, 0.0, 2.5])
    for xv, wv in zip(x, F.w(x)):
        s = np.linspace(-30, 30, 200001)
        assert abs(np.min(xv * s + F.F(s)) - wv) < 1e-6


def test_symbol_requires_ellipticity():
    with pytest.raises(ValueError):
        SymbolF(0.0)
    with pytest.raises(ValueError):
        SymbolF(-1.0)


def test_validate_params_classification():
    assert validate_params(ModelParams(1.8, 0.0, 1.0)) == "strictly-dissipative"
    # threshold = alpha|l1| / (2 sqrt(alpha+1)); for alpha=1, l1=4: 4/(2 sqrt 2) = sqrt 2
    thr = math.sqrt(2.0)
    assert validate_params(ModelParams(1.0, 4.0, thr + 1e-12)) == "strictly-dissipative"
    assert validate_params(ModelParams(1.0, 4.0, thr - 1e-6)) == "dissipative-non-large"
    assert validate_params(ModelParams(1.8, 0.0, 0.0)) == "invalid"
    assert validate_params(ModelParams(1.8, 0.0, -1.0)) == "invalid"
    assert validate_params(ModelParams(2.0, 0.0, 1.0)) == "invalid"
    assert validate_params(ModelParams(0.0, 0.0, 1.0)) == "invalid"


def test_grid_layout():
    g = Grid1D(8, 4.0)
    assert g.dx == 1.0
    assert g.x[0] == -4.0 and g.x[-1] == 3.0
    # FFT wavenumber layout: 0, dk, 2dk, ..., -dk
    assert g.k[0] == 0.0
    assert np.isclose(g.k[1], math.pi / 4.0)
    assert np.isclose(g.k[-1], -math.pi / 4.0)
    with pytest.raises(ValueError):
        Grid1D(12, 4.0)  # not a power of two
    with pytest.raises(ValueError):
        Grid1D(8, 0.0)


def test_field_rejects_nonfinite():
    g = Grid1D(8, 4.0)
    vals = np.ones(8, dtype=complex)
    vals[3] = np.nan
    with pytest.raises(FloatingPointError):
        Field(g, 0.0, vals)


def test_norms_against_loop_oracle():
    g = Grid1D(16, 2.0)
    rng = np.random.default_rng(7)
    vals = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    f = Field(g, 0.0, vals)
    l2, linf, l4 = norms(f, p=4)
    # plain-Python Riemann sums
    s2 = sum(abs(v) ** 2 for v in vals) * g.dx
    s4 = sum(abs(v) ** 4 for v in vals) * g.dx
    assert abs(l2 - math.sqrt(s2)) < 1e-12
    assert abs(l4 - s4 ** 0.25) < 1e-12
    assert math.isclose(linf, max(abs(v) for v in vals), rel_tol=1e-14)
    assert abs(weighted_l2(f) - math.sqrt(sum(abs(v * x) ** 2 for v, x in zip(vals, g.x)) * g.dx)) < 1e-12


def test_gaussian_norms_closed_form():
    # ||A e^{-x^2/(2w^2)}||_2^2 = A^2 w sqrt(pi) (box wide enough that the
    # periodic truncation is negligible)
    g = Grid1D(2**12, 40.0)
    A, w = 2.0, 1.5
    f = make_initial("gaussian", {"amplitude": A, "width": w}, g)
    l2, linf = norms(f)
    assert abs(l2**2 - A**2 * w * math.sqrt(math.pi)) < 1e-10
    assert abs(linf - A) < 1e-14


def test_make_initial_kinds():
    g = Grid1D(256, 20.0)
    two = make_initial("two-bump", {"amplitude": 1.0, "width": 1.0, "separation": 8.0}, g)
    # even profile: u(-x_j) = u(x_j) for the paired interior nodes
    assert np.allclose(two.values[1:], two.values[1:][::-1], atol=1e-14)
    assert np.isclose(np.abs(two.values).max(), np.abs(two.values[np.argmin(np.abs(g.x - 4.0))]), rtol=1e-6)
    sup = make_initial("supergaussian", {"amplitude": 1.0, "width": 2.0, "power": 3}, g)
    assert np.isclose(np.abs(sup.values).max(), 1.0)
    with pytest.raises(ValueError):
        make_initial("unknown", {}, g)


def test_ic_file_round_trip(tmp_path):
    g = Grid1D(64, 8.0)
    f = make_initial("gaussian", {"amplitude": 1.0, "width": 1.0, "chirp": 0.3}, g)
    path = str(tmp_path / "ic.txt")
    save_ic_file(path, f)
    back = load_ic_file(path)
    assert back.grid == g
    assert back.t == f.t
    assert np.allclose(back.values, f.values, atol=1e-15)
    # file kind goes through make_initial with grid verification
    again = make_initial("file", {"path": path}, g)
    assert np.allclose(again.values, f.values)
    with pytest.raises(ValueError):
        make_initial("file", {"path": path}, Grid1D(128, 8.0))


def test_ic_file_rejects_garbage(tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text("not an ic file\n1 2\n")
    with pytest.raises(ValueError):
        load_ic_file(str(path))
