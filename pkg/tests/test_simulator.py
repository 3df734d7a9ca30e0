import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherekl import kernel as Kn
from spherekl import simulator as M
from spherekl import specfun as F
from spherekl import spectra as S


def unit_product():
    sp, _ = S.normalize_unit_variance(S.family_polyproduct(1.0, 3.0, 2.0))
    return sp


# temporal basis -------------------------------------------------------------------


@given(t=st.floats(0.0, 3.0))
def test_paper_basis_k0(t):
    assert M.temporal_basis_eval(0, t, 3.0) == (1.0, 0.0)


def test_paper_basis_k1_at_horizon():
    c, s = M.temporal_basis_eval(1, 2.0, 2.0)
    assert c == pytest.approx(0.0, abs=1e-15) and s == pytest.approx(1.0)


@pytest.mark.parametrize("k", [0, 1, 4, 9])
def test_orthonormal_basis_unit_norm(k):
    T = 2.5
    rule = F.quadrature("gauss-legendre", 80)
    t = 0.5 * T * (rule.nodes + 1.0)
    c, s = M.temporal_basis_eval(k, t, T, "orthonormal")
    assert 0.5 * T * float(rule.weights @ (c * c)) == pytest.approx(1.0, abs=1e-10)
    if k:
        assert 0.5 * T * float(rule.weights @ (s * s)) == pytest.approx(1.0, abs=1e-10)
        assert abs(0.5 * T * float(rule.weights @ (c * s))) <= 1e-10


def test_temporal_basis_rejects_out_of_range():
    with pytest.raises(ValueError):
        M.temporal_basis_eval(1, 1.5, 1.0)
    with pytest.raises(ValueError):
        M.temporal_basis_eval(-1, 0.5, 1.0)
    with pytest.raises(ValueError):
        M.temporal_basis_eval(1, 0.5, 1.0, "chebyshev")


# coefficient draws -------------------------------------------------------------------


def test_draw_is_deterministic():
    a = M.draw_coefficients(None, 6, 4, 123)
    b = M.draw_coefficients(None, 6, 4, 123)
    for name in ("A1", "A2", "B1", "B2"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.A1, M.draw_coefficients(None, 6, 4, 124).A1)


def test_draw_shapes_small():
    # j = 0: m = 0; j = 1: m = 0, 1 -> three cosine draws and one sine draw
    d = M.draw_coefficients(None, 1, 0, 5)
    assert d.A1.shape == (1, 3) and d.B1.shape == (1, 1)
    assert d.A2.shape == (0, 3) and d.B2.shape == (0, 1)


@pytest.mark.parametrize("J", [0, 1, 5, 20])
def test_packed_index_counts(J):
    cos = {M.cos_index(j, m) for j in range(J + 1) for m in range(j + 1)}
    sin = {M.sin_index(j, m) for j in range(1, J + 1) for m in range(1, j + 1)}
    assert cos == set(range(M.n_cos_orders(J)))
    assert sin == set(range(M.n_sin_orders(J)))


def test_draws_are_prefix_stable_in_J():
    small = M.draw_coefficients(None, 5, 3, 9)
    big = M.draw_coefficients(None, 11, 3, 9)
    assert np.array_equal(big.A1[:, : small.A1.shape[1]], small.A1)
    assert np.array_equal(big.B2[:, : small.B2.shape[1]], small.B2)
    assert big.value("A2", 2, 4, 3) == small.value("A2", 2, 4, 3)


def test_draw_moments():
    d = M.draw_coefficients(None, 60, 150, 2024)
    x = np.concatenate([d.A1.ravel(), d.A2.ravel(), d.B1.ravel(), d.B2.ravel()])
    assert x.size >= 1_000_000
    assert abs(x.mean()) <= 0.005 and abs(x.var() - 1.0) <= 0.005


def test_draw_rejects_bad_seed():
    with pytest.raises(ValueError):
        M.draw_coefficients(None, 2, 2, -1)
    with pytest.raises(ValueError):
        M.draw_coefficients(None, 2, 2, 2**64)


def test_draw_arrays_are_read_only():
    d = M.draw_coefficients(None, 2, 2, 1)
    with pytest.raises(ValueError):
        d.A1[0, 0] = 1.0


# synthesis ---------------------------------------------------------------------------------


def test_constant_mode_field():
    sp = S.explicit_spectrum([[1.0]])
    grid = M.SphereTimeGrid.fibonacci(50, [0.0, 0.3, 0.9], 1.0)
    d = M.draw_coefficients(sp, 0, 0, 77)
    v = M.synthesize(d, grid)
    assert np.max(np.abs(v - d.A1[0, 0])) <= 1e-12


def test_constant_mode_with_larger_truncation_is_spatially_constant():
    sp = S.explicit_spectrum([[1.0]])
    grid = M.SphereTimeGrid.fibonacci(40, [0.2], 1.0)
    v = M.synthesize(M.draw_coefficients(sp, 8, 3, 3), grid)
    assert np.ptp(v) <= 1e-12


def test_k0_field_is_constant_in_time():
    sp = unit_product()
    grid = M.SphereTimeGrid.fibonacci(30, [0.0, 0.5, 1.0], 1.0)
    v = M.synthesize(M.draw_coefficients(sp, 4, 0, 8), grid)
    assert np.max(np.abs(v - v[0])) == 0.0


def test_synthesis_matches_naive_oracle(naive):
    sp = unit_product()
    pts = [[0.3, 1.0], [2.0, 5.0], [1.2, 0.1]]
    grid = M.SphereTimeGrid.from_points(pts, [0.5, 1.7], 2.0)
    d = M.draw_coefficients(sp, 3, 3, 7)
    ref = np.array(naive(d, sp, grid.colatitudes, grid.longitudes, grid.times, 2.0))
    assert np.max(np.abs(M.synthesize(d, grid) - ref)) <= 1e-12


def test_harmonic_matrix_matches_sph_harm_real():
    colat = np.array([0.0, 0.4, 2.2, math.pi])
    lon = np.array([0.0, 1.1, 4.0, 3.0])
    Y = M.harmonic_matrix(6, colat, lon)
    for j in range(7):
        for m in range(-j, j + 1):
            assert np.allclose(Y[:, j * j + j + m], F.sph_harm_real(j, m, colat, lon), atol=1e-13)


@given(lam=st.floats(0.1, 10.0))
@settings(max_examples=10, deadline=None)
def test_synthesis_linear_in_amplitude(lam):
    sp = unit_product()
    grid = M.SphereTimeGrid.fibonacci(20, [0.1, 0.6], 1.0)
    d = M.draw_coefficients(sp, 5, 5, 4)
    base = M.synthesize(d, grid, spectrum=sp)
    scaled = M.synthesize(d, grid, spectrum=sp.scaled(lam * lam))
    assert np.allclose(scaled, lam * base, rtol=1e-13, atol=1e-14)


def test_threaded_synthesis_is_bitwise_serial():
    sp = unit_product()
    grid = M.SphereTimeGrid.fibonacci(3000, [0.25, 0.75], 1.0)
    d = M.draw_coefficients(sp, 20, 20, 11)
    assert np.array_equal(M.synthesize(d, grid, threads=1), M.synthesize(d, grid, threads=4))


def test_synthesizer_matches_synthesize():
    sp = unit_product()
    grid = M.SphereTimeGrid.fibonacci(25, [0.0, 0.4], 1.0)
    syn = M.Synthesizer(sp, grid, 6, 4)
    d = syn.draw(3)
    assert np.allclose(syn(d), M.synthesize(d, grid), atol=1e-14)


def test_hermite_spectrum_rejected_by_sampler():
    sp = S.explicit_spectrum([[1.0]], kind="hermite")
    grid = M.SphereTimeGrid.fibonacci(5, [0.0], 1.0)
    with pytest.raises(ValueError):
        M.synthesize(M.draw_coefficients(sp, 0, 0, 1), grid)


def test_pointwise_variance_monte_carlo():
    sp = unit_product()
    grid = M.SphereTimeGrid.from_points([[0.9, 2.0]], [0.4], 1.0)
    syn = M.Synthesizer(sp, grid, 10, 10)
    vals = np.array([syn(syn.draw(s))[0, 0] for s in range(4000)])
    target = Kn.kernel_eval(Kn.KernelModel.from_spectrum(sp, 10, 10), 0.0, 0.0)
    se = np.std(vals**2, ddof=1) / math.sqrt(vals.size)
    assert abs(np.mean(vals**2) - target) <= 3 * se


# simulate and grids --------------------------------------------------------------


def test_simulate_is_deterministic():
    sp = unit_product()
    grid = M.SphereTimeGrid.latlon(8, 12, [0.0, 1.0], 1.0)
    a = M.simulate(sp, grid, 10, 10, 5)
    b = M.simulate(sp, grid, 10, 10, 5)
    assert np.array_equal(a.values, b.values)
    assert a.provenance["seed"] == 5 and a.provenance["J"] == 10


def test_simulate_large_grid_records_duration():
    grid = M.SphereTimeGrid.fibonacci(16000, [0.5, 1.0], 1.0)
    real = M.simulate(unit_product(), grid, 50, 50, 1)
    assert real.values.shape == (2, 16000)
    assert real.provenance["duration_seconds"] > 0


def test_grid_constructors():
    g = M.SphereTimeGrid.latlon(4, 6, [0.0, 2.0])
    assert g.n_points == 24 and g.shape == (4, 6) and g.T == 2.0
    colat = np.unique(g.colatitudes)
    assert np.allclose(np.cos(colat)[::-1], F.quadrature("gauss-legendre", 4).nodes)
    e = M.SphereTimeGrid.latlon(3, 2, [0.0], 1.0, kind="equiangular")
    assert np.allclose(np.unique(e.colatitudes), [math.pi / 6, math.pi / 2, 5 * math.pi / 6])
    assert M.SphereTimeGrid.fibonacci(100, [0.0], 1.0).n_points == 100


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(colatitudes=[4.0], longitudes=[0.0], times=[0.0], T=1.0),
        dict(colatitudes=[1.0], longitudes=[7.0], times=[0.0], T=1.0),
        dict(colatitudes=[1.0], longitudes=[0.0], times=[2.0], T=1.0),
        dict(colatitudes=[1.0], longitudes=[0.0], times=[0.5, 0.2], T=1.0),
        dict(colatitudes=[1.0], longitudes=[0.0], times=[], T=1.0),
    ],
)
def test_grid_validation(kwargs):
    with pytest.raises(ValueError):
        M.SphereTimeGrid(**kwargs)


# export ------------------------------------------------------------------------------------


def test_csv_and_provenance(tmp_path):
    grid = M.SphereTimeGrid.latlon(3, 4, [0.0, 1.0], 1.0)
    real = M.simulate(unit_product(), grid, 5, 5, 42, convention="mean-field")
    M.write_csv(real, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "colatitude_rad,longitude_rad,time,value"
    assert len(lines) == 1 + 24
    last = [float(x) for x in lines[-1].split(",")]
    assert last[3] == real.values[1, -1]
    M.write_provenance(real, tmp_path / "r.txt")
    prov = (tmp_path / "r.txt").read_text()
    for key in ("seed = 42", "J = 5", "basis = paper", "convention = mean-field", "duration_seconds"):
        assert key in prov
    back, conv = S.from_text("\n".join(ln[len("spectrum."):] for ln in prov.splitlines() if ln.startswith("spectrum.")))
    assert back == real_spectrum(real) and conv == "mean-field"


def real_spectrum(real):
    return S.from_text(real.provenance["spectrum_text"])[0]


def test_binary_roundtrip(tmp_path):
    grid = M.SphereTimeGrid.latlon(3, 5, [0.0, 0.5, 1.0], 1.0)
    real = M.simulate(unit_product(), grid, 4, 3, 1)
    path = tmp_path / "r.bin"
    M.write_binary(real, path)
    raw = path.read_bytes()
    assert raw[:8] == b"SKLFIELD" and len(raw) == 64 + 8 * 45
    meta, values = M.read_binary(path)
    assert (meta["n_time"], meta["n_lat"], meta["n_lon"], meta["J"], meta["K"]) == (3, 3, 5, 4, 3)
    assert np.array_equal(values.reshape(3, 15), real.values)


def test_binary_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"NOTAFILE" + bytes(100))
    with pytest.raises(ValueError):
        M.read_binary(p)


def test_sampler_rejects_higher_spheres():
    sp = S.explicit_spectrum([[1.0, 1.0]], d=3)
    with pytest.raises(ValueError):
        M.draw_coefficients(sp, 1, 0, 0)
