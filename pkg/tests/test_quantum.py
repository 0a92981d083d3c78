import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opengap.errors import ConfigurationError, NumericalError
from opengap.quantum import (
    DenseOperator,
    FourierFFT,
    GridSpec,
    coherent_state,
    decay_power,
    fit_loglog_slope,
    leading_eigenvalues,
    model_open_map,
    open_baker_operator,
    power_norm,
    projector,
    quantize_left,
    scaling_operator,
    semiclassical_fourier,
    spectral_report,
    torus_fourier,
)


def test_grid_rejects_non_unitary_box():
    with pytest.raises(ConfigurationError, match="non-unitary"):
        GridSpec("interval", 64, 1 / 64, 4.0, 4.0)
    g = GridSpec.interval(1 / 64)
    assert g.X * g.Xi == pytest.approx(math.pi * g.h * g.N / 2)
    assert g.dx * g.dxi / g.h == pytest.approx(2 * math.pi / g.N)
    with pytest.raises(ConfigurationError):
        GridSpec.torus(1)


def test_fourier_unitary_and_fft_agree():
    g = GridSpec.interval(2.0**-7)
    F = semiclassical_fourier(g)
    assert F.unitary and F.unitarity_defect() < 1e-12
    u = np.random.default_rng(1).normal(size=g.N) + 1j * np.random.default_rng(2).normal(size=g.N)
    fft = FourierFFT(g)
    assert np.allclose(fft.forward(u), F.entries @ u, atol=1e-12)
    assert np.allclose(fft.inverse(F.entries @ u), u, atol=1e-12)
    t = GridSpec.torus(32)
    assert np.allclose(FourierFFT(t).forward(u[:32]), torus_fourier(32) @ u[:32])


def test_gaussian_is_its_own_transform():
    g = GridSpec.interval(2.0**-8)
    u = coherent_state(g)
    v = FourierFFT(g).forward(u)
    # on the symmetric grid the centred Gaussian is reproduced up to the node phase
    assert np.abs(np.abs(v) - np.abs(u)).max() < 1e-12


def test_left_quantization_of_constants_and_multipliers():
    g = GridSpec.interval(1 / 64)
    # symbols that do not vanish at the box edge are flagged as aliasing risks
    with pytest.warns(UserWarning, match="aliasing"):
        identity = quantize_left(lambda x, xi: 1.0 + 0 * x, g).entries
    assert np.allclose(identity, np.eye(g.N), atol=1e-12)
    with pytest.warns(UserWarning, match="aliasing"):
        K = quantize_left(lambda x, xi: np.cos(x) + 0 * xi, g).entries
    assert np.allclose(K, np.diag(np.cos(g.x)), atol=1e-12)


def test_scaling_operator_decimates_exactly():
    g = GridSpec.interval(1 / 64)
    U = scaling_operator(g).entries
    v = np.exp(-(g.x**2))
    inside = np.abs(2 * g.x) < g.X
    assert np.allclose((U @ v)[inside], math.sqrt(2) * np.exp(-4 * g.x[inside] ** 2))
    Ua = scaling_operator(g, antialias=True).entries
    assert np.linalg.norm(Ua, 2) == pytest.approx(1.0, abs=1e-10)


def test_model_map_dense_matches_matrix_free():
    M = model_open_map(2.0**-7)
    D = M.dense()
    u = np.random.default_rng(0).normal(size=M.N) + 0j
    assert np.allclose(D.entries @ u, M.matvec(u))
    assert np.allclose(D.entries.conj().T @ u, M.rmatvec(u))
    assert power_norm(M, 5) == pytest.approx(power_norm(D, 5), rel=1e-8)
    ev = np.sort(np.abs(leading_eigenvalues(M, 4)))[::-1]
    assert ev[0] == pytest.approx(np.max(np.abs(np.linalg.eigvals(D.entries))), rel=1e-8)


def test_model_map_matches_frozen_values(frozen):
    for e, ref in frozen["model"].items():
        M = model_open_map(2.0 ** -int(e))
        rep = spectral_report(M.dense(), ref["power"], powers=[1, ref["power"]])
        assert rep.spectral_radius == pytest.approx(ref["spectral_radius"], abs=1e-10)
        assert dict(rep.power_norms)[ref["power"]] == pytest.approx(ref["power_norm"], rel=1e-9)
        assert rep.top_singular == pytest.approx(ref["norm"], abs=1e-10)


def test_model_needs_even_grid():
    with pytest.raises(ConfigurationError):
        model_open_map(1 / 64, N=63)


def test_decay_power_formula():
    assert decay_power(2.0**-8) == 13
    assert decay_power(2.0**-14) == 2 * 11 + 1


def test_dense_operator_save_load_roundtrip(tmp_path):
    B = open_baker_operator(27)
    path = tmp_path / "baker.bin"
    B.save(path)
    back = DenseOperator.load(path)
    assert back.grid.kind == "torus" and back.N == 27
    assert np.array_equal(back.entries, B.entries)
    assert path.stat().st_size == 32 + 16 * 27 * 27


def test_open_baker_checks():
    with pytest.raises(ConfigurationError):
        open_baker_operator(28)
    closed = open_baker_operator(27, 3, (0, 1, 2))
    assert closed.unitary and closed.unitarity_defect() < 1e-12
    assert closed.power(3).unitarity_defect() < 1e-11


def test_open_baker_matches_frozen_spectrum(frozen):
    for k, ref in frozen["baker_spectral_radius"].items():
        if int(k) <= 5:
            rep = spectral_report(open_baker_operator(3 ** int(k)), 2)
            assert rep.spectral_radius == pytest.approx(ref, abs=1e-10)


def test_projectors_are_orthogonal():
    g = GridSpec.interval(1 / 32)
    idx = np.flatnonzero(np.abs(g.xi) < 1)
    P = projector(g, idx, "momentum").entries
    assert np.allclose(P @ P, P, atol=1e-12) and np.allclose(P, P.conj().T, atol=1e-12)
    Q = projector(g, np.abs(g.x) < 0.5, "position").entries
    assert np.allclose(np.diag(Q), (np.abs(g.x) < 0.5).astype(float))
    with pytest.raises(ConfigurationError):
        projector(g, idx, "energy")


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))
def test_power_norms_are_submultiplicative(n, p, q, seed):
    rng = np.random.default_rng(seed)
    A = DenseOperator(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), GridSpec.torus(n))
    assert power_norm(A, p + q) <= power_norm(A, p) * power_norm(A, q) * (1 + 1e-10)


def test_loglog_slope_and_report_errors():
    hs = 2.0 ** -np.arange(4, 9)
    assert fit_loglog_slope(hs, 3 * hs**0.25) == pytest.approx(0.25)
    with pytest.raises(ConfigurationError):
        spectral_report(open_baker_operator(9), 0)


def test_non_unitary_fourier_is_detected(monkeypatch):
    import opengap.quantum as q

    monkeypatch.setattr(q, "UNITARY_TOL", -1.0)
    with pytest.raises(NumericalError):
        q.semiclassical_fourier(GridSpec.interval(1 / 16))
