import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opengap.classical import kicked_baker_system, open_baker_system
from opengap.errors import ConfigurationError
from opengap.fup import (
    FractalSetSpec,
    FupExperiment,
    ScaleGateError,
    build_omega_sets,
    cantor_experiment,
    cantor_indices,
    fatten_indices,
    fit_fup_exponent,
    fup_norm,
    scale_gate,
    volume_bound,
    volume_chain_bound,
    word_strips,
)
from opengap.quantum import torus_fourier


def test_cantor_indices_digits():
    idx = cantor_indices(3, (0, 2), 2)
    assert idx.tolist() == [0, 2, 6, 8]
    with pytest.raises(ConfigurationError):
        cantor_indices(3, (0, 3), 2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 80), min_size=1, max_size=20), st.integers(0, 5), st.integers(0, 5))
def test_fattening_is_monotone(indices, c1, c2):
    small, large = sorted((c1, c2))
    a = set(fatten_indices(indices, small, 81).tolist())
    b = set(fatten_indices(indices, large, 81).tolist())
    assert set(indices) <= a <= b
    assert len(b) <= min(81, len(set(indices)) * (2 * large + 1))


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(0, 63), min_size=1), st.sets(st.integers(0, 63), min_size=1))
def test_norm_respects_volume_bounds(rows, cols):
    rows, cols = sorted(rows), sorted(cols)
    v = fup_norm(64, rows, cols)
    assert v <= volume_bound(64, rows, cols) + 1e-12
    assert v <= volume_chain_bound(64, rows, cols) + 1e-12
    # every entry of the unitary DFT has modulus N^{-1/2}
    assert v >= 1 / 8 - 1e-12


def test_norm_edge_cases():
    assert fup_norm(16, range(16), range(16)) == pytest.approx(1.0)
    assert fup_norm(16, [3], [5]) == pytest.approx(0.25)
    assert fup_norm(16, [], [1, 2]) == 0.0
    F = torus_fourier(27)
    C = FractalSetSpec.cantor(3, (0, 2), 3)
    assert fup_norm(27, C, C, fourier=F) == pytest.approx(fup_norm(27, C, C))


def test_cantor_norms_match_frozen(frozen):
    for k, ref in frozen["cantor_fup_norm"].items():
        C = FractalSetSpec.cantor(3, (0, 2), int(k))
        assert fup_norm(C.N, C, C) == pytest.approx(ref, abs=1e-10)


def test_fit_exponent_and_band():
    exp = cantor_experiment(3, (0, 2), range(3, 7))
    beta, (lo, hi) = fit_fup_exponent(exp)
    assert lo <= beta <= hi and beta > 0
    assert [r["N"] for r in exp.rows()] == [27, 81, 243, 729]
    short = FupExperiment([9, 27, 81], [], [], [0.9, 0.8, 0.7])
    with pytest.raises(ConfigurationError):
        fit_fup_exponent(short)


def test_set_constructors():
    s = FractalSetSpec.from_intervals(10, [(0.0, 0.2), (0.75, 0.8)])
    assert s.realized.tolist() == [0, 1, 2, 8]
    f = s.fattened(1)
    assert f.realized.tolist() == [0, 1, 2, 3, 7, 8, 9]
    with pytest.raises(ConfigurationError):
        FractalSetSpec.explicit(4, [5])
    with pytest.raises(ConfigurationError):
        FractalSetSpec("explicit", 4)


def test_scale_gate_sides():
    assert scale_gate(7 / 8, 1 / 4) == pytest.approx(1 / 8)
    with pytest.raises(ScaleGateError) as low:
        scale_gate(0.5, 0.4)
    assert low.value.side == "lower"
    with pytest.raises(ScaleGateError) as high:
        scale_gate(0.9, 0.9, 0.6, 0.5)
    assert high.value.side == "upper"
    with pytest.raises(ConfigurationError):
        scale_gate(0.5, 0.9, 0.6, 0.1)


def test_word_strips_and_omega_sets(baker):
    x_iv, xi_iv = word_strips(baker, (0, 1))
    # digits (0, 2): x in [2/9, 3/9), xi cylinder of reversed digits (2, 0)
    assert x_iv == pytest.approx((2 / 9, 3 / 9)) and xi_iv == pytest.approx((6 / 9, 7 / 9))
    minus, plus = build_omega_sets(baker, [(0, 1), (0, 0)], h=1e-3, tau=0.9, delta0=0.25)
    assert plus.shape == (2, 2) and minus.shape == (1, 2)
    assert plus[0, 0] == pytest.approx(-(1e-3) ** 0.9)
    with pytest.raises(ConfigurationError, match="cloud condition"):
        build_omega_sets(baker, [(0, 1), (1, 0)], h=1e-3, tau=0.9, delta0=0.25, frak_b=0.5)
    empty = build_omega_sets(baker, [], 1e-3, 0.9, 0.25)
    assert empty[0].shape == (0, 2)


def test_word_strips_need_unkicked_baker():
    with pytest.raises(ConfigurationError):
        word_strips(kicked_baker_system(), (0,))
    assert open_baker_system(3, (0, 2), letter_depth=2).n_letters == 4
    x_iv, xi_iv = word_strips(open_baker_system(3, (0, 2), letter_depth=2), (3,))
    assert x_iv == pytest.approx((8 / 9, 1.0)) and xi_iv == pytest.approx((8 / 9, 1.0))
