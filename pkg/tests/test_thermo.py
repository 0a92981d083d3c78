import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opengap.classical import open_baker_system
from opengap.errors import ConfigurationError
from opengap.thermo import (
    NoGapError,
    PressureEstimator,
    aitken,
    bowen_root,
    box_counts,
    box_dimension,
    cantor_intervals,
    check_porosity,
    dimension_from_porosity,
    fatten,
    merge_intervals,
    numerology,
    porosity_from_dimension,
    topological_entropy,
)


def test_baker_pressure_is_affine_in_s(baker):
    est = PressureEstimator(baker, 6)
    curve = est.curve([0.0, 0.5, 1.0])
    for k, s in enumerate(curve.s_values):
        expected = math.log(2) - s * math.log(3)
        assert curve.limit(k, "ratio") == pytest.approx(expected, abs=1e-9)
        assert curve.limit(k, "raw") == pytest.approx(expected, abs=1e-9)
        assert curve.limit(k, "aitken") == pytest.approx(expected, abs=1e-9)
    assert len(list(curve.rows())) == 3 * 6
    with pytest.raises(ValueError):
        curve.limit(0, "median")


def test_topological_entropy(baker, three_disk):
    assert topological_entropy(baker) == pytest.approx(math.log(2))
    assert topological_entropy(three_disk) == pytest.approx(math.log(2))


def test_closed_baker_has_no_gap():
    with pytest.warns(UserWarning, match="closed system"):
        closed = open_baker_system(3, (0, 1, 2))
    with pytest.raises(NoGapError):
        bowen_root(closed, n_max=4)


def test_word_budget_is_enforced(three_disk):
    with pytest.raises(ConfigurationError, match="largest feasible"):
        PressureEstimator(three_disk, 30, budget=1000)


def test_aitken_geometric_sequence():
    seq = [1 + 0.5**n for n in range(1, 8)]
    assert aitken(seq) == pytest.approx(1.0, abs=1e-12)
    assert aitken([2.0, 3.0]) == 3.0


def test_merge_and_fatten():
    iv = merge_intervals([(0.5, 0.6), (0.0, 0.2), (0.15, 0.3)])
    assert iv.tolist() == [[0.0, 0.3], [0.5, 0.6]]
    assert fatten(iv, 0.1).tolist() == [[-0.1, 0.7]]


def test_box_counts_half_open_cells():
    iv = cantor_intervals(3, (0, 2), 4)
    counts = box_counts(iv, [3.0**-k for k in range(5)])
    assert counts.tolist() == [1, 2, 4, 8, 16]


def test_box_dimension_of_cantor():
    rep = box_dimension(cantor_intervals(3, (0, 2), 12), 3.0**-11, 0.5, base=3)
    assert rep.delta == pytest.approx(math.log(2) / math.log(3), abs=5e-3)
    eps = np.asarray(rep.details["eps"])
    assert np.all(np.asarray(rep.details["counts"]) <= rep.constant_C * eps**-rep.delta * (1 + 1e-12))


def test_porosity_refutation_reports_a_witness():
    iv = cantor_intervals(3, (0, 2), 8)
    cert = check_porosity(iv, 0.5, 3.0**-6, 1.0, scale_ratio=3)
    assert not cert.certified
    (a, b), free, scale = cert.failure
    assert free < 0.5 * scale and b - a == pytest.approx(scale)


def test_porosity_rejects_bad_arguments():
    iv = cantor_intervals(3, (0, 2), 4)
    with pytest.raises(ValueError):
        check_porosity(iv, 1.5, 0.01, 1.0)
    with pytest.raises(ValueError):
        check_porosity(iv, 0.3, 1.0, 0.1)
    with pytest.raises(TypeError):
        check_porosity(lambda x: x, 0.3, 0.01, 1.0)


def test_porosity_dimension_formulas():
    C, delta = dimension_from_porosity(0.5, 1.0, 1.0)
    assert delta == pytest.approx(math.log(3) / math.log(4))
    assert C > 0
    nu = porosity_from_dimension(1.0, 0.5, 0.5)
    assert 0 < nu <= 1 / 3
    with pytest.raises(ValueError):
        porosity_from_dimension(1.0, 1.0, 0.5)


def test_numerology_reference_values():
    prof = numerology(math.log(2), math.log(2), 1.0)
    assert (prof.frak_b, prof.delta0, prof.tau, prof.delta2) == pytest.approx((0.5, 0.25, 0.875, 0.25))
    assert prof.N1(2.0**-10) == 10 and prof.N0(2.0**-10) == 3
    assert all(prof.checks.values())
    with pytest.raises(ValueError):
        numerology(2.0, 1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 10), st.floats(1e-3, 1), st.floats(1e-4, 1e3))
def test_numerology_constraints_hold(lam1, ratio, beta):
    prof = numerology(ratio * lam1, lam1, beta)
    assert prof.frak_b + prof.delta0 < 1
    assert prof.frak_b < prof.tau < 1
    assert prof.delta2 + prof.tau > 1
