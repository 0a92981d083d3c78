import math

import numpy as np
import pytest

from opengap.classical import (
    DiskSystem,
    PhasePoint,
    WordJacobianCalculator,
    baker_trace,
    disk_trace,
    jacobian_comparability,
    linear_model_system,
    local_word_jacobian,
    multiplicativity_ratio,
    two_disk_system,
    unstable_jacobian,
    word_neighborhood_contains,
)
from opengap.errors import ConfigurationError


def test_two_disk_bounce_multiplier(frozen):
    d = two_disk_system()
    orb = d.periodic_orbit((0, 1))
    assert orb.unstable_jacobian(0, 1) == pytest.approx(frozen["two_disk_multiplier"], rel=1e-9)
    assert abs(np.linalg.det(orb.monodromy())) == pytest.approx(1.0, abs=1e-9)


def test_three_disk_symplectic_and_eclipse(three_disk):
    report = three_disk.check_invariants(200, rng=0)
    assert max(v["det_defect"] for v in report.values()) < 1e-8
    assert three_disk.metadata["non_eclipse"]
    with pytest.raises(ConfigurationError):
        DiskSystem([(0, 0), (3, 0), (6, 0)], [1, 1, 1])
    with pytest.raises(ConfigurationError):
        DiskSystem([(0, 0), (1.5, 0)], [1, 1])


def test_three_disk_orbit_reflects_between_disks(three_disk):
    orb = three_disk.periodic_orbit((0, 1, 2))
    p = orb.points[0]
    back = three_disk.orbit(p, 3)[-1]
    assert back.block == p.block
    assert back.x == pytest.approx(p.x, abs=1e-8) and back.xi == pytest.approx(p.xi, abs=1e-8)


def test_linear_jacobians():
    m = linear_model_system()
    assert unstable_jacobian(m, PhasePoint(0, 0), 5) == pytest.approx(32)
    pair = local_word_jacobian(m, (0, 0, 0))
    assert pair.j_minus == pytest.approx(8) and pair.j_plus == pytest.approx(8)


def test_word_neighborhoods(baker):
    assert word_neighborhood_contains(baker, (0, 1), "-", PhasePoint(0.25, 0.5))
    assert not word_neighborhood_contains(baker, (0, 1), "-", PhasePoint(0.7, 0.5))
    assert word_neighborhood_contains(baker, (1,), "+", PhasePoint(0.5, 0.8))
    with pytest.raises(ValueError):
        word_neighborhood_contains(baker, (0,), "*", PhasePoint(0.1, 0.1))


def test_baker_word_jacobians_exact(baker):
    calc = WordJacobianCalculator(baker)
    for w in [(0,), (0, 1), (1, 1, 0, 1)]:
        pair = calc(w)
        assert pair.j_minus == pytest.approx(3 ** len(w))
        assert pair.j_plus == pytest.approx(3 ** len(w))
    assert jacobian_comparability(baker, (0, 1, 1), calc) == pytest.approx(1.0)
    assert multiplicativity_ratio(baker, (0, 1), (1,), calc) == pytest.approx(1.0)


def test_disk_comparability_small_words(three_disk):
    calc = WordJacobianCalculator(three_disk)
    ratios = [jacobian_comparability(three_disk, w, calc) for w in three_disk.admissible_words(4)]
    assert 1.0 <= max(ratios) <= 10


def test_baker_trace_structure(baker):
    trace = baker_trace(baker, 5)
    assert trace.counts[-1] == 32
    assert np.allclose(trace.lengths, 3.0**-5)


def test_disk_trace_counts(three_disk):
    trace = disk_trace(three_disk, 4)
    assert trace.counts == [2, 4, 8, 16]
    assert np.all(np.diff(trace.intervals[:, 0]) > 0)
    assert math.isfinite(trace.lengths.sum())
