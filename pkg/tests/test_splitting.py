import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opengap.classical import kicked_baker_system, linear_chart_system
from opengap.errors import NumericalError
from opengap.splitting import (
    BunchingError,
    CovectorField,
    FrameField,
    GraphTransform,
    Grid,
    SlopeField,
    baker_setup,
    bunching_exponent,
    canonical_slope,
    dt_dlambda,
    export_fields_csv,
    holder_modulus,
    kappa_eta,
    linear_chart_setup,
    t_map,
    trapped_cutoff,
)


@pytest.fixture(scope="module")
def chart():
    return linear_chart_setup(n=129)


@pytest.fixture(scope="module")
def kicked():
    T = baker_setup(kicked_baker_system(kick=0.05), n=128)
    lam, report = T.solve(tol=1e-12)
    alpha, dreport = T.solve_derivative(lam)
    return T, lam, report, alpha, dreport


@pytest.mark.parametrize("order", [2, 4, 6])
def test_grid_gradient_is_exact_on_low_degree_polynomials(order):
    g = Grid.nodes(-1, 1, 41)
    X, XI = g.mesh()
    f = X**2 * XI + 3 * XI**2 - X if order == 2 else X**3 * XI**2 - 2 * XI**4 + X
    if order == 2:
        exact = np.stack([2 * X * XI - 1, X**2 + 6 * XI], axis=-1)
    else:
        exact = np.stack([3 * X**2 * XI**2 + 1, 2 * X**3 * XI - 8 * XI**3], axis=-1)
    k = order // 2
    err = np.abs(g.gradient(f, order=order) - exact)[k:-k, k:-k]
    assert np.max(err) < 1e-9
    with pytest.raises(ValueError):
        g.gradient(f, order=3)


def test_grid_interpolation_reproduces_nodes_and_cells():
    g = Grid.cells(0, 1, 16, 0, 2, 8)
    assert g.shape == (16, 8) and g.hx == pytest.approx(1 / 16) and g.hxi == pytest.approx(0.25)
    X, XI = g.mesh()
    f = np.sin(X) * XI
    gx, gxi = g.flat()
    assert np.allclose(g.interpolate(f, gx, gxi), f.ravel())


@settings(max_examples=60, deadline=None)
@given(st.floats(1.5, 4), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(0.1, 0.6), st.floats(-1, 1))
def test_t_map_derivative(a, b, c, d, lam):
    h = 1e-6
    fd = (t_map(a, b, c, d, lam + h) - t_map(a, b, c, d, lam - h)) / (2 * h)
    assert dt_dlambda(a, b, c, d, lam) == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_kappa_eta_is_a_contraction_bound():
    etas = np.linspace(1e-3, 0.3, 50)
    k = np.array([kappa_eta(e) for e in etas])
    assert np.all((k > 0) & (k < 1)) and np.all(np.diff(k) < 0)
    assert kappa_eta(0.0) == 1.0


def test_frames_reject_parallel_vectors():
    with pytest.raises(Exception, match="parallel"):
        FrameField.constant((1, 1), (2, 2))
    const = FrameField.from_samples([0, 1], [0, 1], [[1, 0], [1, 0]], [[0, 1], [0, 1]], 0.1)
    assert const.label.endswith("constant")
    assert const.matrix(np.zeros(3), np.zeros(3)).shape == (3, 2, 2)


def test_axis_frames_violate_bunching_on_the_chart():
    system = linear_chart_system([[2, 1], [1, 1]], 1.0, epsilon0=1 / 6)
    grid = Grid.nodes(-1, 1, 33)
    point = np.array([[0.0, 0.0]])
    with pytest.raises(BunchingError):
        GraphTransform(system, FrameField.constant((1, 0), (0, 1)), grid, trapped_cutoff(point, point, 1 / 6))


def test_unstable_fixed_point_on_chart(chart):
    _, T = chart
    lam, report = T.solve(tol=1e-13, max_iter=60)
    assert report.converged and report.iterations <= 60
    l0 = float(T.grid.interpolate(lam.values, [0.0], [0.0])[0])
    assert canonical_slope(T.frames, l0, 0, 0) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-10)
    assert T.invariance_defect(lam) < 1e-10
    assert json.loads(report.to_json())["max_factor"] <= report.kappa + report.extra["slack"]


def test_stable_fixed_point_on_chart():
    _, T = linear_chart_setup(n=129, inverse=True)
    lam, _ = T.solve(tol=1e-13)
    l0 = float(T.grid.interpolate(lam.values, [0.0], [0.0])[0])
    V = T.frames.matrix(np.zeros(1), np.zeros(1))[0]
    w = V[:, 1] + l0 * V[:, 0]
    assert w[1] / w[0] == pytest.approx(-(1 + math.sqrt(5)) / 2, abs=1e-10)


def test_fiber_identity_converges_at_second_order():
    defects = []
    for n in (129, 257):
        _, T = linear_chart_setup(n=n)
        X, XI = T.grid.mesh()
        defects.append(T.fiber_identity_defect(0.3 * np.sin(X + 2 * XI), order=6))
    assert defects[1] <= defects[0] / 4


def test_derivative_fixed_point_on_chart(chart):
    _, T = chart
    lam, _ = T.solve(tol=1e-13)
    alpha, rep = T.solve_derivative(lam)
    assert rep.converged
    assert rep.extra["nu1"] < 1
    assert alpha.sup_norm() <= alpha.bound
    assert 0 < bunching_exponent(T) <= 1


def test_holder_modulus_of_a_linear_field():
    g = Grid.nodes(0, 1, 11)
    X, XI = g.mesh()
    field = CovectorField(np.stack([3 * X, np.zeros_like(X)], axis=-1), g)
    mask = np.ones(g.shape, dtype=bool)
    assert holder_modulus(field, mask, 1.0) == pytest.approx(3.0)
    assert holder_modulus(field, mask, 0.5) == pytest.approx(3.0 * 0.1**0.5)


def test_unkicked_baker_slope_vanishes():
    from opengap.classical import open_baker_system

    T = baker_setup(open_baker_system(), n=81)
    lam, report = T.solve(tol=1e-14)
    assert np.max(np.abs(lam.values)) == 0.0
    assert report.iterations == 1


def test_kicked_baker_converges_within_bound(kicked):
    T, lam, report, _, _ = kicked
    assert report.converged
    assert report.extra["max_factor"] <= report.kappa + 0.02
    assert T.invariance_defect(lam) < 1e-10


def test_kicked_baker_derivative_matches_differences(kicked):
    T, lam, _, alpha, dreport = kicked
    assert dreport.converged
    fd = T.grid.gradient(lam.values, order=2)
    inner = (T.chi >= 1)
    inner[:2] = inner[-2:] = False
    inner[:, :2] = inner[:, -2:] = False
    err = np.max(np.linalg.norm(alpha.values - fd, axis=-1)[inner])
    assert err <= 5 * T.grid.spacing


def test_kicked_baker_stable_slope_is_zero():
    T = baker_setup(kicked_baker_system(kick=0.05), n=64, inverse=True)
    lam, _ = T.solve(tol=1e-13)
    assert np.max(np.abs(lam.values)) < 1e-12


def test_slope_field_guard_and_export(chart, tmp_path):
    _, T = chart
    with pytest.raises(NumericalError):
        SlopeField(np.full(T.grid.shape, 1.5), T.chi, T.grid)
    lam, _ = T.solve(tol=1e-10)
    path = tmp_path / "fields.csv"
    export_fields_csv(path, T.grid, lam)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,xi,lambda" and len(lines) == 1 + T.grid.shape[0] * T.grid.shape[1]
