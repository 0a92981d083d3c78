import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from opengap.profiles import interval_cutoff, plateau, plateau_derivative, smoothstep, smoothstep_derivative


def test_smoothstep_limits_and_symmetry():
    t = np.linspace(-1, 2, 301)
    s = smoothstep(t)
    assert np.all(s[t <= 0] == 0) and np.all(s[t >= 1] == 1)
    assert np.all(np.diff(s) >= 0)
    assert np.allclose(s + smoothstep(1 - t), 1.0)


def test_smoothstep_derivative_matches_differences():
    t = np.linspace(0.05, 0.95, 50)
    h = 1e-6
    fd = (smoothstep(t + h) - smoothstep(t - h)) / (2 * h)
    assert np.allclose(smoothstep_derivative(t), fd, atol=1e-7)


def test_plateau_support_and_derivative():
    u = np.linspace(-1.2, 1.2, 241)
    p = plateau(u, 0.5, 0.7)
    assert np.all(p[np.abs(u) <= 0.5] == 1) and np.all(p[np.abs(u) >= 0.7] == 0)
    h = 1e-6
    fd = (plateau(u + h, 0.5, 0.7) - plateau(u - h, 0.5, 0.7)) / (2 * h)
    assert np.allclose(plateau_derivative(u, 0.5, 0.7), fd, atol=1e-5)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-1, 1), st.floats(0, 0.3)), min_size=1, max_size=4),
    st.floats(0.01, 0.2),
)
def test_interval_cutoff_bounds(raw, eps):
    intervals = np.array([(a, a + w) for a, w in raw])
    x = np.linspace(-2, 2, 2001)
    value, _ = interval_cutoff(x, intervals, eps)
    dist = np.min(np.maximum.reduce([intervals[None, :, 0] - x[:, None],
                                     x[:, None] - intervals[None, :, 1],
                                     np.zeros((x.size, len(intervals)))]), axis=1)
    assert np.all((value >= -1e-12) & (value <= 1 + 1e-12))
    assert np.all(np.abs(value[dist <= eps] - 1) < 1e-9)
    assert np.all(np.abs(value[dist >= 2 * eps]) < 1e-9)


def test_interval_cutoff_derivative():
    x = np.linspace(-0.5, 1.5, 400)
    v, dv = interval_cutoff(x, [(0.1, 0.3), (0.6, 0.9)], 0.05)
    h = 1e-6
    fd = (interval_cutoff(x + h, [(0.1, 0.3), (0.6, 0.9)], 0.05)[0]
          - interval_cutoff(x - h, [(0.1, 0.3), (0.6, 0.9)], 0.05)[0]) / (2 * h)
    assert np.allclose(dv, fd, atol=1e-4 * np.max(np.abs(fd)))
