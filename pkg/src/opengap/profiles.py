"""Smooth cutoff profiles built from ``exp(-1/t)``."""

from __future__ import annotations

import numpy as np


def _f(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _df(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def smoothstep(t):
    """``C^infinity`` step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    a = _f(t)
    b = _f(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def smoothstep_derivative(t):
    t = np.asarray(t, dtype=float)
    a, b = _f(t), _f(1.0 - t)
    da, db = _df(t), -_df(1.0 - t)
    return (da * (a + b) - a * (da + db)) / (a + b) ** 2


def plateau(u, inner=0.5, outer=1.0):
    """Even bump equal to 1 for ``|u| <= inner`` and 0 for ``|u| >= outer``."""
    u = np.abs(np.asarray(u, dtype=float))
    return smoothstep((outer - u) / (outer - inner))


def plateau_derivative(u, inner=0.5, outer=1.0):
    u = np.asarray(u, dtype=float)
    w = outer - inner
    return -np.sign(u) * smoothstep_derivative((outer - np.abs(u)) / w) / w


def interval_cutoff(x, intervals, eps):
    """Smooth function equal to 1 within ``eps`` of the intervals and 0 beyond ``2 eps``.

    It is the indicator of the ``1.5 eps`` neighbourhood convolved with a
    smooth kernel of half-width ``eps / 2``.  Returns ``(value, derivative)``.
    """
    x = np.asarray(x, dtype=float)
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    lo = iv[:, 0] - 1.5 * eps
    hi = iv[:, 1] + 1.5 * eps
    order = np.argsort(lo)
    lo, hi = lo[order], hi[order]
    merged = []
    for a, b in zip(lo, hi):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    r = 0.5 * eps
    val = np.zeros_like(x)
    der = np.zeros_like(x)
    for a, b in merged:
        ta = (x - (a - r)) / (2 * r)
        tb = (x - (b - r)) / (2 * r)
        val += smoothstep(ta) - smoothstep(tb)
        der += (smoothstep_derivative(ta) - smoothstep_derivative(tb)) / (2 * r)
    return np.clip(val, 0.0, 1.0), der
