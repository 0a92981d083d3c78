"""Cantor traces of the forward-trapped set along a transversal segment.

A segment transverse to the stable direction meets the forward-trapped set
in a Cantor set whose dimension is the unstable dimension of the trapped
set.  It is resolved here as a nested family of intervals, one interval per
forward itinerary, refined level by level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .systems import OpenMapSystem


@dataclass
class CantorTrace:
    """Intervals (in the segment parameter) of points surviving ``depth`` steps."""

    intervals: np.ndarray  # shape (k, 2)
    depth: int
    counts: list  # number of intervals per level

    @property
    def lengths(self):
        return self.intervals[:, 1] - self.intervals[:, 0]


def _codes(system, p0, direction, block, t, steps):
    """Piece index taken at each of ``steps`` forward steps (-1 after escape)."""
    x = p0[0] + t * direction[0]
    xi = p0[1] + t * direction[1]
    b = np.full(t.shape, block, dtype=int)
    out = np.full(t.shape + (steps,), -1, dtype=int)
    alive = np.ones(t.shape, dtype=bool)
    for k in range(steps):
        live = np.flatnonzero(alive)
        if live.size == 0:
            break
        nx, nxi, nb, idx = system.forward(x[live], xi[live], b[live])
        out[live, k] = idx
        alive[live[idx < 0]] = False
        x[live], xi[live], b[live] = nx, nxi, nb
    return out


def forward_trace(
    system: OpenMapSystem,
    p0,
    direction,
    t_range,
    depth: int,
    block: int = 0,
    samples: int = 96,
    bisections: int = 48,
) -> CantorTrace:
    """Intervals of ``t`` such that ``p0 + t * direction`` survives ``depth`` forward steps.

    Each interval at level ``m`` is sampled at ``samples`` interior points
    (plus its nudged endpoints); maximal runs with a constant next piece
    become children, with run boundaries located by bisection.
    """
    p0 = np.asarray(p0, dtype=float)
    direction = np.asarray(direction, dtype=float)
    intervals = np.array([list(t_range)], dtype=float)
    counts = []
    for level in range(1, depth + 1):
        steps = level
        w = intervals[:, 1] - intervals[:, 0]
        frac = np.concatenate([[1e-12], (np.arange(samples) + 0.5) / samples, [1 - 1e-12]])
        t = intervals[:, :1] + w[:, None] * frac[None, :]
        code = _codes(system, p0, direction, block, t.ravel(), steps)[:, -1].reshape(t.shape)
        # locate all sign changes between neighbouring samples
        change = code[:, 1:] != code[:, :-1]
        rows, cols = np.nonzero(change)
        lo = t[rows, cols].copy()
        hi = t[rows, cols + 1].copy()
        clo = code[rows, cols]
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            cm = _codes(system, p0, direction, block, mid, steps)[:, -1]
            left = cm == clo
            lo = np.where(left, mid, lo)
            hi = np.where(left, hi, mid)
        edge = 0.5 * (lo + hi)
        children = []
        k = 0
        for r in range(len(intervals)):
            start = intervals[r, 0]
            cur = code[r, 0]
            while k < len(rows) and rows[k] == r:
                if cur >= 0:
                    children.append((start, edge[k]))
                start = edge[k]
                cur = code[r, cols[k] + 1]
                k += 1
            if cur >= 0:
                children.append((start, intervals[r, 1]))
        intervals = np.array(children, dtype=float).reshape(-1, 2)
        counts.append(len(intervals))
        if len(intervals) == 0:
            break
    return CantorTrace(intervals, depth, counts)


def baker_trace(system, depth: int, xi0: float = 0.5):
    """Trace along the horizontal segment ``xi = xi0`` of a baker system."""
    return forward_trace(system, (0.0, xi0), (1.0, 0.0), (0.0, 1.0), depth)


def disk_trace(system, depth: int, disk: int = 0, s0=None):
    """Trace along the fibre ``s = s0`` of one disk, parametrized by ``eta``."""
    if s0 is None:
        s0 = float(system.periodic_orbit((disk, (disk + 1) % system.n_letters)).points[0].x)
    return forward_trace(system, (s0, 0.0), (0.0, 1.0), (-1.0 + 1e-9, 1.0 - 1e-9), depth, block=disk)
