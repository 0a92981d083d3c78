"""Pressure, dimensions, porosity and the exponent bookkeeping for the gap argument."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .classical.systems import OpenMapSystem
from .classical.words import WordJacobianCalculator
from .errors import ConfigurationError, NumericalError


class NoGapError(NumericalError):
    """The pressure at ``s = 1`` is not negative."""


# --------------------------------------------------------------------------
# Pressure


@dataclass
class PressureCurve:
    """Finite-``n`` pressure estimates on a grid of ``s`` values.

    ``pressure_estimates[k]`` holds ``(n, log(c_n)/n)`` pairs for
    ``s_values[k]``; ``ratio_estimates`` holds ``(n, log(c_n / c_{n-1}))``
    and ``extrapolated`` an Aitken extrapolation of the ratio sequence.
    """

    s_values: list
    pressure_estimates: list
    ratio_estimates: list
    extrapolated: list
    n_max: int

    def limit(self, k: int = 0, method: str = "ratio") -> float:
        if method == "ratio":
            return self.ratio_estimates[k][-1][1]
        if method == "aitken":
            return self.extrapolated[k]
        if method == "raw":
            return self.pressure_estimates[k][-1][1]
        raise ValueError(f"unknown pressure estimator {method!r}")

    def rows(self):
        for s, seq, rat in zip(self.s_values, self.pressure_estimates, self.ratio_estimates):
            ratios = dict(rat)
            for n, value in seq:
                yield {"s": s, "n": n, "estimate": value, "ratio_estimate": ratios.get(n, float("nan"))}


def aitken(seq: Sequence[float]) -> float:
    """Aitken delta-squared value from the last three terms (last term if degenerate)."""
    if len(seq) < 3:
        return float(seq[-1])
    a, b, c = seq[-3:]
    den = c - 2 * b + a
    if abs(den) < 1e-12 * max(1.0, abs(c)) or abs(c - b) < 1e-14:
        return float(c)
    return float(c - (c - b) ** 2 / den)


class PressureEstimator:
    """Word sums ``c_n(s) = sum_q (J_q^-)^{-s}`` for ``n = 1..n_max``.

    The log-Jacobians of all admissible words are computed once per length
    and reused for every ``s``.
    """

    def __init__(self, system: OpenMapSystem, n_max: int, budget: int = 250_000, calculator=None):
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        total = 0
        feasible = 0
        for n in range(1, n_max + 1):
            total += system.count_words(n)
            if total > budget:
                raise ConfigurationError(
                    f"word budget {budget} exceeded at n={n}; largest feasible n_max is {feasible}"
                )
            feasible = n
        self.system = system
        self.n_max = n_max
        self.calculator = calculator or WordJacobianCalculator(system)
        self._log_j: dict[int, np.ndarray] = {}

    def log_jacobians(self, n: int) -> np.ndarray:
        if n not in self._log_j:
            self._log_j[n] = np.array(
                [math.log(self.calculator(w).j_minus) for w in self.system.admissible_words(n)]
            )
        return self._log_j[n]

    def log_c(self, n: int, s: float) -> float:
        lj = self.log_jacobians(n)
        if lj.size == 0:
            return -math.inf
        return float(logsumexp(-s * lj))

    def curve(self, s_values) -> PressureCurve:
        s_values = [float(s) for s in np.atleast_1d(s_values)]
        est, rat, ext = [], [], []
        for s in s_values:
            if not 0.0 <= s <= 2.0:
                raise ValueError("s must lie in [0, 2]")
            logs = [self.log_c(n, s) for n in range(1, self.n_max + 1)]
            if not np.all(np.isfinite(logs)):
                raise NumericalError("no admissible words: pressure is -inf")
            est.append([(n, logs[n - 1] / n) for n in range(1, self.n_max + 1)])
            r = [(n, logs[n - 1] - logs[n - 2]) for n in range(2, self.n_max + 1)]
            if not r:
                r = [(1, logs[0])]
            rat.append(r)
            ext.append(aitken([v for _, v in r]))
        return PressureCurve(s_values, est, rat, ext, self.n_max)

    def __call__(self, s: float, method: str = "ratio") -> float:
        return self.curve([s]).limit(0, method)


def pressure(system: OpenMapSystem, s: float, n_max: int = 10, budget: int = 250_000) -> PressureCurve:
    """Pressure estimates of ``s phi_u`` for one ``s``."""
    return PressureEstimator(system, n_max, budget).curve([s])


def topological_entropy(system: OpenMapSystem) -> float:
    """``log`` of the spectral radius of the letter transition matrix."""
    vals = np.linalg.eigvals(system.transitions.astype(float))
    r = float(np.max(np.abs(vals)))
    return math.log(r) if r > 0 else -math.inf


@dataclass
class DimensionReport:
    """An upper-box-dimension type estimate ``N(eps) <= C eps^{-delta}``."""

    delta: float
    constant_C: float
    epsilon0: float
    method: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.delta <= 1.0 + 1e-12):
            raise NumericalError(f"dimension estimate {self.delta} outside [0, 1]")


def bowen_root(
    system: OpenMapSystem,
    tol: float = 1e-10,
    n_max: int = 10,
    method: str = "ratio",
    estimator: PressureEstimator | None = None,
) -> DimensionReport:
    """Root ``s_0`` of ``s -> P(s phi_u)`` by bisection on ``[0, 1]``.

    Raises :class:`NoGapError` when ``P(1) >= 0``.  When ``P(0) <= 0`` the
    root is the boundary value 0.
    """
    est = estimator or PressureEstimator(system, n_max)

    def P(s):
        return est.curve([s]).limit(0, method)

    p1 = P(1.0)
    if p1 >= -1e-12:
        raise NoGapError(f"no gap regime: P(1) = {p1:.6g} >= 0")
    p0 = P(0.0)
    if p0 <= tol:
        s0 = 0.0
    else:
        lo, hi = 0.0, 1.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if P(mid) > 0:
                lo = mid
            else:
                hi = mid
        s0 = 0.5 * (lo + hi)
    return DimensionReport(
        s0,
        1.0,
        0.0,
        "pressure_root",
        {"P0": p0, "P1": p1, "n_max": est.n_max, "estimator": method, "trapped_set_dimension": 2 * s0},
    )


def classical_decay_rate(system: OpenMapSystem, n_max: int = 10, method: str = "ratio", estimator=None) -> float:
    """``gamma_cl = -P(phi_u)``."""
    est = estimator or PressureEstimator(system, n_max)
    return -est.curve([1.0]).limit(0, method)


def monte_carlo_escape(system: OpenMapSystem, steps: int, samples: int = 200_000, rng=None, min_count: int = 200):
    """Survivor fractions of uniform points and the fitted exponential rate.

    Returns ``(rate, fractions)``; the fit uses steps with at least
    ``min_count`` survivors.
    """
    rng = np.random.default_rng(rng)
    areas = np.array([(b.x1 - b.x0) * (b.xi1 - b.xi0) for b in system.blocks])
    which = rng.choice(len(areas), size=samples, p=areas / areas.sum())
    x = np.empty(samples)
    xi = np.empty(samples)
    for k, rect in enumerate(system.blocks):
        sel = which == k
        x[sel], xi[sel] = rect.sample(rng, int(sel.sum()))
    b = which.astype(int)
    alive = np.ones(samples, dtype=bool)
    frac = [1.0]
    for _ in range(steps):
        live = np.flatnonzero(alive)
        nx, nxi, nb, idx = system.forward(x[live], xi[live], b[live])
        alive[live[idx < 0]] = False
        x[live], xi[live], b[live] = nx, nxi, nb
        frac.append(alive.mean())
    counts = np.array(frac) * samples
    m = np.arange(steps + 1)
    use = (counts >= min_count) & (m >= 1)
    if use.sum() < 2:
        raise NumericalError("too few survivors to fit an escape rate")
    slope = np.polyfit(m[use], np.log(np.array(frac)[use]), 1)[0]
    return float(-slope), frac


# --------------------------------------------------------------------------
# Sets on the line


def merge_intervals(intervals) -> np.ndarray:
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if iv.size == 0:
        return iv
    iv = iv[np.argsort(iv[:, 0])]
    out = [list(iv[0])]
    for lo, hi in iv[1:]:
        if lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return np.array(out)


def cantor_intervals(base: int = 3, digits=(0, 2), depth: int = 8) -> np.ndarray:
    """Closed intervals of the depth-``depth`` construction of a Cantor set in ``[0, 1]``."""
    digits = np.asarray(sorted(digits), dtype=float)
    left = np.zeros(1)
    for k in range(1, depth + 1):
        left = (left[:, None] + digits[None, :] * float(base) ** (-k)).ravel()
    left.sort()
    return np.column_stack([left, left + float(base) ** (-depth)])


def fatten(intervals, radius: float) -> np.ndarray:
    """``X + [-radius, radius]`` for a union of closed intervals."""
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    return merge_intervals(np.column_stack([iv[:, 0] - radius, iv[:, 1] + radius]))


def _as_intervals(data, resolution=None) -> np.ndarray:
    if hasattr(data, "intervals"):
        data = data.intervals
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return merge_intervals(arr)
    pts = np.sort(arr.ravel())
    half = 0.0 if resolution is None else 0.5 * resolution
    return merge_intervals(np.column_stack([pts - half, pts + half]))


def box_counts(data, eps_values, rel_tol: float = 1e-9) -> np.ndarray:
    """Number of half-open cells ``[k eps, (k+1) eps)`` meeting the set.

    Interval ends are pulled in by ``rel_tol * eps`` so that closed intervals
    ending exactly on a cell edge do not count the neighbouring cell.
    """
    iv = _as_intervals(data)
    out = []
    for eps in eps_values:
        if iv.size == 0:
            out.append(0)
            continue
        pad = rel_tol * eps
        lo = np.floor((iv[:, 0] + np.minimum(pad, 0.5 * (iv[:, 1] - iv[:, 0]))) / eps).astype(np.int64)
        hi = np.floor((iv[:, 1] - np.minimum(pad, 0.5 * (iv[:, 1] - iv[:, 0]))) / eps).astype(np.int64)
        # union of integer ranges [lo, hi]
        order = np.argsort(lo)
        lo, hi = lo[order], hi[order]
        run_hi = np.maximum.accumulate(hi)
        starts = np.concatenate([[True], lo[1:] > run_hi[:-1]])
        seg_lo = lo[starts]
        seg_hi = np.maximum.reduceat(hi, np.flatnonzero(starts))
        out.append(int(np.sum(seg_hi - seg_lo + 1)))
    return np.array(out)


def box_dimension(data, eps_min: float, eps_max: float, base: float = 2.0, eps_values=None) -> DimensionReport:
    """Least-squares box-counting slope over geometric scales.

    ``data`` is a union of closed intervals (``(k, 2)`` array or a trace),
    or a 1d array of points.  ``constant_C`` is the smallest ``C`` with
    ``N(eps) <= C eps^{-delta}`` on the sampled scales.
    """
    if not eps_min < eps_max:
        raise ValueError("need eps_min < eps_max")
    if eps_values is None:
        k = int(math.floor(math.log(eps_max / eps_min) / math.log(base) + 1e-9))
        eps_values = eps_max * base ** (-np.arange(k + 1, dtype=float))
    eps = np.asarray(eps_values, dtype=float)
    counts = box_counts(data, eps)
    ok = counts > 0
    if ok.sum() < 4:
        raise NumericalError(f"only {int(ok.sum())} usable scales; need at least 4")
    x = -np.log(eps[ok])
    y = np.log(counts[ok])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    delta = float(np.clip(slope, 0.0, 1.0))
    C = float(np.max(counts[ok] * eps[ok] ** delta))
    return DimensionReport(
        delta,
        C,
        float(eps[ok].max()),
        "box_count",
        {
            "raw_slope": float(slope),
            "intercept_C": float(math.exp(intercept)),
            "eps": eps[ok].tolist(),
            "counts": counts[ok].tolist(),
            "residual_max": float(np.max(np.abs(resid))),
        },
    )


# --------------------------------------------------------------------------
# Porosity


@dataclass
class PorosityCertificate:
    """Result of a porosity scan; ``certified`` is False for a refutation."""

    nu: float
    alpha0: float
    alpha1: float
    certified: bool
    scales: list
    witness_gaps: list
    checked_resolution: float
    failure: tuple | None = None  # (interval, best free length) at the smallest failing scale

    def rows(self):
        for scale, (a, b), (ga, gb) in self.witness_gaps:
            yield {"scale": scale, "interval_lo": a, "interval_hi": b, "gap_lo": ga, "gap_hi": gb}


class _RangeMax:
    """Sparse table for range-maximum queries."""

    def __init__(self, values):
        v = np.asarray(values, dtype=float)
        self.table = [v]
        k = 1
        while 2 * k <= len(v):
            prev = self.table[-1]
            self.table.append(np.maximum(prev[:-k], prev[k:]))
            k *= 2

    def query(self, lo, hi):
        """Max over ``[lo, hi)`` (vectorized); ``-inf`` for empty ranges."""
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        n = np.maximum(hi - lo, 0)
        out = np.full(lo.shape, -np.inf)
        ok = n > 0
        if not ok.any():
            return out
        lev = np.floor(np.log2(np.where(ok, n, 1))).astype(int)
        for L in np.unique(lev[ok]):
            sel = ok & (lev == L)
            t = self.table[L]
            out[sel] = np.maximum(t[lo[sel]], t[hi[sel] - (1 << L)])
        return out


def _largest_gaps(iv, a, b):
    """Largest set-free subinterval of each ``[a_k, b_k]``: ``(length, start)``."""
    g_lo = np.concatenate([[-np.inf], iv[:, 1]])
    g_hi = np.concatenate([iv[:, 0], [np.inf]])
    lengths = g_hi - g_lo
    rmq = _RangeMax(np.where(np.isfinite(lengths), lengths, np.inf))
    # gaps overlapping (a, b): first with g_hi > a, last with g_lo < b
    i0 = np.searchsorted(g_hi, a, side="right")
    i1 = np.searchsorted(g_lo, b, side="left") - 1
    first = np.minimum(g_hi[i0], b) - np.maximum(g_lo[i0], a)
    last = np.minimum(g_hi[i1], b) - np.maximum(g_lo[i1], a)
    inner = rmq.query(i0 + 1, i1)
    best = np.maximum(np.maximum(first, last), inner)
    start = np.where(best == first, np.maximum(g_lo[i0], a), np.maximum(g_lo[i1], a))
    use_inner = (best == inner) & (best > np.maximum(first, last))
    if use_inner.any():
        # locate the inner gap explicitly
        for k in np.flatnonzero(use_inner):
            seg = lengths[i0[k] + 1 : i1[k]]
            start[k] = g_lo[i0[k] + 1 + int(np.argmax(seg))]
    return np.maximum(best, 0.0), start


def check_porosity(
    data,
    nu: float,
    alpha0: float,
    alpha1: float,
    resolution: float | None = None,
    scale_ratio: float = 2.0,
    rel_tol: float = 1e-9,
    max_witnesses: int = 4,
) -> PorosityCertificate:
    """Scan intervals ``I`` at geometric scales in ``[alpha0, alpha1]`` for gaps of size ``nu |I|``.

    Left endpoints run over a grid of spacing ``nu |I| / 4`` covering the
    set; for each ``I`` the largest set-free subinterval is computed exactly
    from the interval representation of the set.  Only the scanned scales
    ``alpha1 * scale_ratio^{-j}`` (and ``alpha0``) are checked.
    """
    if not 0 < nu < 1:
        raise ValueError("nu must lie in (0, 1)")
    if not 0 < alpha0 < alpha1:
        raise ValueError("need 0 < alpha0 < alpha1")
    if resolution is None:
        resolution = nu * alpha0 / 10
    if resolution > nu * alpha0 / 10 * (1 + 1e-12):
        raise ValueError("resolution must be at most nu * alpha0 / 10")
    if callable(data):
        raise TypeError("pass a set as intervals or points; sample membership functions first")
    iv = _as_intervals(data, resolution if np.asarray(getattr(data, "intervals", data)).ndim == 1 else None)
    scales = []
    s = alpha1
    while s >= alpha0 * (1 - 1e-12):
        scales.append(s)
        s /= scale_ratio
    if scales[-1] > alpha0 * (1 + 1e-12):
        scales.append(alpha0)
    witnesses = []
    failure = None
    if iv.size == 0:
        return PorosityCertificate(nu, alpha0, alpha1, True, scales, [], resolution)
    lo_set, hi_set = iv[0, 0], iv[-1, 1]
    for scale in scales:
        step = nu * scale / 4
        a = np.arange(lo_set - scale, hi_set + step, step)
        b = a + scale
        free, start = _largest_gaps(iv, a, b)
        bad = free < nu * scale * (1 - rel_tol)
        if bad.any():
            k = int(np.flatnonzero(bad)[np.argmin(free[bad])])
            failure = ((float(a[k]), float(b[k])), float(free[k]), scale)
        else:
            pick = np.linspace(0, len(a) - 1, min(max_witnesses, len(a))).astype(int)
            for k in pick:
                gs = float(start[k])
                witnesses.append((scale, (float(a[k]), float(b[k])), (gs, gs + nu * scale)))
    return PorosityCertificate(
        nu, alpha0, alpha1, failure is None, scales, witnesses, resolution, failure
    )


def porosity_from_dimension(C: float, delta: float, eps0: float) -> float:
    """Porosity constant ``nu = 1/(3T)`` from a bound ``N(eps) <= C eps^{-delta}`` for ``eps <= eps0``."""
    if not (0 <= delta < 1) or C <= 0 or eps0 <= 0:
        raise ValueError("need 0 <= delta < 1, C > 0 and eps0 > 0")
    T = math.floor(max(1.0 / (6 * eps0), (6**delta * C) ** (1.0 / (1.0 - delta)))) + 1
    return 1.0 / (3 * T)


def dimension_from_porosity(nu: float, alpha1: float, M: float) -> tuple[float, float]:
    """``(C, delta)`` for a set in ``[-M, M]`` that is ``nu``-porous on scales 0 to ``alpha1``."""
    if not (0 < nu <= 1) or alpha1 <= 0 or M <= 0:
        raise ValueError("need 0 < nu <= 1, alpha1 > 0 and M > 0")
    L = math.ceil(2.0 / nu - 1e-12)
    # k0 with L^{-k0} <= alpha1 < L^{-k0+1}
    k0 = math.ceil(-math.log(alpha1) / math.log(L) - 1e-12)
    while L ** (-k0) > alpha1:
        k0 += 1
    while L ** (-(k0 - 1)) <= alpha1:
        k0 -= 1
    delta = math.log(L - 1) / math.log(L)
    C = 4 * M * (L / (L - 1)) ** k0 * (L - 1) ** (1 - math.log(2) / math.log(L))
    return C, delta


# --------------------------------------------------------------------------
# Exponent bookkeeping


@dataclass(frozen=True)
class NumerologyProfile:
    lambda0: float
    lambda1: float
    beta: float
    frak_b: float
    delta0: float
    tau: float
    delta2: float
    checks: dict

    def N0(self, h: float) -> int:
        return math.ceil(self.delta0 / self.lambda1 * abs(math.log(h)) - 1e-12)

    def N1(self, h: float) -> int:
        return math.ceil(abs(math.log(h)) / self.lambda0 - 1e-12)

    def N(self, h: float) -> int:
        return self.N0(h) + self.N1(h)

    def as_dict(self):
        return {
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "beta": self.beta,
            "frak_b": self.frak_b,
            "delta0": self.delta0,
            "tau": self.tau,
            "delta2": self.delta2,
            "checks": dict(self.checks),
        }


def numerology(lambda0: float, lambda1: float, beta: float) -> NumerologyProfile:
    """Exponents ``b = 1/(1+beta)``, ``delta0``, ``tau``, ``delta2`` and their constraints."""
    if not (0 < lambda0 <= lambda1) or not beta > 0:
        raise ValueError("need 0 < lambda0 <= lambda1 and beta > 0")
    b = 1.0 / (1.0 + beta)
    d0 = (1.0 - b) / 2.0
    r = lambda0 / lambda1
    tau = 1.0 - r * (1.0 - b) / 4.0
    d2 = d0 * r
    checks = {
        "b_plus_delta0_lt_1": b + d0 < 1,
        "b_lt_tau_lt_1": b < tau < 1,
        "delta2_plus_tau_gt_1": d2 + tau > 1,
    }
    if not all(checks.values()):
        warnings.warn(f"exponent constraints violated: {checks}", stacklevel=2)
    return NumerologyProfile(lambda0, lambda1, beta, b, d0, tau, d2, checks)


__all__ = [
    "DimensionReport",
    "NoGapError",
    "NumerologyProfile",
    "PorosityCertificate",
    "PressureCurve",
    "PressureEstimator",
    "aitken",
    "bowen_root",
    "box_counts",
    "box_dimension",
    "cantor_intervals",
    "check_porosity",
    "classical_decay_rate",
    "dimension_from_porosity",
    "fatten",
    "merge_intervals",
    "monte_carlo_escape",
    "numerology",
    "porosity_from_dimension",
    "pressure",
    "topological_entropy",
]
