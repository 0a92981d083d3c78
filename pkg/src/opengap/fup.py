"""Fractal uncertainty norms ``|| 1_{Omega-} F 1_{Omega+} ||`` on discrete grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigurationError
from .quantum import torus_fourier
from .thermo import merge_intervals


class ScaleGateError(ConfigurationError):
    """The exponents violate one side of the double inequality."""

    def __init__(self, side: str, message: str):
        super().__init__(message)
        self.side = side


# --------------------------------------------------------------------------
# Sets


@dataclass
class FractalSetSpec:
    """An index subset of ``Z_N`` built from a Cantor rule, a fattening or an explicit list."""

    kind: str
    N: int
    params: dict = field(default_factory=dict)
    realized: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.realized is None:
            raise ConfigurationError("use the constructors to build a FractalSetSpec")
        self.realized = np.unique(np.asarray(self.realized, dtype=int))
        if self.realized.size and (self.realized[0] < 0 or self.realized[-1] >= self.N):
            raise ConfigurationError("realized set leaves the grid")

    def __len__(self):
        return int(self.realized.size)

    @classmethod
    def cantor(cls, base: int, alphabet, depth: int) -> "FractalSetSpec":
        return cls("cantor", base**depth, {"base": base, "alphabet": tuple(alphabet), "depth": depth},
                   cantor_indices(base, alphabet, depth))

    @classmethod
    def explicit(cls, N: int, indices) -> "FractalSetSpec":
        return cls("explicit", N, {}, np.asarray(indices, dtype=int))

    @classmethod
    def from_intervals(cls, N: int, intervals) -> "FractalSetSpec":
        """Grid points ``j / N`` lying in a union of closed intervals of ``[0, 1]``."""
        pts = np.arange(N) / N
        mask = np.zeros(N, dtype=bool)
        for a, b in np.asarray(intervals, dtype=float).reshape(-1, 2):
            mask |= (pts >= a - 1e-12) & (pts <= b + 1e-12)
        return cls("intervals", N, {"intervals": np.asarray(intervals).tolist()}, np.flatnonzero(mask))

    def fattened(self, c: int) -> "FractalSetSpec":
        """``X + [-c, c]`` on the cyclic grid."""
        return FractalSetSpec("fattened", self.N, {"base": self.kind, "radius": c}, fatten_indices(self.realized, c, self.N))


def cantor_indices(base: int, alphabet, depth: int) -> np.ndarray:
    """Indices in ``Z_{base^depth}`` whose base-``base`` digits all lie in ``alphabet``."""
    alphabet = sorted(set(int(a) for a in alphabet))
    if any(a < 0 or a >= base for a in alphabet):
        raise ConfigurationError(f"alphabet must lie in 0..{base - 1}")
    idx = np.zeros(1, dtype=np.int64)
    for _ in range(depth):
        idx = (idx[:, None] * base + np.asarray(alphabet)[None, :]).ravel()
    return np.sort(idx)


def fatten_indices(indices, c: int, N: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=int)
    if indices.size == 0 or c <= 0:
        return np.unique(indices)
    shifts = np.arange(-c, c + 1)
    return np.unique((indices[:, None] + shifts[None, :]) % N)


# --------------------------------------------------------------------------
# Norms


def _indices(s):
    return s.realized if isinstance(s, FractalSetSpec) else np.asarray(s, dtype=int)


def fup_norm(N: int, omega_minus, omega_plus, fourier: np.ndarray | None = None) -> float:
    """Largest singular value of the unitary DFT restricted to rows ``Omega-`` and columns ``Omega+``."""
    rows, cols = _indices(omega_minus), _indices(omega_plus)
    if rows.size == 0 or cols.size == 0:
        return 0.0
    if fourier is None:
        block = np.exp(-2j * np.pi * np.outer(rows, cols) / N) / math.sqrt(N)
    else:
        block = fourier[np.ix_(rows, cols)]
    return float(np.linalg.norm(block, 2))


def volume_bound(N: int, omega_minus, omega_plus) -> float:
    """``min(1, sqrt(|Omega-| |Omega+| / N))``, the Hilbert-Schmidt bound."""
    return min(1.0, math.sqrt(len(_indices(omega_minus)) * len(_indices(omega_plus)) / N))


def volume_chain_bound(N: int, omega_minus, omega_plus) -> float:
    """``||1_X||_{inf->2} ||F||_{1->inf} ||1_Y||_{2->1} = sqrt(|X|) N^{-1/2} sqrt(|Y|)``."""
    return math.sqrt(len(_indices(omega_minus))) * math.sqrt(len(_indices(omega_plus))) / math.sqrt(N)


@dataclass
class FupExperiment:
    """Norms of one set family across scales ``N``."""

    scales: list
    set_minus: list
    set_plus: list
    norms: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    fitted_beta: float | None = None
    band: tuple | None = None

    def run(self):
        self.norms, self.bounds = [], []
        for N, a, b in zip(self.scales, self.set_minus, self.set_plus):
            self.norms.append(fup_norm(N, a, b))
            self.bounds.append(volume_bound(N, a, b))
        return self

    def rows(self):
        return [
            {"N": N, "size_minus": len(_indices(a)), "size_plus": len(_indices(b)), "norm": v, "trivial_bound": t}
            for N, a, b, v, t in zip(self.scales, self.set_minus, self.set_plus, self.norms, self.bounds)
        ]


def cantor_experiment(base: int = 3, alphabet=(0, 2), depths=range(3, 8)) -> FupExperiment:
    sets = [FractalSetSpec.cantor(base, alphabet, k) for k in depths]
    return FupExperiment([base**k for k in depths], sets, sets).run()


def fit_fup_exponent(experiment: FupExperiment, discard: int = 2):
    """Fit ``norm ~ N^{-beta}``; the ``discard`` coarsest scales are dropped.

    Returns ``(beta, (low, high))`` with a two-standard-error band.
    """
    if len(experiment.scales) < 4:
        raise ConfigurationError("fitting needs at least 4 scales")
    if not experiment.norms:
        experiment.run()
    order = np.argsort(experiment.scales)
    N = np.asarray(experiment.scales, dtype=float)[order][discard:]
    v = np.asarray(experiment.norms, dtype=float)[order][discard:]
    if N.size < 2:
        raise ConfigurationError("too few scales left after discarding the coarsest")
    if np.any(v <= 0):
        raise ConfigurationError("cannot fit an exponent to zero norms")
    fit = stats.linregress(np.log(N), np.log(v))
    beta = -float(fit.slope)
    err = float(fit.stderr) if N.size > 2 else 0.0
    experiment.fitted_beta = beta
    experiment.band = (beta - 2 * err, beta + 2 * err)
    return beta, experiment.band


def scale_gate(g0_plus: float, g0_minus: float, g1_plus: float = 0.0, g1_minus: float = 0.0) -> float:
    """``gamma = min(g0+, 1 - g1-) - max(g1+, 1 - g0-)`` when ``g1+ + g1- < 1 < g0+ + g0-``."""
    for lo, hi, tag in ((g1_plus, g0_plus, "+"), (g1_minus, g0_minus, "-")):
        if not 0 <= lo < hi <= 1:
            raise ConfigurationError(f"need 0 <= gamma1{tag} < gamma0{tag} <= 1, got {lo}, {hi}")
    if not g0_plus + g0_minus > 1:
        raise ScaleGateError("lower", f"gamma0+ + gamma0- = {g0_plus + g0_minus} is not > 1")
    if not g1_plus + g1_minus < 1:
        raise ScaleGateError("upper", f"gamma1+ + gamma1- = {g1_plus + g1_minus} is not < 1")
    return min(g0_plus, 1 - g1_minus) - max(g1_plus, 1 - g0_minus)


# --------------------------------------------------------------------------
# Sets from word clouds


def _cylinder(digits, base):
    lo = 0.0
    for d in reversed(digits):
        lo = (lo + d) / base
    return lo, lo + base ** (-len(digits))


def word_strips(system, word):
    """``(x-interval of V_q^-, xi-interval of V_q^+)`` for an unkicked baker system."""
    if getattr(system, "kind", None) != "baker" or system.kick != 0.0:
        raise ConfigurationError("word strips are implemented for unkicked baker systems")
    digits = [d for q in word for d in system.letter_words[q]]
    # F^n maps the x-cylinder of the digits onto the xi-cylinder of the reversed digits
    return _cylinder(digits, system.base), _cylinder(digits[::-1], system.base)


def build_omega_sets(system, words, h: float, tau: float, delta0: float, frak_b: float | None = None,
                     closeness: float = 1.0):
    """``Omega+`` (momentum, fattened by ``h^tau``) and ``Omega-`` (position, fattened by ``h^delta0``).

    With ``frak_b`` given, checks that the strips ``V_q^+`` lie within
    ``closeness * h^frak_b`` of one unstable leaf (a horizontal line).
    Returns merged interval arrays ``(omega_minus, omega_plus)``.
    """
    words = [tuple(w) for w in words]
    if not words:
        return np.zeros((0, 2)), np.zeros((0, 2))
    strips = [word_strips(system, w) for w in words]
    if frak_b is not None:
        limit = closeness * h**frak_b
        centres = [0.5 * (p[0] + p[1]) for _, p in strips]
        ref = float(np.median(centres))
        for (x_iv, p_iv), w in zip(strips, words):
            far = max(abs(p_iv[0] - ref), abs(p_iv[1] - ref))
            if far > limit:
                i = int(np.argmax([max(abs(p[0] - ref), abs(p[1] - ref)) for _, p in strips]))
                j = int(np.argmin([max(abs(p[0] - ref), abs(p[1] - ref)) for _, p in strips]))
                raise ConfigurationError(
                    f"cloud condition violated by words {words[i]} and {words[j]}: "
                    f"distance {far:.3g} to the reference leaf exceeds {limit:.3g}"
                )
    cp, cm = h**tau, h**delta0
    plus = merge_intervals([(p[0] - cp, p[1] + cp) for _, p in strips])
    minus = merge_intervals([(x[0] - cm, x[1] + cm) for x, _ in strips])
    return np.asarray(minus, dtype=float).reshape(-1, 2), np.asarray(plus, dtype=float).reshape(-1, 2)


__all__ = [
    "FractalSetSpec",
    "FupExperiment",
    "ScaleGateError",
    "build_omega_sets",
    "cantor_experiment",
    "cantor_indices",
    "fatten_indices",
    "fit_fup_exponent",
    "fup_norm",
    "scale_gate",
    "torus_fourier",
    "volume_bound",
    "volume_chain_bound",
    "word_strips",
]
