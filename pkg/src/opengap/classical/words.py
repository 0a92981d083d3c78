"""Jacobians along orbits, word neighborhoods and local word Jacobians."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptyNeighborhoodError, EscapeError, NumericalError
from .systems import OpenMapSystem, PeriodicOrbit, PhasePoint


def unstable_jacobian(system: OpenMapSystem, p: PhasePoint, n: int, direction=None, depth: int = 12) -> float:
    """``J^u_n(p)``: expansion of ``d F^n`` along ``E_u(p)``.

    For negative ``n`` the backward orbit is used and the result is at most
    one on hyperbolic systems.  ``direction`` overrides the unstable vector.
    """
    if n == 0:
        return 1.0
    if direction is None:
        v = system.unstable_direction([p.x], [p.xi], p.block, depth=depth)[0]
    else:
        v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    x, xi, b = np.array([p.x]), np.array([p.xi]), np.array([p.block])
    log_j = 0.0
    for k in range(abs(n)):
        if n > 0:
            d = system.differential(x, xi, b)[0]
            x, xi, b, idx = system.forward(x, xi, b)
        else:
            d = system.inverse_differential(x, xi, b)[0]
            x, xi, b, idx = system.backward(x, xi, b)
        if idx[0] < 0 or not np.all(np.isfinite(d)):
            raise EscapeError(k + 1)
        v = d @ v
        nv = float(np.linalg.norm(v))
        log_j += math.log(nv)
        v = v / nv
    return math.exp(log_j)


def word_neighborhood_contains(system: OpenMapSystem, word: Sequence[int], sign: str, p: PhasePoint) -> bool:
    """Membership of ``p`` in ``V_q^-`` (``sign='-'``) or ``V_q^+`` (``sign='+'``).

    ``V_q^-``: ``F^i(p)`` lies in cell ``q_i`` for ``i = 0..n-1``.
    ``V_q^+``: ``F^{-i}(p)`` lies in cell ``q_{n-i}`` for ``i = 1..n``.
    """
    word = tuple(int(q) for q in word)
    if not word:
        raise ValueError("word must be non-empty")
    if sign not in ("-", "+"):
        raise ValueError("sign must be '-' or '+'")
    x, xi, b = np.array([p.x]), np.array([p.xi]), np.array([p.block])
    if sign == "-":
        for i, q in enumerate(word):
            if system.letter_of(x, xi, b)[0] != q:
                return False
            if i < len(word) - 1:
                x, xi, b, idx = system.forward(x, xi, b)
                if idx[0] < 0:
                    return False
        return True
    for q in reversed(word):
        x, xi, b, idx = system.backward(x, xi, b)
        if idx[0] < 0 or system.letter_of(x, xi, b)[0] != q:
            return False
    return True


@dataclass(frozen=True)
class JacobianPair:
    """Local word Jacobians ``J_q^-`` and ``J_q^+`` with their witnesses.

    ``shadow_distance`` is 0 when the witness lies in the refined
    neighborhood itself and otherwise measures how far the shadowing
    orbit's code departs from the word.
    """

    j_minus: float
    j_plus: float
    witness: PhasePoint
    witness_plus: PhasePoint
    source: str
    shadow_distance: float = 0.0


def _shortest_return(system: OpenMapSystem, last: int, first: int, max_len: int = 4):
    """Shortest letter strings ``e`` with ``last -> e -> first`` admissible."""
    t = system.transitions
    if t[last, first]:
        return [()]
    found = []
    queue = deque([(b,) for b in range(system.n_letters) if t[last, b]])
    while queue:
        e = queue.popleft()
        if found and len(e) > len(found[0]):
            break
        if t[e[-1], first]:
            found.append(e)
            continue
        if len(e) < max_len:
            queue.extend((*e, b) for b in range(system.n_letters) if t[e[-1], b])
    return found


def cyclic_extensions(system: OpenMapSystem, word: Sequence[int], extra: int = 1):
    """Cyclically admissible words starting with ``word``.

    Returns the word itself when it closes up, plus every one-letter
    extension that closes up (``extra=1``); otherwise the shortest closing
    extensions.
    """
    word = tuple(word)
    out = []
    if system.cyclically_admissible(word):
        out.append(word)
    if extra:
        for b in range(system.n_letters):
            w = (*word, b)
            if system.cyclically_admissible(w):
                out.append(w)
    if not out:
        out = [(*word, *e) for e in _shortest_return(system, word[-1], word[0])]
    return out


class WordJacobianCalculator:
    """Local word Jacobians with a cache of periodic orbits.

    Periodic orbits of cyclic extensions of a word lie in ``T cap V_q^-``
    (their first point) and ``T cap V_q^+`` (the point after ``n`` steps), so
    on systems that can construct them they give exact trapped witnesses.
    Otherwise the calculator falls back to survivor samples.
    """

    def __init__(self, system: OpenMapSystem, samples=None, sample_depth: int | None = None):
        self.system = system
        self.samples = samples
        self.sample_depth = sample_depth
        self._orbits: dict = {}

    def orbit(self, word) -> PeriodicOrbit | None:
        """Periodic orbit of a cyclic word; rotations share one computation."""
        word = tuple(word)
        p = len(word)
        shift, key = min(((k, word[k:] + word[:k]) for k in range(p)), key=lambda t: t[1])
        if key not in self._orbits:
            try:
                self._orbits[key] = self.system.periodic_orbit(key)
            except (NotImplementedError, NumericalError, ValueError):
                self._orbits[key] = None
        base = self._orbits[key]
        if base is None or shift == 0:
            return base
        # word[k] = key[k - shift]
        back = (p - shift) % p
        pts = base.points[back:] + base.points[:back]
        return PeriodicOrbit(word, pts, np.roll(base.differentials, -back, axis=0))

    def __call__(self, word) -> JacobianPair:
        word = tuple(int(q) for q in word)
        if not word or not self.system.admissible(word):
            raise EmptyNeighborhoodError(f"empty refined neighborhood for word {word}")
        n = len(word)
        minus, plus = [], []
        for w in cyclic_extensions(self.system, word):
            orb = self.orbit(w)
            if orb is None:
                continue
            minus.append((orb.unstable_jacobian(0, n), orb.points[0]))
            end = n % orb.period
            plus.append((orb.stable_backward_jacobian(end, n), orb.points[end]))
        if minus:
            jm, wm = min(minus, key=lambda t: t[0])
            jp, wp = min(plus, key=lambda t: t[0])
            return JacobianPair(jm, jp, wm, wp, "periodic")
        return self._from_samples(word)

    def _from_samples(self, word) -> JacobianPair:
        if self.samples is None:
            raise EmptyNeighborhoodError(f"empty refined neighborhood for word {word}: no witnesses")
        sys_ = self.system
        n = len(word)
        x, xi, b = (np.asarray(a) for a in self.samples)
        if x.size == 0:
            raise EmptyNeighborhoodError(f"empty refined neighborhood for word {word}: no samples")
        alive = sys_.survivor_mask(x, xi, b, n + 2, direction="forward")
        x, xi, b = x[alive], xi[alive], b[alive]
        if x.size == 0:
            raise EmptyNeighborhoodError(f"empty refined neighborhood for word {word}: no survivors")
        codes = np.empty((x.size, n), dtype=int)
        cx, cxi, cb = x, xi, b
        for i in range(n):
            codes[:, i] = sys_.letter_of(cx, cxi, cb)
            cx, cxi, cb, _ = sys_.forward(cx, cxi, cb)
        match = codes == np.asarray(word)
        prefix = np.where(match.all(axis=1), n, np.argmin(match, axis=1))
        top = int(prefix.max())
        chosen = np.flatnonzero(prefix == top)
        jm = []
        for k in chosen:
            p = PhasePoint(float(x[k]), float(xi[k]), int(b[k]))
            jm.append((unstable_jacobian(sys_, p, n), k))
        jmin, k = min(jm)
        p = PhasePoint(float(x[k]), float(xi[k]), int(b[k]))
        fwd = sys_.orbit(p, n)[-1]
        jplus = _stable_backward(sys_, fwd, n)
        return JacobianPair(jmin, jplus, p, fwd, "samples" if top == n else "shadow", float(n - top))


def _stable_backward(system: OpenMapSystem, p: PhasePoint, n: int) -> float:
    v = system.stable_direction([p.x], [p.xi], p.block)[0]
    return unstable_jacobian(system, p, -n, direction=v)


def local_word_jacobian(system: OpenMapSystem, word, samples=None) -> JacobianPair:
    """``J_q^-`` and ``J_q^+`` for one word (see :class:`WordJacobianCalculator`)."""
    return WordJacobianCalculator(system, samples)(word)


def jacobian_comparability(system: OpenMapSystem, word, calculator: WordJacobianCalculator | None = None) -> float:
    """Largest ratio ``J^u_n(rho)/J^u_n(rho')`` over trapped witnesses of one word.

    The witnesses are periodic orbits of different cyclic extensions, whose
    first ``n`` points share the word's code and so stay close.
    """
    calc = calculator or WordJacobianCalculator(system)
    word = tuple(word)
    n = len(word)
    js = []
    for w in cyclic_extensions(system, word):
        orb = calc.orbit(w)
        if orb is not None:
            js.append(orb.unstable_jacobian(0, n))
    if len(js) < 2:
        return 1.0
    return max(js) / min(js)


def multiplicativity_ratio(system, q1, q2, calculator=None, sign="-") -> float:
    """``J_{q1 q2} / (J_{q1} J_{q2})`` for the chosen sign."""
    calc = calculator or WordJacobianCalculator(system)
    attr = "j_minus" if sign == "-" else "j_plus"
    j12 = getattr(calc(tuple(q1) + tuple(q2)), attr)
    return j12 / (getattr(calc(q1), attr) * getattr(calc(q2), attr))


def stable_pair_contraction(system: OpenMapSystem, p: PhasePoint, offset: float, n_max: int = 12):
    """Fitted constant ``C`` in ``d(F^n p, F^n p') <= C J^s_n(p) d(p, p')``.

    ``p'`` is ``p`` shifted along the stable direction, which is the local
    stable manifold for the piecewise-linear systems.
    """
    v = system.stable_direction([p.x], [p.xi], p.block)[0]
    q = PhasePoint(p.x + offset * v[0], p.xi + offset * v[1], p.block)
    orb_p = system.orbit(p, n_max)
    orb_q = system.orbit(q, n_max)
    d0 = math.hypot(q.x - p.x, q.xi - p.xi)
    ratios = []
    for n in range(1, n_max + 1):
        js = unstable_jacobian(system, p, n, direction=v)
        dn = math.hypot(orb_p[n].x - orb_q[n].x, orb_p[n].xi - orb_q[n].xi)
        ratios.append(dn / (js * d0))
    return max(ratios), ratios


def words_up_to(system: OpenMapSystem, n: int):
    for k in range(1, n + 1):
        yield from system.admissible_words(k)


def all_splits(word):
    for k in range(1, len(word)):
        yield word[:k], word[k:]


__all__ = [
    "JacobianPair",
    "WordJacobianCalculator",
    "all_splits",
    "cyclic_extensions",
    "jacobian_comparability",
    "local_word_jacobian",
    "multiplicativity_ratio",
    "stable_pair_contraction",
    "unstable_jacobian",
    "word_neighborhood_contains",
    "words_up_to",
]
