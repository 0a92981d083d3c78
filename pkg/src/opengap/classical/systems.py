"""Open hyperbolic maps as finite families of invertible pieces.

Every system works in chart coordinates ``(x, xi)`` on a finite list of
rectangular blocks.  A piece ``F_ij`` sends part of block ``j`` into block
``i``; points of a block that lie in no piece domain fall into the hole.
All map callables are vectorized over numpy arrays.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from ..errors import ConfigurationError, EscapeError

VecMap = Callable[[np.ndarray, np.ndarray], "tuple[np.ndarray, np.ndarray]"]


class PhasePoint(NamedTuple):
    x: float
    xi: float
    block: int = 0


@dataclass(frozen=True)
class Rect:
    """Half-open rectangle ``[x0, x1) x [xi0, xi1)``."""

    x0: float
    x1: float
    xi0: float
    xi1: float

    def contains(self, x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        return (x >= self.x0) & (x < self.x1) & (xi >= self.xi0) & (xi < self.xi1)

    def grid(self, resolution: int):
        """Cell centres of a ``resolution x resolution`` grid, flattened."""
        xs = self.x0 + (np.arange(resolution) + 0.5) * (self.x1 - self.x0) / resolution
        xis = self.xi0 + (np.arange(resolution) + 0.5) * (self.xi1 - self.xi0) / resolution
        gx, gxi = np.meshgrid(xs, xis, indexing="ij")
        return gx.ravel(), gxi.ravel()

    def sample(self, rng: np.random.Generator, n: int):
        return (rng.uniform(self.x0, self.x1, n), rng.uniform(self.xi0, self.xi1, n))


@dataclass(frozen=True)
class MapPiece:
    """One invertible branch ``F_ij`` from block ``from_block`` to ``to_block``.

    ``domain`` bounds the piece domain; ``in_domain``/``in_image`` give exact
    membership when the domain is not the full rectangle.
    """

    from_block: int
    to_block: int
    domain: Rect
    forward: VecMap
    inverse: VecMap
    differential: Callable[[np.ndarray, np.ndarray], np.ndarray]
    in_domain: Callable | None = None
    in_image: Callable | None = None
    label: str = ""

    def contains(self, x, xi):
        inside = self.domain.contains(x, xi)
        if self.in_domain is not None:
            inside = inside & self.in_domain(x, xi)
        return inside

    def image_contains(self, x, xi):
        if self.in_image is not None:
            return self.in_image(x, xi)
        with np.errstate(invalid="ignore", over="ignore"):
            px, pxi = self.inverse(np.asarray(x, float), np.asarray(xi, float))
        return self.contains(px, pxi)


@dataclass
class PeriodicOrbit:
    """A periodic orbit known point by point, with the differential at each point."""

    word: tuple
    points: list
    differentials: np.ndarray  # shape (period, 2, 2)

    @property
    def period(self) -> int:
        return len(self.points)

    def product(self, start: int, n: int) -> np.ndarray:
        """``d F^n`` at point ``start`` (n >= 0) as a 2x2 matrix."""
        m = np.eye(2)
        p = self.period
        for k in range(n):
            m = self.differentials[(start + k) % p] @ m
        return m

    def monodromy(self, start: int = 0) -> np.ndarray:
        return self.product(start, self.period)

    def _eig_direction(self, start: int, expanding: bool) -> np.ndarray:
        vals, vecs = np.linalg.eig(self.monodromy(start))
        order = np.argsort(np.abs(vals))
        k = order[-1] if expanding else order[0]
        v = np.real(vecs[:, k])
        return v / np.linalg.norm(v)

    def unstable_vector(self, start: int = 0) -> np.ndarray:
        return self._eig_direction(start, True)

    def stable_vector(self, start: int = 0) -> np.ndarray:
        return self._eig_direction(start, False)

    def unstable_jacobian(self, start: int, n: int) -> float:
        """``J^u_n`` at the orbit point ``start`` (Euclidean chart norm)."""
        v = self.unstable_vector(start)
        log_j = 0.0
        for k in range(n):
            v = self.differentials[(start + k) % self.period] @ v
            nv = np.linalg.norm(v)
            log_j += math.log(nv)
            v = v / nv
        return float(math.exp(log_j))

    def stable_backward_jacobian(self, start: int, n: int) -> float:
        """``J^s_{-n}``: expansion of ``dF^{-n}`` along ``E_s`` at point ``start``."""
        # transported backwards, where E_s expands; the forward product
        # would lose the stable component to rounding
        p = self.period
        v = self.stable_vector(start)
        log_j = 0.0
        for k in range(1, n + 1):
            v = np.linalg.solve(self.differentials[(start - k) % p], v)
            nv = np.linalg.norm(v)
            log_j += math.log(nv)
            v = v / nv
        return float(math.exp(log_j))

    def lyapunov(self) -> float:
        vals = np.linalg.eigvals(self.monodromy(0))
        return float(np.log(np.max(np.abs(vals))) / self.period)


class OpenMapSystem:
    """A disjoint union of symplectic map pieces with a symbolic partition.

    Parameters
    ----------
    blocks
        Rectangles ``U_1..U_J`` (chart coordinates).
    pieces
        The map pieces ``F_ij``.
    n_letters
        Size of the partition alphabet.
    transitions
        0/1 matrix of allowed letter transitions.
    lambda_bounds
        ``(lambda0, lambda1)`` expansion exponents of the system.
    epsilon0
        Partition scale; letter cells have diameter at most ``4 * epsilon0``.
    """

    kind = "generic"

    def __init__(
        self,
        blocks: Sequence[Rect],
        pieces: Sequence[MapPiece],
        *,
        n_letters: int = 1,
        transitions=None,
        lambda_bounds: tuple[float, float] = (0.0, math.inf),
        epsilon0: float = 0.05,
        metadata: dict | None = None,
        name: str | None = None,
    ):
        self.blocks = tuple(blocks)
        self.pieces = tuple(pieces)
        self.n_letters = int(n_letters)
        if transitions is None:
            transitions = np.ones((self.n_letters, self.n_letters), dtype=int)
        self.transitions = np.asarray(transitions, dtype=int)
        self.lambda_bounds = tuple(float(v) for v in lambda_bounds)
        self.epsilon0 = float(epsilon0)
        self.metadata = dict(metadata or {})
        self.name = name or self.kind
        for p in self.pieces:
            if not (0 <= p.from_block < len(self.blocks) and 0 <= p.to_block < len(self.blocks)):
                raise ConfigurationError(f"piece {p.label!r} refers to a missing block")

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}: {len(self.blocks)} blocks, {len(self.pieces)} pieces>"

    # ------------------------------------------------------------------ maps

    def _locate(self, x, xi, block, image: bool):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        block = np.broadcast_to(np.asarray(block, dtype=int), x.shape)
        found = np.full(x.shape, -1, dtype=int)
        for k, piece in enumerate(self.pieces):
            b = piece.to_block if image else piece.from_block
            sel = (block == b) & np.isfinite(x) & np.isfinite(xi)
            if not sel.any():
                continue
            hit = np.zeros(x.shape, dtype=bool)
            member = piece.image_contains if image else piece.contains
            hit[sel] = member(x[sel], xi[sel])
            clash = hit & (found >= 0)
            if clash.any():
                j = int(np.flatnonzero(clash)[0])
                what = "images" if image else "domains"
                raise ConfigurationError(
                    f"overlapping piece {what} at ({x[j]:.6g}, {xi[j]:.6g}) in block {block[j]}: "
                    f"pieces {found[j]} and {k}"
                )
            found[hit] = k
        return found

    def piece_index(self, x, xi, block=0):
        """Index of the piece whose domain contains each point, -1 in the hole."""
        return self._locate(x, xi, block, image=False)

    def preimage_piece_index(self, x, xi, block=0):
        return self._locate(x, xi, block, image=True)

    def _apply(self, x, xi, block, image: bool):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        block = np.array(np.broadcast_to(np.asarray(block, dtype=int), x.shape))
        idx = self._locate(x, xi, block, image)
        nx = np.full(x.shape, np.nan)
        nxi = np.full(x.shape, np.nan)
        nb = np.full(x.shape, -1, dtype=int)
        for k in np.unique(idx[idx >= 0]):
            piece = self.pieces[k]
            sel = idx == k
            fn = piece.inverse if image else piece.forward
            nx[sel], nxi[sel] = fn(x[sel], xi[sel])
            nb[sel] = piece.from_block if image else piece.to_block
        return nx, nxi, nb, idx

    def forward(self, x, xi, block=0):
        """Vectorized ``F``; escaped points come back as NaN with block -1."""
        return self._apply(x, xi, block, image=False)

    def backward(self, x, xi, block=0):
        """Vectorized ``F^{-1}``."""
        return self._apply(x, xi, block, image=True)

    def differential(self, x, xi, block=0):
        """``d F`` at each point, shape ``(n, 2, 2)``; NaN in the hole."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        idx = self.piece_index(x, xi, block)
        out = np.full(x.shape + (2, 2), np.nan)
        for k in np.unique(idx[idx >= 0]):
            sel = idx == k
            out[sel] = self.pieces[k].differential(x[sel], xi[sel])
        return out

    def inverse_differential(self, x, xi, block=0):
        """``d F^{-1}`` at each point of the image, shape ``(n, 2, 2)``."""
        px, pxi, pb, idx = self.backward(x, xi, block)
        out = np.full(px.shape + (2, 2), np.nan)
        for k in np.unique(idx[idx >= 0]):
            sel = idx == k
            out[sel] = np.linalg.inv(self.pieces[k].differential(px[sel], pxi[sel]))
        return out

    def step(self, p: PhasePoint):
        """Image of one point: ``(piece index, PhasePoint)`` or ``None`` in the hole."""
        if not (math.isfinite(p.x) and math.isfinite(p.xi)):
            raise ValueError("phase point must be finite")
        nx, nxi, nb, idx = self.forward([p.x], [p.xi], p.block)
        if idx[0] < 0:
            return None
        return int(idx[0]), PhasePoint(float(nx[0]), float(nxi[0]), int(nb[0]))

    def orbit(self, p: PhasePoint, n: int) -> list[PhasePoint]:
        """``[p, F p, ..., F^n p]`` for ``n >= 0`` or the backward orbit for ``n < 0``."""
        pts = [p]
        x, xi, b = np.array([p.x]), np.array([p.xi]), np.array([p.block])
        for k in range(abs(n)):
            x, xi, b, idx = (self.forward if n > 0 else self.backward)(x, xi, b)
            if idx[0] < 0:
                raise EscapeError(k + 1)
            pts.append(PhasePoint(float(x[0]), float(xi[0]), int(b[0])))
        return pts

    def survivor_mask(self, x, xi, block, depth: int, direction: str = "both"):
        """Points whose orbit stays in the piece domains for ``depth`` steps."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        block = np.array(np.broadcast_to(np.asarray(block, dtype=int), x.shape))
        alive = np.ones(x.shape, dtype=bool)
        moves = []
        if direction in ("both", "forward"):
            moves.append(self.forward)
        if direction in ("both", "backward"):
            moves.append(self.backward)
        for move in moves:
            cx, cxi, cb = x.copy(), xi.copy(), block.copy()
            for _ in range(depth):
                live = np.flatnonzero(alive)
                if live.size == 0:
                    break
                nx, nxi, nb, idx = move(cx[live], cxi[live], cb[live])
                alive[live[idx < 0]] = False
                cx[live], cxi[live], cb[live] = nx, nxi, nb
        return alive

    # ------------------------------------------------------------- symbolic

    def letter_of(self, x, xi, block=0):
        """Partition letter of each point, -1 outside every cell."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(x.shape, -1, dtype=int)
        return out

    def admissible(self, word: Sequence[int]) -> bool:
        if any(not (0 <= q < self.n_letters) for q in word):
            return False
        return all(self.transitions[a, b] for a, b in zip(word[:-1], word[1:]))

    def admissible_words(self, n: int) -> Iterator[tuple]:
        """All words of length ``n`` allowed by the transition matrix, in lexicographic order."""
        if n <= 0:
            return
        stack = [(q,) for q in range(self.n_letters)]
        stack.reverse()
        while stack:
            w = stack.pop()
            if len(w) == n:
                yield w
                continue
            nxt = [(*w, b) for b in range(self.n_letters) if self.transitions[w[-1], b]]
            stack.extend(reversed(nxt))

    def count_words(self, n: int) -> int:
        if n <= 0:
            return 0
        v = np.ones(self.n_letters, dtype=object)
        t = self.transitions.astype(object)
        for _ in range(n - 1):
            v = t @ v
        return int(sum(v))

    def cyclically_admissible(self, word: Sequence[int]) -> bool:
        return self.admissible(word) and bool(self.transitions[word[-1], word[0]])

    def periodic_orbit(self, word: Sequence[int]) -> PeriodicOrbit:
        """The periodic orbit with the given cyclic letter code."""
        raise NotImplementedError(f"{type(self).__name__} has no periodic-orbit constructor")

    # ----------------------------------------------------------- directions

    def analytic_unstable_direction(self, x, xi, block):
        return None

    def analytic_stable_direction(self, x, xi, block):
        return None

    def unstable_direction(self, x, xi, block=0, depth: int = 12):
        """Unit vectors along ``E_u`` by transporting a vector along the past orbit.

        Points whose backward orbit escapes before ``depth`` use the longest
        available past.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        block = np.array(np.broadcast_to(np.asarray(block, dtype=int), x.shape))
        exact = self.analytic_unstable_direction(x, xi, block)
        if exact is not None:
            return exact
        return self._transport(x, xi, block, depth, past=True)

    def stable_direction(self, x, xi, block=0, depth: int = 12):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        block = np.array(np.broadcast_to(np.asarray(block, dtype=int), x.shape))
        exact = self.analytic_stable_direction(x, xi, block)
        if exact is not None:
            return exact
        return self._transport(x, xi, block, depth, past=False)

    def _transport(self, x, xi, block, depth, past, seed=(1.0, 0.6180339887)):
        move = self.backward if past else self.forward
        orbit = [(x, xi, block)]
        alive = np.ones(x.shape, dtype=bool)
        cx, cxi, cb = x, xi, block
        for _ in range(depth):
            cx, cxi, cb, idx = move(cx, cxi, cb)
            alive = alive & (idx >= 0)
            orbit.append((cx, cxi, cb))
        # start from the far end with a generic vector and push it back towards the points
        v = np.tile(np.asarray(seed, dtype=float), (x.size, 1))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        for k in range(depth, 0, -1):
            px, pxi, pb = orbit[k]
            ok = np.isfinite(px) & np.isfinite(pxi)
            if not ok.any():
                continue
            if past:
                d = np.full(px.shape + (2, 2), np.nan)
                d[ok] = self.differential(px[ok], pxi[ok], pb[ok])
            else:
                d = np.full(px.shape + (2, 2), np.nan)
                d[ok] = self.inverse_differential(px[ok], pxi[ok], pb[ok])
            w = np.einsum("nij,nj->ni", np.where(ok[:, None, None], d, np.eye(2)), v)
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            v = np.where(ok[:, None], w, v)
        return v

    # ---------------------------------------------------------- structural

    def with_pieces(self, keep: Sequence[int]) -> "OpenMapSystem":
        """Copy of the system restricted to the listed pieces."""
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.pieces = tuple(self.pieces[k] for k in keep)
        clone.metadata = dict(self.metadata, restricted=list(keep))
        return clone

    def random_domain_points(self, piece_index: int, n: int, rng=None):
        """Uniform samples inside a piece domain (rejection from its bounding box)."""
        rng = np.random.default_rng(rng)
        piece = self.pieces[piece_index]
        xs, xis = [], []
        have = 0
        for _ in range(200):
            x, xi = piece.domain.sample(rng, max(4 * n, 64))
            keep = piece.contains(x, xi)
            xs.append(x[keep])
            xis.append(xi[keep])
            have += int(keep.sum())
            if have >= n:
                break
        return np.concatenate(xs)[:n], np.concatenate(xis)[:n]

    def check_invariants(self, n: int = 1000, rng=None, det_tol=1e-8, inv_tol=1e-10):
        """Symplecticity and inverse consistency on random domain samples.

        Returns a dict of the worst defects per piece; raises on violation.
        """
        rng = np.random.default_rng(rng)
        report = {}
        for k, piece in enumerate(self.pieces):
            x, xi = self.random_domain_points(k, n, rng)
            if x.size == 0:
                continue
            d = piece.differential(x, xi)
            det_defect = float(np.max(np.abs(np.linalg.det(d) - 1.0)))
            fx, fxi = piece.forward(x, xi)
            bx, bxi = piece.inverse(fx, fxi)
            inv_defect = float(np.max(np.hypot(bx - x, bxi - xi)))
            if not np.all(self.blocks[piece.to_block].contains(fx, fxi)):
                raise ConfigurationError(f"piece {k} maps outside its target block")
            if det_defect > det_tol:
                raise ConfigurationError(f"piece {k} is not symplectic: |det - 1| = {det_defect:.3g}")
            if inv_defect > inv_tol:
                raise ConfigurationError(f"piece {k} inverse mismatch {inv_defect:.3g}")
            report[k] = {"det_defect": det_defect, "inverse_defect": inv_defect}
        return report


# --------------------------------------------------------------------------
# Linear model and linear charts


class LinearSystem(OpenMapSystem):
    """A single hyperbolic linear piece ``rho -> A rho`` on a box around 0.

    The only trapped point is the fixed point at the origin; the partition has
    a single letter, the ball ``B(0, 2 epsilon0)``.
    """

    kind = "linear"

    def __init__(self, matrix, half_widths=(1.0, 1.0), epsilon0=None, name=None):
        a = np.asarray(matrix, dtype=float)
        if a.shape != (2, 2):
            raise ConfigurationError("linear system needs a 2x2 matrix")
        if abs(np.linalg.det(a) - 1.0) > 1e-12:
            raise ConfigurationError("linear piece must have determinant 1")
        vals, vecs = np.linalg.eig(a)
        if np.iscomplexobj(vals) and np.any(np.abs(vals.imag) > 0):
            raise ConfigurationError("linear piece is not hyperbolic")
        vals = vals.real
        order = np.argsort(np.abs(vals))
        if abs(vals[order[-1]]) <= 1.0:
            raise ConfigurationError("linear piece is not hyperbolic")
        self.matrix = a
        self.inverse_matrix = np.linalg.inv(a)
        self._eu = vecs[:, order[-1]].real / np.linalg.norm(vecs[:, order[-1]].real)
        self._es = vecs[:, order[0]].real / np.linalg.norm(vecs[:, order[0]].real)
        hx, hxi = (float(v) for v in half_widths)
        domain = Rect(-hx, hx, -hxi, hxi)
        corners = np.array([[sx * hx, sy * hxi] for sx in (-1, 1) for sy in (-1, 1)])
        img = corners @ a.T
        bx = max(hx, float(np.max(np.abs(img[:, 0]))))
        bxi = max(hxi, float(np.max(np.abs(img[:, 1]))))
        # closed outer edge so that images of the domain stay strictly inside
        block = Rect(-bx * (1 + 1e-12), bx * (1 + 1e-12), -bxi * (1 + 1e-12), bxi * (1 + 1e-12))
        ai = self.inverse_matrix

        def fwd(x, xi):
            return a[0, 0] * x + a[0, 1] * xi, a[1, 0] * x + a[1, 1] * xi

        def inv(x, xi):
            return ai[0, 0] * x + ai[0, 1] * xi, ai[1, 0] * x + ai[1, 1] * xi

        def dif(x, xi):
            return np.broadcast_to(a, np.shape(x) + (2, 2)).copy()

        piece = MapPiece(0, 0, domain, fwd, inv, dif, label="linear")
        lam = float(np.log(np.max(np.abs(vals))))
        if epsilon0 is None:
            epsilon0 = min(hx, hxi) / 4
        if 2 * epsilon0 > min(hx, hxi):
            raise ConfigurationError("epsilon0 too large: the letter cell must fit in the piece domain")
        super().__init__(
            [block],
            [piece],
            n_letters=1,
            transitions=[[1]],
            lambda_bounds=(lam, lam),
            epsilon0=epsilon0,
            metadata={"matrix": a.tolist(), "half_widths": [hx, hxi]},
            name=name or "linear",
        )

    def letter_of(self, x, xi, block=0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        inside = np.hypot(x, xi) < 2 * self.epsilon0
        return np.where(inside, 0, -1)

    def analytic_unstable_direction(self, x, xi, block):
        return np.tile(self._eu, (np.size(x), 1))

    def analytic_stable_direction(self, x, xi, block):
        return np.tile(self._es, (np.size(x), 1))

    def periodic_orbit(self, word):
        if any(q != 0 for q in word):
            raise ValueError("the linear model has a single letter 0")
        n = len(word)
        return PeriodicOrbit(tuple(word), [PhasePoint(0.0, 0.0, 0)] * n, np.tile(self.matrix, (n, 1, 1)))


def linear_model_system(half_widths=(1.0, 1.0), epsilon0=None) -> LinearSystem:
    """The model map ``(x, xi) -> (x/2, 2 xi)`` restricted to a box."""
    return LinearSystem([[0.5, 0.0], [0.0, 2.0]], half_widths, epsilon0, name="linear-model")


def linear_chart_system(matrix, half_width=1.0, epsilon0=None) -> LinearSystem:
    """A linear hyperbolic map on the chart ``[-r, r]^2``."""
    return LinearSystem(matrix, (half_width, half_width), epsilon0, name="linear-chart")


# --------------------------------------------------------------------------
# Open baker maps


def _digits_value(digits, base):
    v = 0.0
    for d in reversed(digits):
        v = (v + d) / base
    return v


class BakerSystem(OpenMapSystem):
    """Open baker map on the unit square keeping branches ``kept``.

    Branch ``j`` sends ``[j/L, (j+1)/L) x [0, 1)`` to ``[0, 1) x [j/L, (j+1)/L)``
    by ``(x, xi) -> (L x - j, (xi + j)/L)``.  An optional kick
    ``xi -> xi + kick * g(x)`` before the branch map gives a smooth nonlinear
    perturbation (``g(x) = sin(2 pi x) / (2 pi)``); the kicked version uses
    the momentum window ``xi_window`` so that the trapped set stays away from
    the block edge.

    Letters are the x-cylinders of ``letter_depth`` kept digits.
    """

    kind = "baker"

    def __init__(self, base=3, kept=(0, 2), letter_depth=1, kick=0.0, xi_window=None, name=None):
        base = int(base)
        kept = tuple(sorted(set(int(k) for k in kept)))
        if base < 2:
            raise ConfigurationError("baker base must be at least 2")
        if not kept:
            raise ConfigurationError("at least one branch must be kept")
        if any(k < 0 or k >= base for k in kept):
            raise ConfigurationError(f"kept branches must lie in 0..{base - 1}")
        if len(kept) == base:
            warnings.warn("closed system: (Fractal) fails, P(phi_u) >= 0", stacklevel=2)
        if xi_window is None:
            xi_window = (0.0, 1.0) if kick == 0.0 else (-0.4, 1.4)
        w0, w1 = (float(v) for v in xi_window)
        self.base = base
        self.kept = kept
        self.kick = float(kick)
        self.letter_depth = int(letter_depth)
        self.xi_window = (w0, w1)
        L = base
        eps = self.kick

        def g(x):
            return np.sin(2 * np.pi * x) / (2 * np.pi)

        def dg(x):
            return np.cos(2 * np.pi * x)

        pieces = []
        for j in kept:
            dom = Rect(j / L, (j + 1) / L, w0, w1)

            def fwd(x, xi, j=j):
                nx = L * x - j
                nxi = (xi + eps * g(x) + j) / L
                # rounding can land on the open upper edge of the image; step back one ulp
                nx = np.where((nx + j) / L >= (j + 1) / L, np.nextafter(nx, -np.inf), nx)
                back = L * nxi - j - eps * g((nx + j) / L)
                nxi = np.where(back >= w1, np.nextafter(nxi, -np.inf), nxi)
                return nx, nxi

            def inv(x, xi, j=j):
                px = (x + j) / L
                return px, L * xi - j - eps * g(px)

            def dif(x, xi):
                d = np.zeros(np.shape(x) + (2, 2))
                d[..., 0, 0] = L
                d[..., 1, 0] = eps * dg(x) / L
                d[..., 1, 1] = 1.0 / L
                return d

            pieces.append(MapPiece(0, 0, dom, fwd, inv, dif, label=f"branch{j}"))

        words = [w for w in itertools.product(kept, repeat=self.letter_depth)]
        self.letter_words = words
        index = {w: k for k, w in enumerate(words)}
        trans = np.zeros((len(words), len(words)), dtype=int)
        for w in words:
            for d in kept:
                trans[index[w], index[(*w[1:], d)]] = 1
        lam = math.log(L)
        super().__init__(
            [Rect(0.0, 1.0, w0, w1)],
            pieces,
            n_letters=len(words),
            transitions=trans,
            lambda_bounds=(lam, lam),
            epsilon0=0.25 * L ** (-self.letter_depth),
            metadata={"base": L, "kept": list(kept), "kick": eps, "letter_depth": self.letter_depth},
            name=name or f"baker{L}{''.join(map(str, kept))}",
        )
        if eps != 0.0:
            self._check_images_disjoint()

    def _check_images_disjoint(self):
        rng = np.random.default_rng(0)
        x, xi = self.blocks[0].sample(rng, 20000)
        self.preimage_piece_index(x, xi, 0)

    @property
    def closed(self) -> bool:
        return len(self.kept) == self.base

    def letter_of(self, x, xi, block=0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        L, d = self.base, self.letter_depth
        cell = np.floor(x * L**d).astype(int)
        ok = (x >= 0) & (x < 1)
        out = np.full(x.shape, -1, dtype=int)
        lookup = {}
        for k, w in enumerate(self.letter_words):
            lookup[sum(c * L ** (d - 1 - i) for i, c in enumerate(w))] = k
        for c, k in lookup.items():
            out[ok & (cell == c)] = k
        return out

    def letter_interval(self, letter: int):
        w = self.letter_words[letter]
        lo = _digits_value(w, self.base)
        return lo, lo + self.base ** (-self.letter_depth)

    def word_digits(self, word: Sequence[int]) -> list[int]:
        """Branch digits followed by a letter word (first digit of each letter)."""
        return [self.letter_words[q][0] for q in word]

    def analytic_unstable_direction(self, x, xi, block):
        if self.kick != 0.0:
            return None
        return np.tile(np.array([1.0, 0.0]), (np.size(x), 1))

    def analytic_stable_direction(self, x, xi, block):
        if self.kick != 0.0:
            return None
        return np.tile(np.array([0.0, 1.0]), (np.size(x), 1))

    def periodic_orbit(self, word):
        word = tuple(int(q) for q in word)
        if not self.cyclically_admissible(word):
            raise ValueError(f"word {word} is not cyclically admissible")
        digits = self.word_digits(word)
        p = len(digits)
        L = self.base
        pts = []
        for i in range(p):
            fut = digits[i:] + digits[:i]
            past = list(reversed(digits[:i])) + list(reversed(digits[i:]))
            x = sum(d * L ** (p - 1 - k) for k, d in enumerate(fut)) / (L**p - 1)
            xi = sum(d * L ** (p - 1 - k) for k, d in enumerate(past)) / (L**p - 1)
            pts.append(PhasePoint(float(x), float(xi), 0))
        if self.kick != 0.0:
            pts = self._relax_periodic(pts, p)
        # pieces are taken from the code, since points such as x = 1 sit on
        # the closed edge of their branch
        diffs = np.stack(
            [self.pieces[self.kept.index(d)].differential(np.array([q.x]), np.array([q.xi]))[0] for d, q in zip(digits, pts)]
        )
        return PeriodicOrbit(word, pts, diffs)

    def _relax_periodic(self, pts, p):
        # x-dynamics is unaffected by the kick; the xi-dynamics contracts, so
        # forward iteration around the cycle converges to the periodic point
        x = np.array([pts[0].x])
        xi = np.array([pts[0].xi])
        xs = [q.x for q in pts]
        for _ in range(60):
            for i in range(p):
                _, xi_new = self._branch_forward(xs[i], xi)
                xi = xi_new
        out = []
        for i in range(p):
            out.append(PhasePoint(float(xs[i]), float(xi[0]), 0))
            _, xi = self._branch_forward(xs[i], xi)
        return out

    def _branch_forward(self, x, xi):
        j = int(math.floor(x * self.base))
        g = math.sin(2 * math.pi * x) / (2 * math.pi)
        return self.base * x - j, (xi + self.kick * g + j) / self.base


def open_baker_system(base=3, kept=(0, 2), letter_depth=1) -> BakerSystem:
    return BakerSystem(base, kept, letter_depth)


def kicked_baker_system(base=3, kept=(0, 2), kick=0.05, xi_window=(-0.4, 1.4), letter_depth=1) -> BakerSystem:
    return BakerSystem(base, kept, letter_depth, kick=kick, xi_window=xi_window, name="kicked-baker")


# --------------------------------------------------------------------------
# Sampling helpers


def trapped_set_sample(system: OpenMapSystem, depth: int, resolution: int = 256):
    """Grid cell centres surviving ``depth`` forward and backward steps.

    Returns ``(x, xi, block)`` arrays; the set shrinks as ``depth`` grows.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    xs, xis, bs = [], [], []
    for b, rect in enumerate(system.blocks):
        x, xi = rect.grid(resolution)
        keep = system.survivor_mask(x, xi, b, depth)
        xs.append(x[keep])
        xis.append(xi[keep])
        bs.append(np.full(int(keep.sum()), b, dtype=int))
    return np.concatenate(xs), np.concatenate(xis), np.concatenate(bs)


def survivors_to_rows(x, xi, block, depth):
    return [
        {"x": repr(float(a)), "xi": repr(float(b)), "block": int(c), "depth": int(depth)}
        for a, b, c in zip(x, xi, block)
    ]


@dataclass
class SymbolicWord:
    """A finite word over the partition alphabet."""

    letters: tuple
    alphabet_size: int = field(default=0, repr=False)

    def __post_init__(self):
        self.letters = tuple(int(q) for q in self.letters)
        if not self.letters:
            raise ValueError("words have length at least 1")
        if self.alphabet_size and any(not (0 <= q < self.alphabet_size) for q in self.letters):
            raise ValueError(f"letters must lie in 0..{self.alphabet_size - 1}")

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __add__(self, other):
        return SymbolicWord(self.letters + tuple(other), self.alphabet_size)
