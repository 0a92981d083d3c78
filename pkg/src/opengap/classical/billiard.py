"""Billiard maps for finitely many disjoint disks in Birkhoff coordinates.

A boundary point of disk ``j`` is ``c_j + a_j (cos theta, sin theta)`` with
arclength ``s = a_j theta`` in ``[0, 2 pi a_j)``.  The outgoing velocity is
``v = sqrt(1 - eta^2) n + eta t`` with ``n`` the outer normal and ``t`` the
counter-clockwise tangent, so ``eta`` is the sine of the reflection angle.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import optimize

from ..errors import ConfigurationError, NumericalError
from .systems import MapPiece, OpenMapSystem, PeriodicOrbit, PhasePoint, Rect


def _frame(theta):
    n = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    t = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    return n, t


def convex_hull_clearance(ci, ai, cj, aj, ck, ak) -> float:
    """Gap between disk ``k`` and the convex hull of disks ``i`` and ``j``.

    The hull is the union of the disks centred on ``(1-t) ci + t cj`` with
    radius ``(1-t) ai + t aj``; a positive value means no intersection.
    """
    ci, cj, ck = (np.asarray(c, dtype=float) for c in (ci, cj, ck))

    def gap(t):
        c = (1 - t) * ci + t * cj
        return float(np.linalg.norm(ck - c) - ((1 - t) * ai + t * aj) - ak)

    ts = np.linspace(0.0, 1.0, 201)
    k = int(np.argmin([gap(t) for t in ts]))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
    res = optimize.minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return min(gap(ts[k]), float(res.fun))


class DiskSystem(OpenMapSystem):
    """Open billiard map between disjoint disks; one block and one letter per disk."""

    kind = "disks"

    def __init__(self, centers, radii, epsilon0=None, check_eclipse=True, name=None):
        centers = np.asarray(centers, dtype=float)
        radii = np.asarray(radii, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != 2 or len(radii) != len(centers):
            raise ConfigurationError("need one 2d centre per radius")
        if len(radii) < 2:
            raise ConfigurationError("at least two disks are needed")
        if np.any(radii <= 0):
            raise ConfigurationError("radii must be positive")
        J = len(radii)
        for i, j in itertools.combinations(range(J), 2):
            if np.linalg.norm(centers[i] - centers[j]) <= radii[i] + radii[j]:
                raise ConfigurationError(f"disks {i} and {j} overlap")
        clearances = {}
        for i, j in itertools.combinations(range(J), 2):
            for k in range(J):
                if k in (i, j):
                    continue
                g = convex_hull_clearance(centers[i], radii[i], centers[j], radii[j], centers[k], radii[k])
                clearances[f"{k}|{i},{j}"] = g
                if check_eclipse and g <= 0:
                    raise ConfigurationError(
                        f"eclipse condition violated: disk {k} meets the convex hull of disks {i} and {j}"
                    )
        self.centers = centers
        self.radii = radii
        blocks = [Rect(0.0, 2 * math.pi * a, -1.0, 1.0) for a in radii]
        pieces = []
        for j in range(J):
            for i in range(J):
                if i != j:
                    pieces.append(self._make_piece(j, i, blocks[j]))
        trans = 1 - np.eye(J, dtype=int)
        if epsilon0 is None:
            epsilon0 = 0.25 * float(np.min(radii))
        super().__init__(
            blocks,
            pieces,
            n_letters=J,
            transitions=trans,
            lambda_bounds=(0.0, math.inf),
            epsilon0=epsilon0,
            metadata={
                "centers": centers.tolist(),
                "radii": radii.tolist(),
                "eclipse_clearance": clearances,
                "non_eclipse": all(g > 0 for g in clearances.values()),
            },
            name=name or f"{J}-disk",
        )
        self.lambda_bounds = self._estimate_lambda_bounds()

    # ---------------------------------------------------------- geometry

    def boundary_point(self, j, s):
        a = self.radii[j]
        theta = np.asarray(s, dtype=float) / a
        n, t = _frame(theta)
        return self.centers[j] + a * n, n, t

    def _ray(self, j, s, eta):
        p, n, t = self.boundary_point(j, s)
        eta = np.asarray(eta, dtype=float)
        v = np.sqrt(np.clip(1 - eta**2, 0.0, None))[..., None] * n + eta[..., None] * t
        return p, v

    def _hit_time(self, p, v, k):
        w = p - self.centers[k]
        b = np.einsum("...i,...i->...", w, v)
        cc = np.einsum("...i,...i->...", w, w) - self.radii[k] ** 2
        disc = b * b - cc
        with np.errstate(invalid="ignore"):
            tau = -b - np.sqrt(disc)
        return np.where((disc > 0) & (tau > 1e-14), tau, np.inf)

    def first_hit(self, j, s, eta):
        """Index of the first disk hit from ``(s, eta)`` on disk ``j`` (-1 if none)."""
        p, v = self._ray(j, s, eta)
        times = np.stack(
            [self._hit_time(p, v, k) if k != j else np.full(p.shape[:-1], np.inf) for k in range(len(self.radii))]
        )
        k = np.argmin(times, axis=0)
        best = np.min(times, axis=0)
        return np.where(np.isfinite(best), k, -1)

    def _collide(self, j, i, s, eta):
        p, v = self._ray(j, s, eta)
        tau = self._hit_time(p, v, i)
        q = p + tau[..., None] * v
        m = (q - self.centers[i]) / self.radii[i]
        vn = np.einsum("...i,...i->...", v, m)
        vr = v - 2 * vn[..., None] * m
        theta = np.arctan2(m[..., 1], m[..., 0]) % (2 * math.pi)
        _, t1 = _frame(theta)
        s1 = self.radii[i] * theta
        s1 = np.where(s1 >= 2 * math.pi * self.radii[i], 0.0, s1)
        eta1 = np.einsum("...i,...i->...", vr, t1)
        return s1, eta1, tau, -vn

    def _make_piece(self, j, i, block):
        sys_ = self

        def fwd(s, eta):
            s1, e1, _, _ = sys_._collide(j, i, s, eta)
            return s1, e1

        def inv(s, eta):
            s0, e0, _, _ = sys_._collide(i, j, s, -np.asarray(eta, dtype=float))
            return s0, -e0

        def dif(s, eta):
            return sys_._differential(j, i, s, eta)

        def in_domain(s, eta):
            return (sys_.first_hit(j, s, eta) == i) & (np.abs(eta) < 1)

        def in_image(s, eta):
            eta = np.asarray(eta, dtype=float)
            return (sys_.first_hit(i, s, -eta) == j) & (np.abs(eta) < 1)

        return MapPiece(j, i, block, fwd, inv, dif, in_domain=in_domain, in_image=in_image, label=f"F{i}{j}")

    def _differential(self, j, i, s, eta):
        eta = np.asarray(eta, dtype=float)
        _, eta1, tau, c1 = self._collide(j, i, s, eta)
        c0 = np.sqrt(1 - eta**2)
        k0 = 1.0 / self.radii[j]
        k1 = 1.0 / self.radii[i]
        d = np.empty(np.shape(eta) + (2, 2))
        d[..., 0, 0] = -(c0 + tau * k0) / c1
        d[..., 0, 1] = -tau / (c0 * c1)
        d[..., 1, 0] = -(c0 * k1 + c1 * k0 + tau * k0 * k1)
        d[..., 1, 1] = -(c1 + tau * k1) / c0
        return d

    # ------------------------------------------------------------ symbolic

    def letter_of(self, x, xi, block=0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.broadcast_to(np.asarray(block, dtype=int), x.shape).copy()

    def periodic_orbit(self, word):
        """Periodic orbit bouncing on the disks of ``word`` in cyclic order.

        Found as a critical point of the total length, which is the
        generating function of the billiard map.
        """
        word = tuple(int(q) for q in word)
        if len(word) < 2 or not self.cyclically_admissible(word):
            raise ValueError(f"word {word} is not cyclically admissible")
        p = len(word)
        c = self.centers[list(word)]
        a = self.radii[list(word)]
        nxt = np.roll(c, -1, axis=0)
        prv = np.roll(c, 1, axis=0)
        u = (nxt - c) / np.linalg.norm(nxt - c, axis=1, keepdims=True) + (prv - c) / np.linalg.norm(
            prv - c, axis=1, keepdims=True
        )
        theta0 = np.arctan2(u[:, 1], u[:, 0])

        def pts(theta):
            n, t = _frame(theta)
            return c + a[:, None] * n, n, t

        def grad(theta):
            q, n, t = pts(theta)
            d_next = np.roll(q, -1, axis=0) - q
            d_prev = q - np.roll(q, 1, axis=0)
            u_next = d_next / np.linalg.norm(d_next, axis=1, keepdims=True)
            u_prev = d_prev / np.linalg.norm(d_prev, axis=1, keepdims=True)
            return a * np.einsum("ki,ki->k", u_prev - u_next, t)

        def hess(theta, h=1e-7):
            return np.column_stack([(grad(theta + h * e) - grad(theta - h * e)) / (2 * h) for e in np.eye(p)])

        sol = optimize.root(grad, theta0, jac=hess, method="hybr", tol=1e-14)
        theta = sol.x
        if np.max(np.abs(grad(theta))) > 1e-9:
            raise NumericalError(f"periodic orbit search failed for word {word}")
        q, n, t = pts(theta)
        d_next = np.roll(q, -1, axis=0) - q
        v = d_next / np.linalg.norm(d_next, axis=1, keepdims=True)
        if np.any(np.einsum("ki,ki->k", v, n) <= 0):
            raise NumericalError(f"word {word} gives a non-physical orbit")
        s = (a * (theta % (2 * math.pi)))
        eta = np.einsum("ki,ki->k", v, t)
        points = [PhasePoint(float(s[k]), float(eta[k]), word[k]) for k in range(p)]
        diffs = np.stack([self._differential(word[k], word[(k + 1) % p], s[k : k + 1], eta[k : k + 1])[0] for k in range(p)])
        # the orbit must not be shadowed by another disk
        for k in range(p):
            if self.first_hit(word[k], s[k : k + 1], eta[k : k + 1])[0] != word[(k + 1) % p]:
                raise NumericalError(f"word {word} is blocked by another disk")
        return PeriodicOrbit(word, points, diffs)

    def _estimate_lambda_bounds(self, max_len: int = 4):
        """Expansion exponents from per-step unstable factors on short cycles.

        The bounds are widened by 10 percent so that they bracket nearby
        trapped points as well; the adapted metric is not used.
        """
        logs = []
        seen = set()
        for n in range(2, max_len + 1):
            for w in self.admissible_words(n):
                if not self.cyclically_admissible(w):
                    continue
                key = min(w[k:] + w[:k] for k in range(n))
                if key in seen:
                    continue
                seen.add(key)
                try:
                    orb = self.periodic_orbit(w)
                except NumericalError:
                    continue
                for k in range(n):
                    logs.append(math.log(orb.unstable_jacobian(k, 1)))
        if not logs:
            return (0.0, math.inf)
        return (0.9 * min(logs), 1.1 * max(logs))


def three_disk_system(centers=None, radii=(1.0, 1.0, 1.0), side=6.0, **kw) -> DiskSystem:
    """Three disks, by default at the vertices of an equilateral triangle of side ``side``."""
    if centers is None:
        r = side / math.sqrt(3)
        centers = [(r * math.cos(phi), r * math.sin(phi)) for phi in (math.pi / 2, math.pi / 2 + 2 * math.pi / 3, math.pi / 2 + 4 * math.pi / 3)]
    if len(radii) != 3 or len(centers) != 3:
        raise ConfigurationError("three_disk_system needs exactly three centres and radii")
    return DiskSystem(centers, radii, **kw)


def two_disk_system(distance=6.0, radius=1.0, **kw) -> DiskSystem:
    return DiskSystem([(0.0, 0.0), (distance, 0.0)], [radius, radius], **kw)
