"""Unstable and stable slope fields by the graph transform.

The unstable direction near the trapped set is written as
``R(v_u + lambda v_s)`` for a frame ``(v_u, v_s)``.  The slope field
``lambda`` is the fixed point of

    (T lambda)(rho') = chi(rho') t(F^{-1} rho', lambda(F^{-1} rho')),
    t(rho, lam) = (lam d + c) / (a + lam b),

where ``[[a, b], [c, d]]`` is ``dF`` written in the frames at ``rho`` and
``F(rho)``.  Its derivative ``alpha = d lambda`` is the fixed point of the
fiber map ``G_lambda``.  Fields live on a uniform grid and are evaluated
off-grid by cubic spline interpolation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .classical.systems import OpenMapSystem
from .errors import ConfigurationError, NumericalError
from .profiles import interval_cutoff


class BunchingError(ConfigurationError):
    """Frame coefficients violate the eta-bounds."""


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid ``xs x xis`` (arrays indexed ``[i_x, i_xi]``)."""

    xs: np.ndarray
    xis: np.ndarray

    @classmethod
    def nodes(cls, x0, x1, nx, xi0=None, xi1=None, nxi=None):
        xi0 = x0 if xi0 is None else xi0
        xi1 = x1 if xi1 is None else xi1
        nxi = nx if nxi is None else nxi
        return cls(np.linspace(x0, x1, nx), np.linspace(xi0, xi1, nxi))

    @classmethod
    def cells(cls, x0, x1, nx, xi0, xi1, nxi):
        hx = (x1 - x0) / nx
        hxi = (xi1 - xi0) / nxi
        return cls(x0 + (np.arange(nx) + 0.5) * hx, xi0 + (np.arange(nxi) + 0.5) * hxi)

    @property
    def shape(self):
        return (len(self.xs), len(self.xis))

    @property
    def hx(self):
        return float(self.xs[1] - self.xs[0])

    @property
    def hxi(self):
        return float(self.xis[1] - self.xis[0])

    @property
    def spacing(self):
        return max(self.hx, self.hxi)

    def mesh(self):
        return np.meshgrid(self.xs, self.xis, indexing="ij")

    def flat(self):
        gx, gxi = self.mesh()
        return gx.ravel(), gxi.ravel()

    def interpolate(self, values, x, xi, order: int = 3):
        """Spline interpolation of a grid field at arbitrary points (clamped at the edges)."""
        ix = (np.asarray(x) - self.xs[0]) / self.hx
        ixi = (np.asarray(xi) - self.xis[0]) / self.hxi
        return ndimage.map_coordinates(values, [ix, ixi], order=order, mode="nearest")

    def gradient(self, values, order: int = 4):
        """Central-difference gradient ``(d/dx, d/dxi)`` of order 2, 4 or 6 in the interior."""
        stencils = {
            4: np.array([1, -8, 0, 8, -1]) / 12.0,
            6: np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0,
        }
        if order not in (2, 4, 6):
            raise ValueError("order must be 2, 4 or 6")
        out = []
        for axis, h in ((0, self.hx), (1, self.hxi)):
            g = np.gradient(values, h, axis=axis, edge_order=2)
            if order > 2 and values.shape[axis] > order:
                w = stencils[order]
                k = order // 2
                v = np.moveaxis(values, axis, 0)
                gh = np.moveaxis(g, axis, 0).copy()
                m = v.shape[0]
                gh[k:m - k] = sum(c * v[j:m - 2 * k + j] for j, c in enumerate(w) if c) / h
                g = np.moveaxis(gh, 0, axis)
            out.append(g)
        return np.stack(out, axis=-1)


# --------------------------------------------------------------------------
# Frames


@dataclass
class FrameField:
    """Smooth unit vector fields ``v_u``, ``v_s`` given as vectorized callables."""

    vu: Callable
    vs: Callable
    label: str = ""

    @classmethod
    def constant(cls, vu, vs, label="constant"):
        vu = np.asarray(vu, dtype=float)
        vs = np.asarray(vs, dtype=float)
        vu = vu / np.linalg.norm(vu)
        vs = vs / np.linalg.norm(vs)
        if abs(vu[0] * vs[1] - vu[1] * vs[0]) < 1e-8:
            raise ConfigurationError("frame vectors are parallel")
        return cls(
            lambda x, xi: np.tile(vu, (np.size(x), 1)),
            lambda x, xi: np.tile(vs, (np.size(x), 1)),
            label,
        )

    @classmethod
    def from_samples(cls, x, xi, vu, vs, width, label="mollified", max_samples: int = 1500):
        """Gaussian-weighted extension of vectors known at sample points.

        Vectors are sign-aligned with the first sample before averaging.
        """
        pts = np.column_stack([x, xi])
        vu = _align(np.asarray(vu, dtype=float))
        vs = _align(np.asarray(vs, dtype=float))
        if np.allclose(vu, vu[0], atol=1e-13) and np.allclose(vs, vs[0], atol=1e-13):
            return cls.constant(vu[0], vs[0], label=label + "/constant")
        if len(pts) > max_samples:
            keep = np.linspace(0, len(pts) - 1, max_samples).round().astype(int)
            pts, vu, vs = pts[keep], vu[keep], vs[keep]

        def make(vecs):
            def field_(qx, qxi):
                q = np.column_stack([np.ravel(qx), np.ravel(qxi)])
                out = np.empty((len(q), 2))
                # exact Gaussian sums keep the field smooth; chunks bound the memory
                for lo in range(0, len(q), 4096):
                    d2 = np.sum((q[lo:lo + 4096, None, :] - pts[None, :, :]) ** 2, axis=-1)
                    logw = -0.5 * d2 / width**2
                    w = np.exp(logw - logw.max(axis=1, keepdims=True))
                    out[lo:lo + 4096] = w @ vecs
                return out / np.linalg.norm(out, axis=1, keepdims=True)

            return field_

        return cls(make(vu), make(vs), label)

    def matrix(self, x, xi):
        """``V = [v_u | v_s]`` at each point, shape ``(n, 2, 2)``."""
        u = self.vu(x, xi)
        s = self.vs(x, xi)
        return np.stack([u, s], axis=-1)


def _align(v):
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    sign = np.where(v @ v[0] < 0, -1.0, 1.0)
    return v * sign[:, None]


def power_iteration_frames(system: OpenMapSystem, x, xi, block=0, depth: int = 2, width=None) -> FrameField:
    """Frames from ``depth`` steps of power iteration at sample points.

    ``v_u`` pushes a generic vector forward along the past orbit and ``v_s``
    pushes one backward along the future orbit; the result is extended
    smoothly off the samples.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    b = np.broadcast_to(np.asarray(block), x.shape).copy()
    vu = system._transport(x, xi, b, depth, past=True, seed=(1.0, 0.0))
    vs = system._transport(x, xi, b, depth, past=False, seed=(0.0, 1.0))
    if width is None:
        width = 2.0 * _typical_spacing(x, xi)
    return FrameField.from_samples(x, xi, vu, vs, width, label=f"power-iteration depth {depth}")


def _typical_spacing(x, xi):
    if len(x) < 2:
        return 1.0
    tree = cKDTree(np.column_stack([x, xi]))
    d, _ = tree.query(np.column_stack([x, xi]), k=2)
    return float(np.median(d[:, 1])) or 1.0


def frame_coefficients(system: OpenMapSystem, frames: FrameField, x, xi, block=0, inverse=False):
    """Coefficients ``(a, b, c, d)`` of ``dF`` from the frame at ``rho`` to the frame at ``F(rho)``.

    With ``inverse=True`` the same is done for ``F^{-1}`` with the roles of
    ``v_u`` and ``v_s`` exchanged.  Points in the hole give NaN.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if inverse:
        D = system.inverse_differential(x, xi, block)
        nx, nxi, _, idx = system.backward(x, xi, block)
        swap = [1, 0]
    else:
        D = system.differential(x, xi, block)
        nx, nxi, _, idx = system.forward(x, xi, block)
        swap = [0, 1]
    coef = np.full((x.size, 2, 2), np.nan)
    ok = idx >= 0
    if ok.any():
        V0 = frames.matrix(x[ok], xi[ok])[:, :, swap]
        V1 = frames.matrix(nx[ok], nxi[ok])[:, :, swap]
        coef[ok] = np.linalg.solve(V1, D[ok] @ V0)
    return coef[:, 0, 0], coef[:, 0, 1], coef[:, 1, 0], coef[:, 1, 1]


def t_map(a, b, c, d, lam):
    return (lam * d + c) / (a + lam * b)


def dt_dlambda(a, b, c, d, lam):
    return d / (a + lam * b) - b * (lam * d + c) / (a + lam * b) ** 2


def kappa_eta(eta: float) -> float:
    """Contraction bound ``(1-3 eta)/(1+eta) + eta (1-eta)/(1+eta)^2``."""
    return (1 - 3 * eta) / (1 + eta) + eta * (1 - eta) / (1 + eta) ** 2


# --------------------------------------------------------------------------
# Slope and covector fields


@dataclass
class SlopeField:
    values: np.ndarray
    cutoff: np.ndarray
    grid: Grid

    def __post_init__(self):
        if np.nanmax(np.abs(self.values)) > 1 + 1e-12:
            raise NumericalError("slope field leaves the unit ball")

    def sup_distance(self, other: "SlopeField") -> float:
        return float(np.max(np.abs(self.values - other.values)))


@dataclass
class CovectorField:
    values: np.ndarray  # (nx, nxi, 2)
    grid: Grid
    bound: float = math.inf

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=-1)))


@dataclass
class ConvergenceReport:
    iterations: int
    factors: list
    residuals: list
    final_residual: float
    eta: float
    kappa: float
    kappa_direct: float
    converged: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "iterations": self.iterations,
                "factors": self.factors,
                "residuals": self.residuals,
                "final_residual": self.final_residual,
                "eta": self.eta,
                "kappa": self.kappa,
                "kappa_direct": self.kappa_direct,
                "converged": self.converged,
                **self.extra,
            },
            indent=2,
        )


class GraphTransform:
    """Graph transform ``T`` and fiber map ``G_lambda`` on a grid.

    Parameters
    ----------
    system, frames, grid
        The map, the frame field and the grid covering the region ``Omega``.
    cutoff
        ``(chi, dchi)`` grid arrays, or a callable returning them at points.
    inverse
        Work with ``F^{-1}`` (stable slope) instead of ``F``.
    """

    def __init__(self, system, frames: FrameField, grid: Grid, cutoff, block: int = 0, inverse: bool = False,
                 fd_step: float = 1e-5, interp_order: int = 3):
        self.system = system
        self.frames = frames
        self.grid = grid
        self.block = block
        self.inverse = inverse
        self.fd_step = fd_step
        self.interp_order = interp_order
        gx, gxi = grid.flat()
        if callable(cutoff):
            chi, dchi = cutoff(gx, gxi)
        else:
            chi, dchi = cutoff
        self.chi = np.asarray(chi, dtype=float).reshape(grid.shape)
        self.dchi = np.asarray(dchi, dtype=float).reshape(grid.shape + (2,))
        support = self.chi.ravel() > 0
        self.support = support
        sel = np.flatnonzero(support)
        self._sel = sel
        self._piece = self._assign_pieces(gx[sel], gxi[sel])
        self.px = np.zeros(gx.shape)
        self.pxi = np.zeros(gx.shape)
        if sel.size:
            self.px[sel], self.pxi[sel] = self._pre(gx[sel], gxi[sel])
        a, b, c, d = self._coefficients(self.px[sel], self.pxi[sel])
        if not np.all(np.isfinite([a, b, c, d])):
            raise ConfigurationError("frame coefficients undefined on the cutoff support")
        self.coef = (a, b, c, d)
        self.eta = self._measure_eta()
        self.kappa = kappa_eta(self.eta)
        lam = np.linspace(-1, 1, 41)[:, None]
        self.kappa_direct = float(np.max(np.abs(dt_dlambda(a, b, c, d, lam)))) if sel.size else 0.0
        if sel.size:
            self._dinv = np.linalg.inv(self._jac(self.px[sel], self.pxi[sel]))
            self._dt_drho = self._coefficient_gradients()

    def _assign_pieces(self, x, xi):
        """Piece used at each support node.

        Nodes outside every image (the cutoff may reach slightly past the
        edge of a piece) borrow the piece of the nearest covered node, and
        that piece is extended smoothly past its edge.
        """
        locate = self.system.piece_index if self.inverse else self.system.preimage_piece_index
        idx = locate(x, xi, self.block) if x.size else np.zeros(0, dtype=int)
        bad = idx < 0
        if bad.any():
            if bad.all():
                raise ConfigurationError("cutoff support misses the image of the map")
            pts = np.column_stack([x, xi])
            tree = cKDTree(pts[~bad])
            dist, near = tree.query(pts[bad])
            if np.max(dist) > 0.25 * max(np.ptp(self.grid.xs), np.ptp(self.grid.xis)):
                k = int(np.flatnonzero(bad)[np.argmax(dist)])
                raise ConfigurationError(
                    f"cutoff support leaves the image of the map at ({x[k]:.4g}, {xi[k]:.4g})"
                )
            idx[bad] = idx[~bad][near]
        return idx

    def _by_piece(self, fn, x, xi, shape):
        out = np.full((x.size,) + shape, np.nan)
        for k in np.unique(self._piece):
            m = self._piece == k
            with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
                out[m] = fn(self.system.pieces[k], x[m], xi[m])
        return out

    def _pre(self, x, xi):
        """Preimage of support nodes under the iterated map."""
        def fn(piece, a, b):
            return np.column_stack((piece.forward if self.inverse else piece.inverse)(a, b))
        r = self._by_piece(fn, x, xi, (2,))
        return r[:, 0], r[:, 1]

    def _img(self, x, xi):
        def fn(piece, a, b):
            return np.column_stack((piece.inverse if self.inverse else piece.forward)(a, b))
        r = self._by_piece(fn, x, xi, (2,))
        return r[:, 0], r[:, 1]

    def _jac(self, x, xi):
        """Differential of the iterated map at preimage points."""
        def fn(piece, a, b):
            if self.inverse:
                return np.linalg.inv(piece.differential(*piece.inverse(a, b)))
            return piece.differential(a, b)
        return self._by_piece(fn, x, xi, (2, 2))

    def _coefficients(self, x, xi):
        if x.size == 0:
            e = np.zeros(0)
            return e, e, e, e
        swap = [1, 0] if self.inverse else [0, 1]
        nx, nxi = self._img(x, xi)
        V0 = self.frames.matrix(x, xi)[:, :, swap]
        V1 = self.frames.matrix(nx, nxi)[:, :, swap]
        coef = np.linalg.solve(V1, self._jac(x, xi) @ V0)
        return coef[:, 0, 0], coef[:, 0, 1], coef[:, 1, 0], coef[:, 1, 1]

    def _measure_eta(self):
        a, b, c, d = self.coef
        if a.size == 0:
            return 0.0
        eta = min((1 - np.max(np.abs(d))) / 3, (np.min(np.abs(a)) - 1) / 3)
        off = max(np.max(np.abs(b)), np.max(np.abs(c)))
        if eta <= 0 or off > 2 * eta + 1e-15:
            raise BunchingError(
                f"eta-bunching violated: max|b|,|c| = {off:.4g}, max|d| = {np.max(np.abs(d)):.4g}, "
                f"min|a| = {np.min(np.abs(a)):.4g}"
            )
        return float(eta)

    def _coefficient_gradients(self):
        """``d_rho`` of the four coefficients at the preimages, by central differences."""
        h = self.fd_step
        x, xi = self.px[self._sel], self.pxi[self._sel]
        grads = []
        for ex, exi in ((h, 0.0), (0.0, h)):
            plus = np.array(self._coefficients(x + ex, xi + exi))
            minus = np.array(self._coefficients(x - ex, xi - exi))
            grads.append((plus - minus) / (2 * h))
        g = np.stack(grads, axis=-1)  # (4, n, 2)
        if not np.all(np.isfinite(g)):
            raise ConfigurationError("coefficient derivatives undefined near the cutoff support")
        return g

    # ------------------------------------------------------------ T

    def apply(self, lam: np.ndarray, lam_at=None) -> np.ndarray:
        """``T lambda`` on the grid; ``lam_at(x, xi)`` overrides interpolation."""
        out = np.zeros(self.grid.shape)
        sel = self._sel
        if sel.size == 0:
            return out
        x, xi = self.px[sel], self.pxi[sel]
        lv = lam_at(x, xi) if lam_at is not None else self.grid.interpolate(lam, x, xi, self.interp_order)
        lv = np.clip(lv, -1.0, 1.0)
        a, b, c, d = self.coef
        flat = out.ravel()
        flat[sel] = self.chi.ravel()[sel] * t_map(a, b, c, d, lv)
        return flat.reshape(self.grid.shape)

    def step(self, lam: SlopeField) -> SlopeField:
        return SlopeField(self.apply(lam.values), self.chi, self.grid)

    def solve(self, tol: float = 1e-12, max_iter: int = 200, lam0=None, slack: float = 0.02):
        """Iterate ``T`` to its fixed point, recording contraction factors."""
        lam = np.zeros(self.grid.shape) if lam0 is None else np.array(lam0, dtype=float)
        factors, residuals = [], []
        prev = None
        above = 0
        for it in range(1, max_iter + 1):
            new = self.apply(lam)
            res = float(np.max(np.abs(new - lam)))
            residuals.append(res)
            if prev is not None and prev > 0:
                f = res / prev
                factors.append(f)
                above = above + 1 if f >= 1 else 0
                if above >= 3:
                    raise NumericalError(f"graph transform not contracting: factors {factors[-3:]}")
            prev = res
            lam = new
            if res <= tol:
                break
        # the last factors are rounding dominated once the residual is tiny
        meaningful = [f for f, r in zip(factors, residuals[1:]) if r > 1e3 * np.finfo(float).eps]
        report = ConvergenceReport(
            it, factors, residuals, residuals[-1], self.eta, self.kappa, self.kappa_direct, residuals[-1] <= tol,
            {"max_factor": max(meaningful) if meaningful else 0.0, "slack": slack},
        )
        return SlopeField(lam, self.chi, self.grid), report

    # ------------------------------------------------------------ G

    def fiber_apply(self, alpha: np.ndarray, lam: np.ndarray, alpha_at=None, lam_at=None) -> np.ndarray:
        """``G_lambda alpha`` on the grid (covectors as row vectors)."""
        out = np.zeros(self.grid.shape + (2,))
        sel = self._sel
        if sel.size == 0:
            return out
        x, xi = self.px[sel], self.pxi[sel]
        lv = lam_at(x, xi) if lam_at is not None else self.grid.interpolate(lam, x, xi, self.interp_order)
        if alpha_at is not None:
            av = alpha_at(x, xi)
        else:
            av = np.stack([self.grid.interpolate(alpha[..., k], x, xi, self.interp_order) for k in range(2)], axis=-1)
        a, b, c, d = self.coef
        den = a + lv * b
        tv = (lv * d + c) / den
        dt_dlam = dt_dlambda(a, b, c, d, lv)
        ga, gb, gc, gd = self._dt_drho
        # d_rho t at fixed lambda via the chain rule in the coefficients
        drho_t = (
            (-tv / den)[:, None] * ga
            + (-lv * tv / den)[:, None] * gb
            + (1.0 / den)[:, None] * gc
            + (lv / den)[:, None] * gd
        )
        row = drho_t + dt_dlam[:, None] * av
        row = np.einsum("ni,nij->nj", row, self._dinv)
        chi = self.chi.ravel()[sel]
        dchi = self.dchi.reshape(-1, 2)[sel]
        flat = out.reshape(-1, 2)
        flat[sel] = chi[:, None] * row + tv[:, None] * dchi
        return flat.reshape(self.grid.shape + (2,))

    def fiber_step(self, alpha: CovectorField, lam: SlopeField) -> CovectorField:
        return CovectorField(self.fiber_apply(alpha.values, lam.values), self.grid, alpha.bound)

    def solve_derivative(self, lam: SlopeField, tol: float = 1e-10, max_iter: int = 300):
        """Fixed point of ``G_{lambda}`` starting from zero."""
        alpha = np.zeros(self.grid.shape + (2,))
        gamma = self.fiber_apply(alpha, lam.values)
        c1 = float(np.max(np.linalg.norm(gamma, axis=-1)))
        nu1 = self.fiber_contraction(lam.values)
        bound = 2 * c1 / (1 - nu1) if nu1 < 1 else math.inf
        residuals, factors = [], []
        prev = None
        for it in range(1, max_iter + 1):
            new = self.fiber_apply(alpha, lam.values)
            res = float(np.max(np.linalg.norm(new - alpha, axis=-1)))
            residuals.append(res)
            if prev:
                factors.append(res / prev)
                if len(factors) >= 3 and min(factors[-3:]) >= 1:
                    raise NumericalError("fiber map not contracting")
            prev = res
            alpha = new
            if res <= tol:
                break
        report = ConvergenceReport(
            it, factors, residuals, residuals[-1], self.eta, self.kappa, self.kappa_direct, residuals[-1] <= tol,
            {"C1": c1, "nu1": nu1, "M": bound},
        )
        return CovectorField(alpha, self.grid, bound), report

    def fiber_contraction(self, lam: np.ndarray, trials: int = 3, rng=0) -> float:
        """Observed Lipschitz ratio of ``G_lambda`` on random covector pairs."""
        rng = np.random.default_rng(rng)
        worst = 0.0
        for _ in range(trials):
            a1 = rng.normal(size=self.grid.shape + (2,))
            a2 = rng.normal(size=self.grid.shape + (2,))
            g1 = self.fiber_apply(a1, lam)
            g2 = self.fiber_apply(a2, lam)
            num = np.max(np.linalg.norm(g1 - g2, axis=-1))
            den = np.max(np.linalg.norm(a1 - a2, axis=-1))
            worst = max(worst, float(num / den))
        return worst

    # ------------------------------------------------------------ checks
    def fiber_identity_defect(self, lam: np.ndarray, order: int = 4, margin: int = 3) -> float:
        """``max |G_lambda(D lambda) - D(T lambda)|`` on interior nodes for a smooth ``lam``."""
        D = self.grid.gradient(lam, order=order)
        g = self.fiber_apply(D, lam)
        dt = self.grid.gradient(self.apply(lam), order=order)
        err = np.linalg.norm(g - dt, axis=-1)
        inner = err[margin:-margin, margin:-margin]
        return float(np.max(inner))

    def direction(self, lam_values, x, xi):
        """``v_u + lambda v_s`` (or the stable analogue) at points."""
        lv = self.grid.interpolate(lam_values, x, xi, self.interp_order)
        V = self.frames.matrix(x, xi)
        if self.inverse:
            V = V[:, :, [1, 0]]
        return V[:, :, 0] + lv[:, None] * V[:, :, 1]

    def invariance_defect(self, lam: SlopeField) -> float:
        """Largest angle between ``dF w(F^{-1} rho')`` and ``w(rho')``.

        Taken over grid nodes ``rho'`` with ``chi = 1`` at ``rho'`` and at its
        preimage, where ``w = v_u + lambda v_s`` (``lambda`` interpolated off-grid).
        """
        sel = self._sel
        if sel.size == 0:
            return 0.0
        gx, gxi = self.grid.flat()
        x1, xi1 = gx[sel], gxi[sel]
        x0, xi0 = self.px[sel], self.pxi[sel]
        chi0 = self.grid.interpolate(self.chi, x0, xi0, order=1)
        keep = (self.chi.ravel()[sel] >= 1 - 1e-15) & (chi0 >= 1 - 1e-15)
        keep &= self.system.preimage_piece_index(x1, xi1, self.block) >= 0 if not self.inverse else \
            self.system.piece_index(x1, xi1, self.block) >= 0
        if not keep.any():
            return 0.0
        D = np.linalg.inv(self._dinv[keep])
        w0 = np.einsum("nij,nj->ni", D, self.direction(lam.values, x0[keep], xi0[keep]))
        w1 = self.direction(lam.values, x1[keep], xi1[keep])
        cross = np.abs(w0[:, 0] * w1[:, 1] - w0[:, 1] * w1[:, 0])
        ang = np.arcsin(np.clip(cross / (np.linalg.norm(w0, axis=1) * np.linalg.norm(w1, axis=1)), 0, 1))
        return float(np.max(ang))


def canonical_slope(frames: FrameField, lam_value: float, x: float, xi: float) -> float:
    """Slope ``w_xi / w_x`` of ``v_u + lambda v_s`` in the standard basis."""
    V = frames.matrix(np.array([x]), np.array([xi]))[0]
    w = V[:, 0] + lam_value * V[:, 1]
    return float(w[1] / w[0])


def holder_modulus(alpha: CovectorField, mask, beta: float) -> float:
    """``max |alpha(p) - alpha(q)| / d(p, q)^beta`` over neighbouring grid nodes inside ``mask``."""
    vals = alpha.values
    worst = 0.0
    for axis, h in ((0, alpha.grid.hx), (1, alpha.grid.hxi)):
        diff = np.linalg.norm(np.diff(vals, axis=axis), axis=-1)
        m = np.logical_and(np.take(mask, range(mask.shape[axis] - 1), axis=axis),
                           np.take(mask, range(1, mask.shape[axis]), axis=axis))
        if m.any():
            worst = max(worst, float(np.max(diff[m]) / h**beta))
    return worst


def bunching_exponent(transform: GraphTransform) -> float:
    """An exponent ``beta`` with ``nu mu^beta < 1`` (half the largest admissible value)."""
    sel = transform._sel
    if sel.size == 0:
        return 1.0
    mu = float(np.max(np.linalg.norm(transform._dinv, ord=2, axis=(1, 2))))
    a = transform.coef[0]
    nu = float(np.max(1.0 / np.abs(a)))
    if mu <= 1:
        return 1.0
    return 0.5 * math.log(1 / nu) / math.log(mu)


def trapped_cutoff(x_intervals, xi_intervals, eps0):
    """Cutoff ``chi(x, xi) = phi_x(x) phi_xi(xi)`` around the projections of the trapped set.

    Returns a callable giving ``(chi, dchi)`` at points.
    """

    def cutoff(x, xi):
        fx, dfx = interval_cutoff(x, x_intervals, eps0)
        fxi, dfxi = interval_cutoff(xi, xi_intervals, eps0)
        return fx * fxi, np.stack([dfx * fxi, fx * dfxi], axis=-1)

    return cutoff


def export_fields_csv(path, grid: Grid, lam: SlopeField, alpha: CovectorField | None = None, extra_cols=None):
    gx, gxi = grid.flat()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["x", "xi", "lambda"] + (["alpha1", "alpha2"] if alpha is not None else [])
        head += list(extra_cols or {})
        w.writerow(head)
        lv = lam.values.ravel()
        av = alpha.values.reshape(-1, 2) if alpha is not None else None
        for k in range(gx.size):
            row = [repr(float(gx[k])), repr(float(gxi[k])), repr(float(lv[k]))]
            if av is not None:
                row += [repr(float(av[k, 0])), repr(float(av[k, 1]))]
            row += [v for v in (extra_cols or {}).values()]
            w.writerow(row)


# --------------------------------------------------------------------------
# Ready-made set-ups


def linear_chart_setup(matrix=((2.0, 1.0), (1.0, 1.0)), half_width=1.0, n=513, eps0=1 / 6, depth=2, inverse=False):
    """Graph transform for a hyperbolic linear map on ``[-r, r]^2``.

    The grid has a node at the fixed point; frames come from ``depth``
    steps of power iteration and are therefore not the exact eigenvectors.
    """
    from .classical.systems import linear_chart_system

    system = linear_chart_system(matrix, half_width, epsilon0=eps0)
    grid = Grid.nodes(-half_width, half_width, n)
    frames = power_iteration_frames(system, [0.0], [0.0], 0, depth=depth)
    point = np.array([[0.0, 0.0]])
    cutoff = trapped_cutoff(point, point, eps0)
    return system, GraphTransform(system, frames, grid, cutoff, inverse=inverse)


def baker_setup(system, n=256, eps0=0.08, depth=6, frames=None, samples_resolution=243, frame_width=0.1,
                inverse=False):
    """Graph transform on the square of a (possibly kicked) baker system."""
    from .classical.systems import trapped_set_sample
    from .thermo import cantor_intervals

    rect = system.blocks[0]
    grid = Grid.cells(rect.x0, rect.x1, n, rect.xi0, rect.xi1, n)
    x_iv = cantor_intervals(system.base, system.kept, depth)
    if system.kick == 0.0:
        xi_iv = x_iv
    else:
        sx, sxi, _ = trapped_set_sample(system, 4, samples_resolution)
        cell = (rect.xi1 - rect.xi0) / samples_resolution
        xi_iv = np.column_stack([sxi - cell, sxi + cell])
    if frames is None:
        sx, sxi, _ = trapped_set_sample(system, 4, 81)
        if system.kick == 0.0:
            frames = FrameField.constant((1.0, 0.0), (0.0, 1.0), label="axes")
        else:
            frames = power_iteration_frames(system, sx, sxi, 0, depth=3, width=frame_width)
    cutoff = trapped_cutoff(x_iv, xi_iv, eps0)
    return GraphTransform(system, frames, grid, cutoff, inverse=inverse)
