"""Finite-dimensional quantizations and spectral diagnostics.

Interval grids discretize ``L^2([-X, X])`` with ``N`` points; the momentum
grid is dual to the position grid (``dx * dxi = 2 pi h / N``), which makes
the discrete semiclassical Fourier transform exactly unitary.  Torus grids
carry the unitary DFT.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigs, svds

from .errors import ConfigurationError, NumericalError
from .profiles import plateau

UNITARY_TOL = 1e-10
_HEADER = struct.Struct("<q16sd")


@dataclass(frozen=True)
class GridSpec:
    """Phase-space grid.

    ``kind='interval'``: ``x_k = -X + k dx`` and ``xi_j = -Xi + j dxi`` with
    ``dx = 2X/N`` and ``dxi = 2 Xi / N``; unitarity needs ``X Xi = pi h N / 2``.
    ``kind='torus'``: ``Z_N`` with ``h = 1 / (2 pi N)`` (recorded ``h_eff = 1/N``).
    """

    kind: str
    N: int
    h: float
    X: float = 0.0
    Xi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("interval", "torus"):
            raise ConfigurationError(f"unknown grid kind {self.kind!r}")
        if self.N < 2:
            raise ConfigurationError("a grid needs N >= 2")
        if self.kind == "interval":
            if self.h <= 0 or self.X <= 0 or self.Xi <= 0:
                raise ConfigurationError("interval grids need h, X, Xi > 0")
            defect = abs(self.X * self.Xi / (math.pi * self.h * self.N / 2) - 1)
            if defect > 1e-12:
                raise ConfigurationError(
                    f"non-unitary discretization: X*Xi/(pi h N/2) - 1 = {defect:.3g}"
                )

    @classmethod
    def interval(cls, h: float, N: int | None = None, X: float | None = None) -> "GridSpec":
        """Interval grid; ``N`` defaults to ``1/h`` and ``X`` to the symmetric choice ``X = Xi``."""
        if N is None:
            N = int(round(1 / h))
        if X is None:
            X = math.sqrt(math.pi * h * N / 2)
        return cls("interval", int(N), float(h), float(X), math.pi * h * N / (2 * X))

    @classmethod
    def torus(cls, N: int) -> "GridSpec":
        return cls("torus", int(N), 1.0 / (2 * math.pi * N))

    @property
    def h_eff(self) -> float:
        return 1.0 / self.N if self.kind == "torus" else self.h

    @property
    def dx(self) -> float:
        return 2 * self.X / self.N if self.kind == "interval" else 1.0 / self.N

    @property
    def dxi(self) -> float:
        return 2 * self.Xi / self.N if self.kind == "interval" else 1.0

    @property
    def x(self) -> np.ndarray:
        if self.kind == "torus":
            return np.arange(self.N) / self.N
        return -self.X + self.dx * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        if self.kind == "torus":
            return np.arange(self.N).astype(float)
        return -self.Xi + self.dxi * np.arange(self.N)


@dataclass
class DenseOperator:
    entries: np.ndarray
    grid: GridSpec
    label: str = ""
    unitary: bool = False

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        n = self.grid.N
        if self.entries.shape != (n, n):
            raise ConfigurationError(f"operator shape {self.entries.shape} does not match grid N={n}")
        if not np.all(np.isfinite(self.entries)):
            raise NumericalError(f"non-finite entries in {self.label or 'operator'}")
        if self.unitary:
            d = self.unitarity_defect()
            if d > UNITARY_TOL:
                raise NumericalError(f"{self.label}: unitarity defect {d:.3g}")

    @property
    def N(self) -> int:
        return self.grid.N

    def __matmul__(self, other):
        if isinstance(other, DenseOperator):
            return DenseOperator(self.entries @ other.entries, self.grid, f"{self.label}*{other.label}")
        return self.entries @ other

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(self.entries.conj().T, self.grid, f"{self.label}^*", self.unitary)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def unitarity_defect(self) -> float:
        a = self.entries
        return float(np.linalg.norm(a.conj().T @ a - np.eye(self.N), 2))

    def power(self, n: int) -> "DenseOperator":
        return DenseOperator(np.linalg.matrix_power(self.entries, n), self.grid, f"({self.label})^{n}")

    # ------------------------------------------------------------ binary container

    def save(self, path) -> None:
        """Write ``(N, kind, h)`` then row-major little-endian complex pairs."""
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(self.N, self.grid.kind.encode().ljust(16, b"\0"), self.grid.h))
            fh.write(np.ascontiguousarray(self.entries, dtype="<c16").tobytes())

    @classmethod
    def load(cls, path, grid: GridSpec | None = None, label: str = "") -> "DenseOperator":
        with open(path, "rb") as fh:
            n, kind, h = _HEADER.unpack(fh.read(_HEADER.size))
            data = np.frombuffer(fh.read(), dtype="<c16")
        kind = kind.rstrip(b"\0").decode()
        if data.size != n * n:
            raise ConfigurationError(f"container holds {data.size} entries, expected {n * n}")
        if grid is None:
            grid = GridSpec.torus(n) if kind == "torus" else GridSpec.interval(h, n)
        if grid.N != n or grid.kind != kind:
            raise ConfigurationError("container header does not match the supplied grid")
        return cls(data.reshape(n, n).copy(), grid, label or f"loaded:{path}")


# --------------------------------------------------------------------------
# Fourier transforms


def semiclassical_fourier(grid: GridSpec) -> DenseOperator:
    """``F[j, k] = N^{-1/2} exp(-i x_k xi_j / h)`` (DFT on the torus)."""
    n = grid.N
    if grid.kind == "torus":
        j = np.arange(n)
        F = np.exp(-2j * np.pi * np.outer(j, j) / n) / math.sqrt(n)
        return DenseOperator(F, grid, f"DFT N={n}", unitary=True)
    F = np.exp(-1j * np.outer(grid.xi, grid.x) / grid.h) / math.sqrt(n)
    op = DenseOperator(F, grid, f"F_h h={grid.h:.6g} N={n}")
    d = op.unitarity_defect()
    if d > UNITARY_TOL:
        raise NumericalError(f"semiclassical Fourier transform not unitary: defect {d:.3g}")
    op.unitary = True
    return op


class FourierFFT:
    """FFT application of the interval (or torus) Fourier matrix."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        n = grid.N
        k = np.arange(n)
        if grid.kind == "torus":
            self._pre = np.ones(n)
            self._post = np.ones(n)
        else:
            # x_k xi_j = (x0 + k dx)(xi0 + j dxi) and dx dxi / h = 2 pi / N
            self._pre = np.exp(-1j * k * grid.dx * grid.xi[0] / grid.h)
            self._post = np.exp(-1j * grid.x[0] * grid.xi / grid.h)
        self._scale = 1 / math.sqrt(n)

    def forward(self, u):
        u = np.asarray(u)
        pre = self._pre.reshape((-1,) + (1,) * (u.ndim - 1))
        post = self._post.reshape(pre.shape)
        return np.fft.fft(u * pre, axis=0) * post * self._scale

    def inverse(self, v):
        v = np.asarray(v)
        pre = self._pre.reshape((-1,) + (1,) * (v.ndim - 1))
        post = self._post.reshape(pre.shape)
        return np.fft.ifft(v / post, axis=0) / pre / self._scale


# --------------------------------------------------------------------------
# Model example operators


def _half_indices(grid: GridSpec):
    """Output nodes ``x_k`` whose double ``2 x_k`` is a grid node."""
    n = grid.N
    src = 2 * np.arange(n) - n // 2
    ok = (src >= 0) & (src < n) if n % 2 == 0 else np.zeros(n, dtype=bool)
    return np.flatnonzero(ok), src[ok]


def scaling_operator(grid: GridSpec, antialias: bool = False) -> DenseOperator:
    """``U v(x) = sqrt(2) v(2x)`` sampled on the grid, zero where ``2x`` leaves the box.

    On even grids ``2 x_k`` is a node, so linear interpolation is exact
    decimation.  With ``antialias=True`` the input is first band-limited to
    ``|xi| < Xi/2``, which makes the matrix a partial isometry.
    """
    if grid.kind != "interval":
        raise ConfigurationError("scaling_operator needs an interval grid")
    n = grid.N
    U = np.zeros((n, n), dtype=complex)
    if n % 2 == 0:
        dst, src = _half_indices(grid)
        U[dst, src] = math.sqrt(2)
    else:
        x = grid.x
        for k, xk in enumerate(x):
            t = (2 * xk - x[0]) / grid.dx
            i = int(math.floor(t))
            if 0 <= i < n - 1:
                w = t - i
                U[k, i] = math.sqrt(2) * (1 - w)
                U[k, i + 1] = math.sqrt(2) * w
    if antialias:
        F = semiclassical_fourier(grid).entries
        band = (np.abs(grid.xi) < grid.Xi / 2).astype(float)
        U = U @ (F.conj().T @ (band[:, None] * F))
    return DenseOperator(U, grid, f"U h={grid.h:.6g}" + (" antialiased" if antialias else ""))


def _check_boundary(values, label):
    edge = np.concatenate([values[0], values[-1], values[:, 0], values[:, -1]])
    if np.max(np.abs(edge)) > 1e-12:
        warnings.warn(f"{label}: symbol support touches the grid boundary (aliasing)", stacklevel=3)


def quantize_left(symbol, grid: GridSpec) -> DenseOperator:
    """Left quantization ``K[j, k] = (1/N) sum_l chi(x_j, xi_l) exp(i (x_j - x_k) xi_l / h)``.

    ``symbol`` is a vectorized callable ``chi(x, xi)`` or an ``(N, N)`` array
    sampled at ``(x_j, xi_l)``.
    """
    x, xi = grid.x, grid.xi
    if callable(symbol):
        S = np.asarray(symbol(x[:, None], xi[None, :]), dtype=complex) * np.ones((grid.N, grid.N))
    else:
        S = np.asarray(symbol, dtype=complex)
    _check_boundary(S, "quantize_left")
    F = semiclassical_fourier(grid).entries
    K = (F.conj().T * S) @ F
    return DenseOperator(K, grid, "Op(chi)")


def model_cutoff(inner: float = 0.5, outer: float = 0.7):
    """Separable cutoff ``phi(x) phi(xi)`` equal to 1 on ``[-inner, inner]^2``."""

    def phi(u):
        return plateau(u, inner, outer)

    return phi


@dataclass
class ModelOpenMap:
    """The model open quantum map ``M(h) = Op(chi) U`` with separable ``chi``.

    Applied matrix-free through FFTs; :meth:`dense` assembles the matrix.
    """

    grid: GridSpec
    phi: Callable = field(default_factory=model_cutoff)
    label: str = ""

    def __post_init__(self):
        g = self.grid
        if g.N % 2:
            raise ConfigurationError("the model map needs an even number of grid points")
        self._F = FourierFFT(g)
        self._px = self.phi(g.x)
        self._pxi = self.phi(g.xi)
        self._band = (np.abs(g.xi) < g.Xi / 2).astype(float)
        self._dst, self._src = _half_indices(g)
        if max(abs(self._px[0]), abs(self._px[-1]), abs(self._pxi[0]), abs(self._pxi[-1])) > 1e-12:
            warnings.warn("model cutoff touches the grid boundary (aliasing)", stacklevel=2)
        if not self.label:
            self.label = f"M(h) h={g.h:.6g} N={g.N}"

    @classmethod
    def for_h(cls, h: float, N: int | None = None, inner=0.5, outer=0.7):
        return cls(GridSpec.interval(h, N), model_cutoff(inner, outer))

    @property
    def N(self):
        return self.grid.N

    def _U(self, u):
        w = self._F.inverse(self._band[:, None] * self._F.forward(u))
        out = np.zeros_like(w)
        out[self._dst] = math.sqrt(2) * w[self._src]
        return out

    def _Uadj(self, v):
        w = np.zeros_like(v)
        w[self._src] = math.sqrt(2) * v[self._dst]
        return self._F.inverse(self._band[:, None] * self._F.forward(w))

    def matvec(self, u):
        u = np.asarray(u, dtype=complex)
        vec = u.ndim == 1
        u = u.reshape(self.N, -1)
        out = self._px[:, None] * self._F.inverse(self._pxi[:, None] * self._F.forward(self._U(u)))
        return out.ravel() if vec else out

    def rmatvec(self, v):
        v = np.asarray(v, dtype=complex)
        vec = v.ndim == 1
        v = v.reshape(self.N, -1)
        out = self._Uadj(self._F.inverse(self._pxi[:, None] * self._F.forward(self._px[:, None] * v)))
        return out.ravel() if vec else out

    def linear_operator(self, power: int = 1) -> LinearOperator:
        def mv(u):
            for _ in range(power):
                u = self.matvec(u)
            return u

        def rmv(v):
            for _ in range(power):
                v = self.rmatvec(v)
            return v

        return LinearOperator((self.N, self.N), matvec=mv, rmatvec=rmv, dtype=complex)

    def dense(self) -> DenseOperator:
        return DenseOperator(self.matvec(np.eye(self.N, dtype=complex)), self.grid, self.label)


def model_open_map(h: float, N: int | None = None, inner: float = 0.5, outer: float = 0.7) -> ModelOpenMap:
    """``M(h) = Op(chi) U`` on the symmetric interval grid for ``h``."""
    return ModelOpenMap.for_h(h, N, inner, outer)


def coherent_state(grid: GridSpec, x0: float = 0.0, xi0: float = 0.0) -> np.ndarray:
    """Normalized Gaussian wavepacket centred at ``(x0, xi0)``."""
    x = grid.x
    u = np.exp(-((x - x0) ** 2) / (2 * grid.h) + 1j * xi0 * x / grid.h)
    return u / np.linalg.norm(u)


def decay_power(h: float) -> int:
    """``2n + 1`` with ``n = ceil((3/4) |log h| / log 2)``."""
    return 2 * math.ceil(0.75 * abs(math.log(h)) / math.log(2)) + 1


# --------------------------------------------------------------------------
# Open baker, projectors


def torus_fourier(N: int) -> np.ndarray:
    j = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(j, j) / N) / math.sqrt(N)


def open_baker_operator(N: int, base: int = 3, kept=(0, 2)) -> DenseOperator:
    """``B = F_N^{-1} blockdiag(F_m on kept branches, 0 elsewhere)`` with ``N = base * m``."""
    if N % base:
        raise ConfigurationError(f"N={N} is not divisible by {base}")
    kept = sorted(set(int(k) for k in kept))
    if any(k < 0 or k >= base for k in kept):
        raise ConfigurationError(f"kept branches must lie in 0..{base - 1}")
    m = N // base
    Fm = torus_fourier(m)
    blocks = np.zeros((N, N), dtype=complex)
    for b in kept:
        blocks[b * m:(b + 1) * m, b * m:(b + 1) * m] = Fm
    B = torus_fourier(N).conj().T @ blocks
    op = DenseOperator(B, GridSpec.torus(N), f"baker N={N} L={base} kept={tuple(kept)}", len(kept) == base)
    if op.norm() > 1 + 1e-10:
        raise NumericalError(f"open baker norm {op.norm()} exceeds 1")
    return op


def projector(grid: GridSpec, index_set, side: str = "position") -> DenseOperator:
    """``1_S`` in position, or ``F^* 1_S F`` in momentum; ``index_set`` is indices or a mask."""
    mask = np.zeros(grid.N, dtype=bool)
    sel = np.asarray(index_set)
    if sel.dtype == bool:
        mask[:] = sel
    else:
        mask[sel.astype(int)] = True
    if side == "position":
        return DenseOperator(np.diag(mask.astype(complex)), grid, "1_S(x)")
    if side == "momentum":
        F = semiclassical_fourier(grid).entries
        return DenseOperator(F.conj().T @ (mask[:, None] * F), grid, "1_S(hD)")
    raise ConfigurationError("side must be 'position' or 'momentum'")


def uncertainty_box_norm(h: float, exponent: float = 0.75, points: int = 32) -> float:
    """``|| 1_{|hD| <= h^a} 1_{|x| <= h^a} ||`` on a grid resolving both boxes.

    The grid is symmetric with ``points`` nodes per half-width, so only the
    restricted Fourier block is formed.
    """
    a = h**exponent
    step = a / points
    N = int(math.ceil(2 * math.pi * h / step**2))
    N += N % 2
    grid = GridSpec.interval(h, N)
    x = grid.x
    xi = grid.xi
    cols = np.flatnonzero(np.abs(x) <= a)
    rows = np.flatnonzero(np.abs(xi) <= a)
    block = np.exp(-1j * np.outer(xi[rows], x[cols]) / h) / math.sqrt(N)
    return float(np.linalg.norm(block, 2))


# --------------------------------------------------------------------------
# Spectral diagnostics


@dataclass
class SpectralReport:
    spectral_radius: float
    eigenvalues: list
    power_norms: list
    top_singular: float

    def __post_init__(self):
        if self.spectral_radius > self.top_singular * (1 + 1e-8) + 1e-10:
            raise NumericalError("spectral radius exceeds the operator norm")

    def as_dict(self):
        return {
            "spectral_radius": self.spectral_radius,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "power_norms": [[int(n), float(v)] for n, v in self.power_norms],
            "top_singular": self.top_singular,
        }


def _top_singular(op, power: int = 1) -> float:
    if isinstance(op, DenseOperator):
        return float(np.linalg.norm(np.linalg.matrix_power(op.entries, power), 2))
    A = op.linear_operator(power)
    # eigsh on A^*A runs at tol**2, so 1e-6 here means 1e-12 there
    return float(svds(A, k=1, return_singular_vectors=False, tol=1e-6, random_state=0)[0])


def power_norm(op, n: int) -> float:
    """``||A^n||`` (dense matrix power, or Lanczos on the matrix-free operator)."""
    return _top_singular(op, n)


def spectral_report(op, n_max: int, k_eigs: int = 8, powers=None) -> SpectralReport:
    """Spectral radius, leading eigenvalues and ``||A^n||`` for ``n`` up to ``n_max``."""
    if n_max < 1:
        raise ConfigurationError("n_max must be at least 1")
    powers = list(range(1, n_max + 1)) if powers is None else list(powers)
    try:
        if isinstance(op, DenseOperator):
            ev = np.linalg.eigvals(op.entries)
            norms = []
            P = np.eye(op.N, dtype=complex)
            done = 0
            for n in sorted(powers):
                while done < n:
                    P = P @ op.entries
                    done += 1
                norms.append((n, float(np.linalg.norm(P, 2))))
            top = norms[0][1] if powers[0] == 1 else float(np.linalg.norm(op.entries, 2))
        else:
            ev = eigs(op.linear_operator(), k=min(k_eigs, op.N - 2), which="LM",
                      return_eigenvectors=False, tol=1e-10, v0=np.ones(op.N, dtype=complex))
            norms = [(n, power_norm(op, n)) for n in powers]
            top = power_norm(op, 1)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failure: {exc}") from exc
    ev = np.asarray(ev)
    ev = ev[np.argsort(-np.abs(ev))][:k_eigs]
    rho = float(np.abs(ev[0])) if ev.size else 0.0
    return SpectralReport(rho, list(ev), norms, top)


def leading_eigenvalues(op, k: int = 8) -> np.ndarray:
    """Eigenvalues of largest modulus, sorted by decreasing modulus."""
    if isinstance(op, DenseOperator):
        ev = np.linalg.eigvals(op.entries)
    else:
        ev = eigs(op.linear_operator(), k=min(k, op.N - 2), which="LM",
                  return_eigenvectors=False, tol=1e-10, v0=np.ones(op.N, dtype=complex))
    ev = np.asarray(ev)
    return ev[np.argsort(-np.abs(ev))][:k]


def spectral_radius(op) -> float:
    return float(np.abs(leading_eigenvalues(op, 4)[0]))


def fit_loglog_slope(hs, values) -> float:
    """Least-squares slope of ``log value`` against ``log h``."""
    return float(np.polyfit(np.log(hs), np.log(values), 1)[0])
