"""Independent reference values for the test suite.

Nothing here imports ``opengap``: every operator is assembled from its
defining formula with plain numpy/scipy, using different code paths from the
package (explicit matrices instead of FFTs, full eigensolvers instead of
ARPACK, quadrature instead of grids).  Run it to regenerate ``frozen.json``::

    python3 tests/oracles/build_frozen.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy.special import roots_legendre

OUT = Path(__file__).with_name("frozen.json")


def smooth_plateau(u, inner, outer):
    u = np.abs(np.asarray(u, dtype=float))
    t = (outer - u) / (outer - inner)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(1 - t > 0, np.exp(-1.0 / np.where(1 - t > 0, 1 - t, 1.0)), 0.0)
    return a / (a + b)


def model_matrix(h):
    """``phi(x) F^* phi(xi) F P U`` from explicit matrices (N = 1/h, X = Xi)."""
    n = int(round(1 / h))
    X = math.sqrt(math.pi * h * n / 2)
    x = -X + 2 * X / n * np.arange(n)
    xi = x.copy()
    F = np.exp(-1j * np.outer(xi, x) / h) / math.sqrt(n)
    band = np.diag((np.abs(xi) < X / 2).astype(float))
    low_pass = F.conj().T @ band @ F
    D = np.zeros((n, n))
    for k in range(n):
        # x_k doubled lands on node 2k - n/2
        s = 2 * k - n // 2
        if 0 <= s < n:
            D[k, s] = math.sqrt(2)
    px = np.diag(smooth_plateau(x, 0.5, 0.7))
    return px @ F.conj().T @ np.diag(smooth_plateau(xi, 0.5, 0.7)) @ F @ D @ low_pass


def baker_matrix(N, base=3, kept=(0, 2)):
    """Open baker from its FFT action on basis vectors."""
    m = N // base
    cols = []
    for k in range(N):
        e = np.zeros(N, dtype=complex)
        e[k] = 1.0
        w = np.zeros(N, dtype=complex)
        for b in kept:
            w[b * m:(b + 1) * m] = np.fft.fft(e[b * m:(b + 1) * m]) / math.sqrt(m)
        cols.append(np.fft.ifft(w) * math.sqrt(N))
    return np.array(cols).T


def cantor(base, alphabet, depth):
    idx = [0]
    for _ in range(depth):
        idx = [base * i + a for i in idx for a in alphabet]
    return sorted(idx)


def fup_norm_gram(N, rows, cols):
    """Top singular value from the Gram matrix ``A^* A`` via ``eigvalsh``."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    # (A^* A)[k, l] = (1/N) sum_{r in rows} exp(2 pi i r (k - l) / N)
    diff = cols[:, None] - cols[None, :]
    G = np.exp(2j * np.pi * rows[None, None, :] * diff[:, :, None] / N).sum(axis=2) / N
    return float(math.sqrt(max(np.linalg.eigvalsh(G))))


def time_band_norm(c, nodes=160):
    """``sqrt`` of the top eigenvalue of the sinc kernel ``sin(c(s-t)) / (pi (s-t))`` on ``[-1, 1]``."""
    s, w = roots_legendre(nodes)
    d = s[:, None] - s[None, :]
    K = np.where(np.abs(d) > 0, np.sin(c * d) / (np.pi * np.where(d == 0, 1, d)), c / np.pi)
    sw = np.sqrt(w)
    return float(math.sqrt(np.linalg.eigvalsh(sw[:, None] * K * sw[None, :]).max()))


def main():
    frozen = {}

    model = {}
    for e in (8, 9):
        h = 2.0**-e
        M = model_matrix(h)
        n_pow = 2 * math.ceil(0.75 * e) + 1
        model[str(e)] = {
            "spectral_radius": float(np.max(np.abs(np.linalg.eigvals(M)))),
            "power": n_pow,
            "power_norm": float(np.linalg.norm(np.linalg.matrix_power(M, n_pow), 2)),
            "norm": float(np.linalg.norm(M, 2)),
        }
    frozen["model"] = model

    frozen["baker_spectral_radius"] = {
        str(k): float(np.max(np.abs(np.linalg.eigvals(baker_matrix(3**k))))) for k in range(3, 7)
    }

    frozen["cantor_fup_norm"] = {
        str(k): fup_norm_gram(3**k, cantor(3, (0, 2), k), cantor(3, (0, 2), k)) for k in range(3, 7)
    }

    # box of half-width a = h^{3/4} on both sides; after rescaling x = a s the
    # operator is time-band limiting with bandwidth c = a^2 / h
    frozen["uncertainty_continuum"] = {
        str(e): time_band_norm((2.0**-e) ** 1.5 / 2.0**-e) for e in (8, 10, 12)
    }

    # two disks of radius 1 with centres 6 apart: the bouncing orbit has
    # stability multiplier (per bounce) 1 + L + sqrt(L (L + 2)) with L = 4
    L = 4.0
    frozen["two_disk_multiplier"] = 1 + L + math.sqrt(L * (L + 2))

    OUT.write_text(json.dumps(frozen, indent=2, sort_keys=True) + "\n")
    print(json.dumps(frozen, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
