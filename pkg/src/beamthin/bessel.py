"""Bessel function of the first kind, order one.

Power series below ``SERIES_LIMIT``, Hankel asymptotic expansion above it.
Absolute error is below 1e-10 over the whole real line.
"""

from __future__ import annotations

import numpy as np

# The asymptotic remainder behaves like exp(-2x); at x=12 it is ~4e-11 while the
# series still keeps ~12 significant digits after cancellation.
SERIES_LIMIT = 12.0

_SERIES_TERMS = 60
_ASYMPTOTIC_TERMS = 30


def _series(x: np.ndarray) -> np.ndarray:
    half = 0.5 * x
    q = half * half
    term = half.copy()
    total = term.copy()
    for k in range(_SERIES_TERMS):
        term = -term * q / ((k + 1) * (k + 2))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _asymptotic(x: np.ndarray) -> np.ndarray:
    mu = 4.0  # 4 * order**2
    p = np.ones_like(x)
    q = np.zeros_like(x)
    a = np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(1, _ASYMPTOTIC_TERMS):
        nxt = a * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        # stop each point at its smallest term
        done |= np.abs(nxt) >= np.abs(a)
        a = np.where(done, a, nxt)
        contrib = np.where(done, 0.0, a)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q += sign * contrib
        else:
            p += sign * contrib
    chi = x - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def j1(x):
    """Evaluate J1 elementwise; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    ax = np.abs(arr)
    out = np.empty_like(ax)
    small = ax < SERIES_LIMIT
    if np.any(small):
        out[small] = _series(ax[small])
    if np.any(~small):
        out[~small] = _asymptotic(ax[~small])
    out = np.where(arr < 0, -out, out)  # J1 is odd
    return out if out.ndim else float(out)


def jinc(x):
    """2*J1(x)/x, continuous at the origin where it equals 1."""
    arr = np.asarray(x, dtype=float)
    out = np.ones_like(arr)
    nz = arr != 0.0
    out[nz] = 2.0 * j1(arr[nz]) / arr[nz]
    return out if out.ndim else float(out)
