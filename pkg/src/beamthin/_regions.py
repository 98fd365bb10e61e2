"""Compiled kernels for main-lobe delimitation on sampled patterns.

The main lobe is every sample reachable from the peak along a path that never
goes uphill (8-connectivity). Side lobes are the samples left over.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _fill(values, si, sj, periodic, pole, region, stack):
    n_i, n_j = values.shape
    region[:, :] = False
    top = 0
    if pole and si == 0:
        for j in range(n_j):
            region[0, j] = True
            stack[top, 0] = 0
            stack[top, 1] = j
            top += 1
    else:
        region[si, sj] = True
        stack[0, 0] = si
        stack[0, 1] = sj
        top = 1
    while top > 0:
        top -= 1
        i = stack[top, 0]
        j = stack[top, 1]
        here = values[i, j]
        for di in range(-1, 2):
            a = i + di
            if a < 0 or a >= n_i:
                continue
            for dj in range(-1, 2):
                if di == 0 and dj == 0:
                    continue
                b = j + dj
                if periodic:
                    b = b % n_j
                elif b < 0 or b >= n_j:
                    continue
                if region[a, b] or values[a, b] > here:
                    continue
                if pole and a == 0:
                    for jj in range(n_j):
                        if not region[0, jj]:
                            region[0, jj] = True
                            stack[top, 0] = 0
                            stack[top, 1] = jj
                            top += 1
                else:
                    region[a, b] = True
                    stack[top, 0] = a
                    stack[top, 1] = b
                    top += 1


@numba.njit(cache=True, nogil=True)
def _argmax2(values):
    n_i, n_j = values.shape
    bi = 0
    bj = 0
    best = values[0, 0]
    for i in range(n_i):
        for j in range(n_j):
            if values[i, j] > best:
                best = values[i, j]
                bi = i
                bj = j
    return bi, bj


@numba.njit(cache=True, nogil=True)
def _sidelobe_scan(values, region, allowed):
    n_i, n_j = values.shape
    best = -1.0
    bi = -1
    bj = -1
    for i in range(n_i):
        for j in range(n_j):
            if allowed[i, j] and not region[i, j] and values[i, j] > best:
                best = values[i, j]
                bi = i
                bj = j
    return best, bi, bj


@numba.njit(cache=True, nogil=True)
def _batch_sidelobes(values, allowed, out_peak, out_side):
    k_count, n_i, n_j = values.shape
    region = np.zeros((n_i, n_j), dtype=np.bool_)
    stack = np.empty((n_i * n_j, 2), dtype=np.int64)
    for k in range(k_count):
        v = values[k]
        si, sj = _argmax2(v)
        _fill(v, si, sj, False, False, region, stack)
        best, _, _ = _sidelobe_scan(v, region, allowed[k])
        out_peak[k] = v[si, sj]
        out_side[k] = best


def downhill_region(values: np.ndarray, start: tuple[int, int],
                    periodic_cols: bool = False, pole_row: bool = False) -> np.ndarray:
    """Boolean mask of samples reachable from ``start`` without climbing.

    ``periodic_cols`` wraps the column axis (phi); ``pole_row`` treats row 0 as a
    single point (theta = 0).
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    region = np.zeros(values.shape, dtype=np.bool_)
    stack = np.empty((values.size, 2), dtype=np.int64)
    _fill(values, int(start[0]), int(start[1]), periodic_cols, pole_row, region, stack)
    return region


def highest_outside(values: np.ndarray, region: np.ndarray,
                    allowed: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Largest allowed sample outside ``region``; first in row-major order on ties.

    Returns ``(-1.0, (-1, -1))`` when no sample qualifies.
    """
    best, bi, bj = _sidelobe_scan(np.ascontiguousarray(values, dtype=np.float64),
                                  np.ascontiguousarray(region),
                                  np.ascontiguousarray(allowed))
    return float(best), (int(bi), int(bj))


def batch_sidelobes(values: np.ndarray, allowed: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Peak value and highest side-lobe sample for a stack of (non-periodic) patterns.

    ``allowed`` marks samples that may count as side lobes (the field of view).
    Side-lobe value is -1 where nothing qualifies.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    allowed = np.ascontiguousarray(np.broadcast_to(allowed, values.shape))
    peak = np.empty(values.shape[0])
    side = np.empty(values.shape[0])
    _batch_sidelobes(values, allowed, peak, side)
    return peak, side
