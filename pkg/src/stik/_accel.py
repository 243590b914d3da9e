"""Hot numeric kernels with numba and pure-numpy implementations.

Every kernel has two implementations that produce bit-identical output for
the combinatorial operations (pair extraction, grid scatter) and agree to
floating-point roundoff for reduction-heavy ones (field sums, where numpy's
pairwise summation orders additions differently).

The active backend is chosen once at import time: numba when importable,
unless the environment variable ``STIK_DISABLE_NUMBA`` is set to a non-empty
value, in which case the numpy path is used.  ``benchmarks/bench_backends.py``
times both.
"""

import math
import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_DISABLED = bool(os.environ.get("STIK_DISABLE_NUMBA", ""))
USING_NUMBA = _HAVE_NUMBA and not _DISABLED


def backend_name():
    return "numba" if USING_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# close pair extraction
# ---------------------------------------------------------------------------

def close_pairs_numpy(sx, sy, tt, rmax, tmax):
    """All unordered pairs i<j with spatial distance <= rmax and |dt| <= tmax.

    Returns (i, j, ds, dt) with dt = tt[i] - tt[j] signed, sorted by (i, j).
    """
    n = sx.shape[0]
    if n < 2:
        z = np.zeros(0)
        return z.astype(np.int64), z.astype(np.int64), z, z
    dx = sx[:, None] - sx[None, :]
    dy = sy[:, None] - sy[None, :]
    dt = tt[:, None] - tt[None, :]
    d = np.sqrt(dx * dx + dy * dy)
    mask = (d <= rmax) & (np.abs(dt) <= tmax)
    mask &= np.tri(n, k=-1, dtype=bool).T  # keep i < j
    i, j = np.nonzero(mask)
    return i.astype(np.int64), j.astype(np.int64), d[i, j], dt[i, j]


def _close_pairs_cells(sx, sy, tt, rmax, tmax):
    # cell lists with cell side rmax; O(n * neighbours)
    n = sx.shape[0]
    xmin = sx.min()
    ymin = sy.min()
    ncx = max(1, int((sx.max() - xmin) / rmax) + 1)
    ncy = max(1, int((sy.max() - ymin) / rmax) + 1)
    cell = np.empty(n, dtype=np.int64)
    for k in range(n):
        cx = int((sx[k] - xmin) / rmax)
        cy = int((sy[k] - ymin) / rmax)
        if cx >= ncx:
            cx = ncx - 1
        if cy >= ncy:
            cy = ncy - 1
        cell[k] = cx * ncy + cy
    order = np.argsort(cell, kind="mergesort")
    start = np.zeros(ncx * ncy + 1, dtype=np.int64)
    for k in range(n):
        start[cell[k] + 1] += 1
    for c in range(ncx * ncy):
        start[c + 1] += start[c]

    count = 0
    for pass_ in range(2):
        if pass_ == 1:
            out_i = np.empty(count, dtype=np.int64)
            out_j = np.empty(count, dtype=np.int64)
            out_d = np.empty(count)
            out_t = np.empty(count)
        m = 0
        for a in range(n):
            ia = order[a]
            cx = cell[ia] // ncy
            cy = cell[ia] % ncy
            for ox in range(-1, 2):
                nx = cx + ox
                if nx < 0 or nx >= ncx:
                    continue
                for oy in range(-1, 2):
                    ny = cy + oy
                    if ny < 0 or ny >= ncy:
                        continue
                    c = nx * ncy + ny
                    for b in range(start[c], start[c + 1]):
                        ib = order[b]
                        if ib <= ia:
                            continue
                        dtv = tt[ia] - tt[ib]
                        if abs(dtv) > tmax:
                            continue
                        dx = sx[ia] - sx[ib]
                        dy = sy[ia] - sy[ib]
                        d = math.sqrt(dx * dx + dy * dy)
                        if d > rmax:
                            continue
                        if pass_ == 1:
                            if ia < ib:
                                out_i[m] = ia
                                out_j[m] = ib
                                out_t[m] = dtv
                            else:
                                out_i[m] = ib
                                out_j[m] = ia
                                out_t[m] = -dtv
                            out_d[m] = d
                        m += 1
        if pass_ == 0:
            count = m
    return out_i, out_j, out_d, out_t


if _HAVE_NUMBA:
    _close_pairs_cells_jit = njit(cache=True)(_close_pairs_cells)


def _close_pairs_fast(sx, sy, tt, rmax, tmax):
    n = sx.shape[0]
    if n < 2:
        z = np.zeros(0)
        return z.astype(np.int64), z.astype(np.int64), z, z
    i, j, d, dt = _close_pairs_cells_jit(sx, sy, tt, rmax, tmax)
    order = np.lexsort((j, i))
    return i[order], j[order], d[order], dt[order]


close_pairs = _close_pairs_fast if USING_NUMBA else close_pairs_numpy


# ---------------------------------------------------------------------------
# rectangle scatter on the evaluation grid
# ---------------------------------------------------------------------------
# Adds wgt[p] to every grid cell (a, b) with lo_u[p] <= a <= hi_u[p] and
# lo_v[p] <= b <= hi_v[p], via a difference array that a shared double
# cumulative sum turns into the dense table.  This single primitive covers
# the cumulative pair counts of the K estimator (hi = last grid index), the
# erosion-indicator rectangles of the border corrections, and the box-kernel
# support of the pair correlation estimator.

def _rect_diff_numpy(lo_u, hi_u, lo_v, hi_v, wgt, nu, nv):
    keep = (lo_u <= hi_u) & (lo_v <= hi_v)
    lu, hu, lv, hv, w = lo_u[keep], hi_u[keep], lo_v[keep], hi_v[keep], wgt[keep]
    stride = nv + 1
    flat = np.concatenate([
        lu * stride + lv,
        (hu + 1) * stride + lv,
        lu * stride + hv + 1,
        (hu + 1) * stride + hv + 1,
    ])
    vals = np.concatenate([w, -w, -w, w])
    diff = np.bincount(flat, weights=vals, minlength=(nu + 1) * stride)
    return diff.reshape(nu + 1, stride)


def _rect_diff_loop(lo_u, hi_u, lo_v, hi_v, wgt, nu, nv):
    # corner-group-major passes so per-cell addition order matches the
    # bincount traversal of the numpy path bit for bit
    diff = np.zeros((nu + 1, nv + 1))
    n = wgt.shape[0]
    for p in range(n):
        if lo_u[p] <= hi_u[p] and lo_v[p] <= hi_v[p]:
            diff[lo_u[p], lo_v[p]] += wgt[p]
    for p in range(n):
        if lo_u[p] <= hi_u[p] and lo_v[p] <= hi_v[p]:
            diff[hi_u[p] + 1, lo_v[p]] -= wgt[p]
    for p in range(n):
        if lo_u[p] <= hi_u[p] and lo_v[p] <= hi_v[p]:
            diff[lo_u[p], hi_v[p] + 1] -= wgt[p]
    for p in range(n):
        if lo_u[p] <= hi_u[p] and lo_v[p] <= hi_v[p]:
            diff[hi_u[p] + 1, hi_v[p] + 1] += wgt[p]
    return diff


if _HAVE_NUMBA:
    _rect_diff_jit = njit(cache=True)(_rect_diff_loop)

_rect_diff = _rect_diff_jit if USING_NUMBA else _rect_diff_numpy


def rect_scatter(lo_u, hi_u, lo_v, hi_v, wgt, nu, nv):
    """Dense (nu, nv) table of rectangle-accumulated weights."""
    diff = _rect_diff(
        np.ascontiguousarray(lo_u, dtype=np.int64),
        np.ascontiguousarray(hi_u, dtype=np.int64),
        np.ascontiguousarray(lo_v, dtype=np.int64),
        np.ascontiguousarray(hi_v, dtype=np.int64),
        np.ascontiguousarray(wgt, dtype=np.float64),
        nu,
        nv,
    )
    return diff.cumsum(axis=0).cumsum(axis=1)[:nu, :nv]


def rect_scatter_numpy(lo_u, hi_u, lo_v, hi_v, wgt, nu, nv):
    diff = _rect_diff_numpy(
        np.asarray(lo_u, dtype=np.int64),
        np.asarray(hi_u, dtype=np.int64),
        np.asarray(lo_v, dtype=np.int64),
        np.asarray(hi_v, dtype=np.int64),
        np.asarray(wgt, dtype=np.float64),
        nu,
        nv,
    )
    return diff.cumsum(axis=0).cumsum(axis=1)[:nu, :nv]


# ---------------------------------------------------------------------------
# kernel field evaluation
# ---------------------------------------------------------------------------

def quartic_field_numpy(px, py, ex, ey, wts, h):
    """Sum of quartic bumps at query points: sum_i wts[i] * k_h(p - e_i)."""
    out = np.zeros(px.shape[0])
    c = 3.0 / (math.pi * h * h)
    chunk = max(1, 2_000_000 // max(1, ex.shape[0]))
    for a in range(0, px.shape[0], chunk):
        dx = px[a:a + chunk, None] - ex[None, :]
        dy = py[a:a + chunk, None] - ey[None, :]
        z2 = (dx * dx + dy * dy) / (h * h)
        inside = z2 <= 1.0
        vals = np.where(inside, (1.0 - z2) ** 2, 0.0) * wts[None, :]
        out[a:a + chunk] = c * vals.sum(axis=1)
    return out


def _quartic_field_loop(px, py, ex, ey, wts, h):
    out = np.zeros(px.shape[0])
    c = 3.0 / (math.pi * h * h)
    h2 = h * h
    for a in range(px.shape[0]):
        acc = 0.0
        for i in range(ex.shape[0]):
            dx = px[a] - ex[i]
            if dx > h or dx < -h:
                continue
            dy = py[a] - ey[i]
            z2 = (dx * dx + dy * dy) / h2
            if z2 <= 1.0:
                u = 1.0 - z2
                acc += wts[i] * u * u
        out[a] = c * acc
    return out


if _HAVE_NUMBA:
    _quartic_field_jit = njit(cache=True)(_quartic_field_loop)

quartic_field = _quartic_field_jit if USING_NUMBA else quartic_field_numpy
quartic_field_numba = _quartic_field_jit if _HAVE_NUMBA else None
close_pairs_numba = _close_pairs_fast if _HAVE_NUMBA else None
