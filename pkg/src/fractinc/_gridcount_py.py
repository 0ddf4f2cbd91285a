"""Pure-NumPy fallback for the grid-bucketed incidence kernel.

Mirrors the compiled extension's traversal (same candidate cells, same
closed-ball test, same emission order) so both produce identical tallies.
"""

from __future__ import annotations

import numpy as np


def _multi_range_concat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Concatenate arange(a[i], b[i]) for all i, preserving order."""
    lens = b - a
    keep = lens > 0
    a, lens = a[keep], lens[keep]
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    steps = np.ones(total, dtype=np.int64)
    steps[0] = a[0]
    starts = np.cumsum(lens)[:-1]
    steps[starts] = a[1:] - (a[:-1] + lens[:-1] - 1)
    return np.cumsum(steps)


def _line_candidates(ux, uy, q, r, order, start, x0, y0, g, nx, ny):
    nrm_x, nrm_y = -uy, ux
    if abs(ux) >= abs(uy):
        pad = (r * (1 + 1e-12) + 1e-14) / abs(nrm_y)
        edges = x0 + np.arange(nx + 1) * g
        ys = (q - nrm_x * edges) / nrm_y
        lo = np.minimum(ys[:-1], ys[1:]) - pad
        hi = np.maximum(ys[:-1], ys[1:]) + pad
        jlo = np.floor((lo - y0) / g).astype(np.int64)
        jhi = np.floor((hi - y0) / g).astype(np.int64)
        ok = (jhi >= 0) & (jlo < ny)
        ix = np.nonzero(ok)[0]
        jlo = np.clip(jlo[ok], 0, ny - 1)
        jhi = np.clip(jhi[ok], 0, ny - 1)
        b0 = start[ix * ny + jlo]
        b1 = start[ix * ny + jhi + 1]
        return order[_multi_range_concat(b0, b1)]
    pad = (r * (1 + 1e-12) + 1e-14) / abs(nrm_x)
    edges = y0 + np.arange(ny + 1) * g
    xs = (q - nrm_y * edges) / nrm_x
    lo = np.minimum(xs[:-1], xs[1:]) - pad
    hi = np.maximum(xs[:-1], xs[1:]) + pad
    ilo = np.floor((lo - x0) / g).astype(np.int64)
    ihi = np.floor((hi - x0) / g).astype(np.int64)
    ok = (ihi >= 0) & (ilo < nx)
    jy = np.nonzero(ok)[0]
    ilo = np.clip(ilo[ok], 0, nx - 1)
    ihi = np.clip(ihi[ok], 0, nx - 1)
    # expand each row's column range into single-bucket id ranges
    widths = ihi - ilo + 1
    rows = np.repeat(jy, widths)
    cols = _multi_range_concat(ilo, ihi + 1)
    ids = cols * ny + rows
    return order[_multi_range_concat(start[ids], start[ids + 1])]


def count_pass(pts, order, start, x0, y0, g, nx, ny, dirs, qs, r, threads=0):
    counts = np.empty(len(dirs), dtype=np.int64)
    for i in range(len(dirs)):
        cand = _line_candidates(dirs[i, 0], dirs[i, 1], qs[i], r,
                                order, start, x0, y0, g, nx, ny)
        d = np.abs(pts[cand, 0] * (-dirs[i, 1]) + pts[cand, 1] * dirs[i, 0] - qs[i])
        counts[i] = int(np.count_nonzero(d <= r))
    return counts


def fill_pass(pts, order, start, x0, y0, g, nx, ny, dirs, qs, r, offsets, threads=0):
    out = np.empty(int(offsets[-1]), dtype=np.int64)
    for i in range(len(dirs)):
        cand = _line_candidates(dirs[i, 0], dirs[i, 1], qs[i], r,
                                order, start, x0, y0, g, nx, ny)
        d = np.abs(pts[cand, 0] * (-dirs[i, 1]) + pts[cand, 1] * dirs[i, 0] - qs[i])
        hit = cand[d <= r]
        out[offsets[i]: offsets[i] + len(hit)] = hit
    return out
