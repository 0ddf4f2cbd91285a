# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Grid-bucketed line/point incidence counting for d=2, n=1.

Two passes over a plane-major traversal: `count_pass` tallies candidates per
line, `fill_pass` writes the exact pair lists into preallocated slices.  Both
parallelize over lines with a static schedule, so the output is identical for
any thread count.  The candidate filter is conservative; the final closed-ball
test |<p, normal> - q| <= r decides membership, with the same floating-point
expression as the pure fallback (compiled with contraction disabled).
"""

from cython.parallel import prange
from libc.math cimport floor, fabs

import numpy as np


cdef inline long _clip(long v, long lo, long hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef long _scan_line(double ux, double uy, double q, double r,
                     double[:, ::1] pts, long[::1] order, long[::1] start,
                     double x0, double y0, double g, long nx, long ny,
                     long[::1] out_pts, long write, bint fill) nogil:
    """Count (fill=0) or emit (fill=1) the points within r of one line."""
    cdef double nrm_x = -uy
    cdef double nrm_y = ux
    cdef double pad, lo, hi, ya, yb, px, py, dist
    cdef long ix, jy, jlo, jhi, b0, b1, m, total = 0
    cdef long cand
    if fabs(ux) >= fabs(uy):
        # near-horizontal: per column, the slab meets a contiguous row range
        pad = (r * (1 + 1e-12) + 1e-14) / fabs(nrm_y)
        for ix in range(nx):
            ya = (q - nrm_x * (x0 + ix * g)) / nrm_y
            yb = (q - nrm_x * (x0 + (ix + 1) * g)) / nrm_y
            if ya > yb:
                lo = yb
                hi = ya
            else:
                lo = ya
                hi = yb
            jlo = <long> floor((lo - pad - y0) / g)
            jhi = <long> floor((hi + pad - y0) / g)
            if jhi < 0 or jlo >= ny:
                continue
            jlo = _clip(jlo, 0, ny - 1)
            jhi = _clip(jhi, 0, ny - 1)
            b0 = start[ix * ny + jlo]
            b1 = start[ix * ny + jhi + 1]
            for m in range(b0, b1):
                cand = order[m]
                px = pts[cand, 0]
                py = pts[cand, 1]
                dist = fabs(px * nrm_x + py * nrm_y - q)
                if dist <= r:
                    if fill:
                        out_pts[write + total] = cand
                    total += 1
    else:
        # near-vertical: per row, a contiguous column range of single buckets
        pad = (r * (1 + 1e-12) + 1e-14) / fabs(nrm_x)
        for jy in range(ny):
            ya = (q - nrm_y * (y0 + jy * g)) / nrm_x
            yb = (q - nrm_y * (y0 + (jy + 1) * g)) / nrm_x
            if ya > yb:
                lo = yb
                hi = ya
            else:
                lo = ya
                hi = yb
            jlo = <long> floor((lo - pad - x0) / g)
            jhi = <long> floor((hi + pad - x0) / g)
            if jhi < 0 or jlo >= nx:
                continue
            jlo = _clip(jlo, 0, nx - 1)
            jhi = _clip(jhi, 0, nx - 1)
            for ix in range(jlo, jhi + 1):
                b0 = start[ix * ny + jy]
                b1 = start[ix * ny + jy + 1]
                for m in range(b0, b1):
                    cand = order[m]
                    px = pts[cand, 0]
                    py = pts[cand, 1]
                    dist = fabs(px * nrm_x + py * nrm_y - q)
                    if dist <= r:
                        if fill:
                            out_pts[write + total] = cand
                        total += 1
    return total


def count_pass(double[:, ::1] pts, long[::1] order, long[::1] start,
               double x0, double y0, double g, long nx, long ny,
               double[:, ::1] dirs, double[::1] qs, double r, int threads):
    cdef long n_lines = dirs.shape[0]
    cdef long[::1] counts = np.zeros(n_lines, dtype=np.int64)
    cdef long[::1] dummy = np.zeros(1, dtype=np.int64)
    cdef long i
    cdef int nt = threads if threads > 0 else 0
    if nt > 0:
        for i in prange(n_lines, nogil=True, schedule="static", num_threads=nt):
            counts[i] = _scan_line(dirs[i, 0], dirs[i, 1], qs[i], r, pts,
                                   order, start, x0, y0, g, nx, ny,
                                   dummy, 0, 0)
    else:
        for i in prange(n_lines, nogil=True, schedule="static"):
            counts[i] = _scan_line(dirs[i, 0], dirs[i, 1], qs[i], r, pts,
                                   order, start, x0, y0, g, nx, ny,
                                   dummy, 0, 0)
    return np.asarray(counts)


def fill_pass(double[:, ::1] pts, long[::1] order, long[::1] start,
              double x0, double y0, double g, long nx, long ny,
              double[:, ::1] dirs, double[::1] qs, double r,
              long[::1] offsets, int threads):
    cdef long n_lines = dirs.shape[0]
    cdef long total = offsets[n_lines]
    cdef long[::1] out_pts = np.empty(total, dtype=np.int64)
    cdef long i
    cdef int nt = threads if threads > 0 else 0
    if nt > 0:
        for i in prange(n_lines, nogil=True, schedule="static", num_threads=nt):
            _scan_line(dirs[i, 0], dirs[i, 1], qs[i], r, pts, order, start,
                       x0, y0, g, nx, ny, out_pts, offsets[i], 1)
    else:
        for i in prange(n_lines, nogil=True, schedule="static"):
            _scan_line(dirs[i, 0], dirs[i, 1], qs[i], r, pts, order, start,
                       x0, y0, g, nx, ny, out_pts, offsets[i], 1)
    return np.asarray(out_pts)
