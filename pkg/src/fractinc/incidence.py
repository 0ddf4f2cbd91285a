"""Incidence counting between separated point clouds and plane families,
the incidence-count upper bound, and dyadic pigeonhole extraction.

The d=2 line case runs on a grid-bucketed kernel (compiled extension when
available, NumPy fallback otherwise — set FRACTINC_PURE=1 to force the
fallback).  Other (d, n) run a blocked exact scan.  All paths produce the
exact closed-ball pair set; kernel choice and thread count never change the
output.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _gridcount_py
from .geometry import PlaneFamily, PointCloud

if os.environ.get("FRACTINC_PURE", "0") == "1":
    _gridcount = None
else:
    try:
        from . import _gridcount
    except ImportError:
        _gridcount = None

HAVE_COMPILED = _gridcount is not None
KERNEL_NAME = "compiled" if HAVE_COMPILED else "numpy"

_num_threads = 0  # 0 = library default


def set_num_threads(n: int) -> None:
    """Thread count for the compiled kernel (0 = default).  Results are
    identical for every setting; this only affects speed."""
    global _num_threads
    _num_threads = max(0, int(n))


@dataclass
class IncidenceTally:
    """Exact pair set {(point, plane): dist(point, plane) <= r}, stored
    plane-major: point_idx[offsets[i]:offsets[i+1]] are plane i's points."""

    n_points: int
    n_planes: int
    r: float
    point_idx: np.ndarray  # (m,) int64
    offsets: np.ndarray    # (n_planes + 1,) int64

    @property
    def total(self) -> int:
        return int(self.offsets[-1])

    @cached_property
    def plane_idx(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_planes, dtype=np.int64),
                         np.diff(self.offsets))

    @cached_property
    def per_plane(self) -> np.ndarray:
        return np.diff(self.offsets)

    @cached_property
    def per_point(self) -> np.ndarray:
        return np.bincount(self.point_idx, minlength=self.n_points)

    def pairs(self) -> np.ndarray:
        return np.stack([self.point_idx, self.plane_idx], axis=1)

    def check_consistent(self) -> None:
        assert int(self.per_plane.sum()) == self.total
        assert int(self.per_point.sum()) == self.total

    def histogram(self, counts: np.ndarray) -> dict:
        nz = counts[counts > 0]
        if len(nz) == 0:
            return {}
        bins = np.floor(np.log2(nz)).astype(int)
        out = {}
        for j in range(bins.max() + 1):
            c = int(np.count_nonzero(bins == j))
            if c:
                out[str(2 ** j)] = c
        return out


def _extract_points(obj) -> np.ndarray:
    if isinstance(obj, PointCloud):
        return obj.points
    return np.asarray(obj, dtype=float)


def _grid_index(pts: np.ndarray, cell: float):
    """Bucket 2-d points into a uniform grid of pitch >= cell."""
    x0, y0 = pts.min(axis=0)
    span = pts.max(axis=0) - pts.min(axis=0)
    g = max(cell, 1e-12)
    # cap the table size at ~8 cells per point
    max_cells = 8 * len(pts) + 1024
    while True:
        nx = max(1, int(math.ceil(span[0] / g)) + 1)
        ny = max(1, int(math.ceil(span[1] / g)) + 1)
        if nx * ny <= max_cells:
            break
        g *= 2.0
    ix = np.minimum((pts[:, 0] - x0) / g, nx - 1).astype(np.int64)
    iy = np.minimum((pts[:, 1] - y0) / g, ny - 1).astype(np.int64)
    ids = ix * ny + iy
    order = np.argsort(ids, kind="stable").astype(np.int64)
    start = np.zeros(nx * ny + 1, dtype=np.int64)
    np.cumsum(np.bincount(ids, minlength=nx * ny), out=start[1:])
    return float(x0), float(y0), float(g), nx, ny, order, start


def _line_params(fam: PlaneFamily):
    dirs = np.ascontiguousarray(fam.basis[:, 0, :], dtype=float)
    qs = np.ascontiguousarray(
        fam.offset[:, 0] * (-dirs[:, 1]) + fam.offset[:, 1] * dirs[:, 0])
    return dirs, qs


def count_incidences(cloud, fam: PlaneFamily, r: float,
                     separation: float | None = None) -> IncidenceTally:
    """Exact closed-ball incidence tally between a cloud and a plane family."""
    if r <= 0:
        raise ValueError("incidence radius must be positive")
    pts = _extract_points(cloud)
    if pts.ndim != 2 or pts.shape[1] != fam.d:
        raise ValueError("dimension mismatch between points and planes")
    if fam.d == 2 and fam.n == 1:
        sep = separation
        if sep is None:
            sep = cloud.separation if isinstance(cloud, PointCloud) else r
        pts_c = np.ascontiguousarray(pts, dtype=float)
        x0, y0, g, nx, ny, order, start = _grid_index(pts_c, max(r, sep))
        dirs, qs = _line_params(fam)
        mod = _gridcount if HAVE_COMPILED else _gridcount_py
        counts = mod.count_pass(pts_c, order, start, x0, y0, g, nx, ny,
                                dirs, qs, float(r), _num_threads)
        offsets = np.zeros(len(fam) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        point_idx = mod.fill_pass(pts_c, order, start, x0, y0, g, nx, ny,
                                  dirs, qs, float(r), offsets, _num_threads)
        return IncidenceTally(n_points=len(pts), n_planes=len(fam), r=float(r),
                              point_idx=np.asarray(point_idx), offsets=offsets)
    return _count_general(pts, fam, r)


def _count_general(pts: np.ndarray, fam: PlaneFamily, r: float) -> IncidenceTally:
    """Blocked exact scan for arbitrary (d, n)."""
    hits = []
    counts = np.zeros(len(fam), dtype=np.int64)
    for i in range(len(fam)):
        basis = fam.basis[i]
        rel = pts - fam.offset[i]
        tang = rel @ basis.T @ basis
        dist = np.linalg.norm(rel - tang, axis=1)
        idx = np.nonzero(dist <= r)[0].astype(np.int64)
        counts[i] = len(idx)
        hits.append(idx)
    offsets = np.zeros(len(fam) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    point_idx = (np.concatenate(hits) if hits else np.empty(0, dtype=np.int64))
    return IncidenceTally(n_points=len(pts), n_planes=len(fam), r=float(r),
                          point_idx=point_idx, offsets=offsets)


def brute_force_pairs(cloud, fam: PlaneFamily, r: float) -> np.ndarray:
    """Oracle: all (point, plane) pairs by direct evaluation, plane-major.

    Uses the same normal-form distance as the kernels for d=2 lines so the
    closed-ball boundary is decided identically.
    """
    pts = _extract_points(cloud)
    out = []
    if fam.d == 2 and fam.n == 1:
        dirs, qs = _line_params(fam)
        for i in range(len(fam)):
            dist = np.abs(pts[:, 0] * (-dirs[i, 1]) + pts[:, 1] * dirs[i, 0] - qs[i])
            for p in np.nonzero(dist <= r)[0]:
                out.append((p, i))
    else:
        for i in range(len(fam)):
            basis = fam.basis[i]
            rel = pts - fam.offset[i]
            dist = np.linalg.norm(rel - rel @ basis.T @ basis, axis=1)
            for p in np.nonzero(dist <= r)[0]:
                out.append((p, i))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------------------
# Analytic count bound
# ---------------------------------------------------------------------------

def incidence_bound_rhs(n_points: int, n_planes: int, delta: float, d: int,
                        n: int, t: float, frostman_constant: float,
                        eps: float) -> float:
    """Upper bound delta^-eps * C_F * |P| * |V|^(n/(d+n-t))
    * delta^(n(t+1-d)(d-n)/(d+n-t))."""
    if not (0 < n < d):
        raise ValueError("need 0 < n < d")
    if t <= d - n:
        raise ValueError("bound requires t > d - n")
    if not (0 < delta <= 1):
        raise ValueError("delta must lie in (0, 1]")
    expo_v = n / (d + n - t)
    expo_d = n * (t + 1 - d) * (d - n) / (d + n - t)
    return (delta ** (-eps) * frostman_constant * n_points
            * n_planes ** expo_v * delta ** expo_d)


# ---------------------------------------------------------------------------
# Dyadic pigeonhole
# ---------------------------------------------------------------------------

@dataclass
class PigeonholeResult:
    """Uniform dyadic subfamilies: planes V_1 with per-plane count in (N/2, N],
    and (after the second stage) points P_1 with per-point count in (M/2, M].
    N == 0 signals an empty tally."""

    N: int
    V_1: np.ndarray
    M: int
    P_1: np.ndarray
    log_factor: float


def _dyadic_select(counts: np.ndarray):
    """Pick the dyadic class [2^j, 2^(j+1)) maximizing (member count) * 2^j,
    lowest j on ties.  Returns (level max, member indices, 2 * #classes)."""
    nz_idx = np.nonzero(counts > 0)[0]
    if len(nz_idx) == 0:
        return 0, np.empty(0, dtype=np.int64), 0.0
    cls = np.floor(np.log2(counts[nz_idx])).astype(int)
    classes = np.unique(cls)
    weights = [(int(np.count_nonzero(cls == j)) * 2 ** int(j), int(j)) for j in classes]
    best_w = max(w for w, _ in weights)
    j_star = min(j for w, j in weights if w == best_w)
    members = nz_idx[cls == j_star]
    n_level = int(counts[members].max())
    return n_level, members.astype(np.int64), 2.0 * len(classes)


def pigeonhole_uniform(tally: IncidenceTally, side: str = "plane") -> PigeonholeResult:
    """One-sided dyadic uniformization of an incidence tally."""
    if side not in ("plane", "point"):
        raise ValueError("side must be 'plane' or 'point'")
    if tally.total == 0:
        return PigeonholeResult(N=0, V_1=np.empty(0, dtype=np.int64), M=0,
                                P_1=np.empty(0, dtype=np.int64), log_factor=0.0)
    counts = tally.per_plane if side == "plane" else tally.per_point
    level, members, lf = _dyadic_select(counts)
    if side == "plane":
        return PigeonholeResult(N=level, V_1=members, M=0,
                                P_1=np.empty(0, dtype=np.int64), log_factor=lf)
    return PigeonholeResult(N=0, V_1=np.empty(0, dtype=np.int64), M=level,
                            P_1=members, log_factor=lf)


def pigeonhole_two_stage(tally: IncidenceTally) -> PigeonholeResult:
    """Planes first, then points of the tally restricted to the kept planes."""
    first = pigeonhole_uniform(tally, side="plane")
    if first.N == 0:
        return first
    keep = np.zeros(tally.n_planes, dtype=bool)
    keep[first.V_1] = True
    mask = keep[tally.plane_idx]
    sub_counts = np.bincount(tally.point_idx[mask], minlength=tally.n_points)
    m_level, p_members, lf2 = _dyadic_select(sub_counts)
    return PigeonholeResult(N=first.N, V_1=first.V_1, M=m_level, P_1=p_members,
                            log_factor=max(first.log_factor, lf2))


def restricted_total(tally: IncidenceTally, plane_subset: np.ndarray) -> int:
    return int(tally.per_plane[plane_subset].sum())


# ---------------------------------------------------------------------------
# Per-point direction separation (reported, not used for extraction)
# ---------------------------------------------------------------------------

def direction_separation_stats(tally: IncidenceTally, fam: PlaneFamily,
                               rho: float, max_points: int = 64,
                               seed: int = 0) -> dict:
    """For sampled points, the fraction of incident-plane directions that
    survive greedy rho-separated thinning (operator-norm metric on
    direction projectors; |sin dtheta| for lines in the plane)."""
    busy = np.nonzero(tally.per_point >= 2)[0]
    if len(busy) == 0:
        return {"sampled_points": 0, "min_fraction": 1.0, "mean_fraction": 1.0}
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xD17]))
    if len(busy) > max_points:
        busy = rng.choice(busy, size=max_points, replace=False)
    order = np.argsort(tally.point_idx, kind="stable")
    sorted_pts = tally.point_idx[order]
    fracs = []
    for p in busy:
        lo, hi = np.searchsorted(sorted_pts, [p, p + 1])
        planes = tally.plane_idx[order[lo:hi]]
        if len(planes) > 256:
            planes = planes[rng.choice(len(planes), size=256, replace=False)]
        if fam.d == 2 and fam.n == 1:
            th = np.arctan2(fam.basis[planes, 0, 1], fam.basis[planes, 0, 0])
            kept = []
            for ang in th:
                if all(abs(math.sin(ang - k)) > rho for k in kept):
                    kept.append(ang)
            fracs.append(len(kept) / len(th))
        else:
            pmats = {i: fam.basis[i].T @ fam.basis[i] for i in planes}
            kept = []
            for i in planes:
                ok = True
                for kdx in kept:
                    op = float(np.linalg.norm(pmats[i] - pmats[kdx], ord=2))
                    if op <= rho:
                        ok = False
                        break
                if ok:
                    kept.append(i)
            fracs.append(len(kept) / len(planes))
    return {"sampled_points": int(len(busy)),
            "min_fraction": float(np.min(fracs)),
            "mean_fraction": float(np.mean(fracs))}
