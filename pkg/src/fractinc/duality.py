"""Point-hyperplane duality: the graph parametrization sending x to the
plane {(y, <x', y> + x_d)}, its inverse on non-vertical planes, incidence and
distance comparisons, and dualization of line-fiber configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import DUALITY_RADIUS
from .geometry import (AffinePlane, PlaneFamily, PointCloud,
                       dist_points_to_plane, grassmann_distance,
                       verify_family_separation)


@dataclass(frozen=True)
class DualityContext:
    """Ambient dimension plus the safe horizontal-neighborhood radius: every
    plane within that distance of the horizontal hyperplane inverts to a
    point of the unit ball."""

    d: int
    radius: float = DUALITY_RADIUS

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("duality needs ambient dimension >= 2")
        if not (0 < self.radius < 1):
            raise ValueError("radius must lie in (0, 1)")

    @property
    def v0(self) -> AffinePlane:
        basis = np.eye(self.d)[: self.d - 1]
        return AffinePlane(d=self.d, n=self.d - 1, basis=basis,
                           offset=np.zeros(self.d))

    def distance_to_horizontal(self, fam: PlaneFamily) -> np.ndarray:
        v0 = self.v0
        return np.array([grassmann_distance(fam[i], v0) for i in range(len(fam))])


def _tangent_basis(normal: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the hyperplane normal^perp."""
    d = normal.size
    if d == 2:
        return np.array([[-normal[1], normal[0]]])
    if d == 3:
        seed_vec = np.zeros(3)
        seed_vec[int(np.argmin(np.abs(normal)))] = 1.0
        t1 = seed_vec - normal * (seed_vec @ normal)
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(normal, t1)
        return np.stack([t1, t2])
    _, _, vt = np.linalg.svd(normal[None, :])
    return vt[1:]


def dual_plane(x) -> AffinePlane:
    """Graph hyperplane {(y, <x', y> + x_d)} in orthonormal form."""
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.size
    xp, xd = x[:-1], x[-1]
    nsq = 1.0 + float(xp @ xp)
    normal = np.concatenate([xp, [-1.0]]) / math.sqrt(nsq)
    offset = -xd / nsq * np.concatenate([xp, [-1.0]])
    return AffinePlane(d=d, n=d - 1, basis=_tangent_basis(normal), offset=offset)


def graph_coefficients(plane: AffinePlane):
    """Recover (x', x_d) with plane = {(y, <x', y> + x_d)}; raises if the
    plane contains a vertical direction (not a graph)."""
    if plane.n != plane.d - 1:
        raise ValueError("duality applies to hyperplanes only")
    _, _, vt = np.linalg.svd(plane.basis)
    normal = vt[-1]
    if abs(normal[-1]) < 1e-9:
        raise ValueError("plane contains a vertical translate; not a graph")
    if normal[-1] > 0:
        normal = -normal
    xp = -normal[:-1] / normal[-1]
    xd = float(plane.offset @ normal) / normal[-1]
    return xp, xd


def dual_point(plane: AffinePlane, ctx: DualityContext | None = None) -> np.ndarray:
    """Reflected preimage (-x', x_d) of a graph hyperplane."""
    xp, xd = graph_coefficients(plane)
    return np.concatenate([-xp, [xd]])


def dual_planes_batch(points: np.ndarray) -> PlaneFamily:
    """dual_plane over rows of an (m, d) array, as one family (d in {2, 3})."""
    pts = np.asarray(points, dtype=float)
    m, d = pts.shape
    xp, xd = pts[:, :-1], pts[:, -1]
    nsq = 1.0 + np.sum(xp ** 2, axis=1)
    nrm = np.sqrt(nsq)
    normal = np.concatenate([xp, -np.ones((m, 1))], axis=1) / nrm[:, None]
    offset = (-xd / nsq)[:, None] * np.concatenate([xp, -np.ones((m, 1))], axis=1)
    if d == 2:
        basis = np.stack([-normal[:, 1], normal[:, 0]], axis=1)[:, None, :]
    elif d == 3:
        seed_vec = np.zeros((m, 3))
        seed_vec[np.arange(m), np.argmin(np.abs(normal), axis=1)] = 1.0
        t1 = seed_vec - normal * np.sum(seed_vec * normal, axis=1, keepdims=True)
        t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
        t2 = np.cross(normal, t1)
        basis = np.stack([t1, t2], axis=1)
    else:
        raise NotImplementedError("batched duals implemented for d in {2, 3}")
    return PlaneFamily(d=d, n=d - 1, basis=basis, offset=offset, separation=0.0)


def dual_points_batch(fam: PlaneFamily) -> np.ndarray:
    return np.stack([dual_point(fam[i]) for i in range(len(fam))])


def _dist_many(points: np.ndarray, fam: PlaneFamily) -> np.ndarray:
    """dist(points[i], fam[i]) for paired arrays (m aligned pairs)."""
    out = np.empty(len(points))
    for i in range(len(points)):
        basis = fam.basis[i]
        rel = points[i] - fam.offset[i]
        out[i] = np.linalg.norm(rel - basis.T @ (basis @ rel))
    return out


@dataclass
class DualityReport:
    pairs_checked: int
    incidence_mismatches: int
    factor3_violations: int
    max_ratio: float
    min_ratio: float
    bilipschitz_forward: float
    bilipschitz_backward: float

    def to_dict(self):
        return {
            "pairs_checked": self.pairs_checked,
            "incidence_mismatches": self.incidence_mismatches,
            "factor3_violations": self.factor3_violations,
            "distance_ratio_range": [self.min_ratio, self.max_ratio],
            "bilipschitz_forward": self.bilipschitz_forward,
            "bilipschitz_backward": self.bilipschitz_backward,
        }


def verify_duality_relations(cloud: PointCloud, fam: PlaneFamily,
                             ctx: DualityContext, max_pairs: int = 100_000,
                             seed: int = 0, incidence_tol: float = 1e-10) -> DualityReport:
    """Checks, over sampled (point, plane) pairs: membership transfers both
    ways at tolerance, the two-sided factor-3 distance comparison, and the
    empirical bilipschitz constants of the maps on the stated balls."""
    pts = cloud.points
    if np.any(np.linalg.norm(pts, axis=1) > 2.0 + 1e-9):
        raise ValueError("points must lie in the ball of radius 2")
    ball_dist = ctx.distance_to_horizontal(fam)
    if np.any(ball_dist > ctx.radius + 1e-9):
        raise ValueError("planes must lie within the context radius "
                         "of the horizontal plane")

    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xD0A1]))
    n_pts, n_pl = len(pts), len(fam)
    total = n_pts * n_pl
    if total <= max_pairs:
        pi = np.repeat(np.arange(n_pts), n_pl)
        vi = np.tile(np.arange(n_pl), n_pts)
    else:
        pi = rng.integers(0, n_pts, size=max_pairs)
        vi = rng.integers(0, n_pl, size=max_pairs)

    duals_of_planes = dual_points_batch(fam)       # (n_pl, d)
    planes_of_points = dual_planes_batch(pts)      # (n_pts,) family

    d_primal = np.empty(len(pi))
    order = np.argsort(vi, kind="stable")
    bounds = np.flatnonzero(np.diff(vi[order])) + 1
    for grp in np.split(order, bounds):
        j = int(vi[grp[0]])
        d_primal[grp] = dist_points_to_plane(pts[pi[grp]], fam[j])
    d_dual = np.empty(len(pi))
    order = np.argsort(pi, kind="stable")
    bounds = np.flatnonzero(np.diff(pi[order])) + 1
    for grp in np.split(order, bounds):
        i = int(pi[grp[0]])
        d_dual[grp] = dist_points_to_plane(duals_of_planes[vi[grp]],
                                           planes_of_points[i])

    fwd = (d_primal <= incidence_tol) & (d_dual > 3 * incidence_tol)
    bwd = (d_dual <= incidence_tol) & (d_primal > 3 * incidence_tol)
    mism = int(np.count_nonzero(fwd | bwd))
    # the ratio comparison is meaningful only above the incidence tolerance:
    # below it both distances are float noise and the transfer check above
    # already covers the pair
    live = (d_primal > incidence_tol) & (d_dual > incidence_tol)
    ratio = np.where(live, d_primal / np.where(live, d_dual, 1.0), 1.0)
    viol = int(np.count_nonzero((ratio > 3.0) | (ratio < 1.0 / 3.0)))

    # empirical bilipschitz constants on sampled index pairs
    m = min(2000, n_pts)
    sel_p = rng.choice(n_pts, size=m, replace=n_pts < m)
    lf = 1.0
    for a in range(0, m - 1, 2):
        i, j = sel_p[a], sel_p[a + 1]
        gap = float(np.linalg.norm(pts[i] - pts[j]))
        if gap < 1e-12:
            continue
        da = grassmann_distance(planes_of_points[i], planes_of_points[j])
        lf = max(lf, da / gap, gap / da)
    mv = min(2000, n_pl)
    sel_v = rng.choice(n_pl, size=mv, replace=n_pl < mv)
    lb = 1.0
    for a in range(0, mv - 1, 2):
        i, j = sel_v[a], sel_v[a + 1]
        da = grassmann_distance(fam[i], fam[j])
        if da < 1e-12:
            continue
        gap = float(np.linalg.norm(duals_of_planes[i] - duals_of_planes[j]))
        lb = max(lb, gap / da, da / gap)

    return DualityReport(pairs_checked=len(pi), incidence_mismatches=mism,
                         factor3_violations=viol,
                         max_ratio=float(ratio[live].max()) if live.any() else 1.0,
                         min_ratio=float(ratio[live].min()) if live.any() else 1.0,
                         bilipschitz_forward=lf, bilipschitz_backward=lb)


@dataclass
class DualConfig:
    """Dualized line-fiber configuration."""

    dual_points: PointCloud
    dual_planes: PlaneFamily
    fiber_plane_indices: dict = field(default_factory=dict)
    max_fiber_distance: float = 0.0


def dualize_furstenberg_config(fam: PlaneFamily, fibers: dict,
                               ctx: DualityContext, delta: float) -> DualConfig:
    """Swap roles: each input plane becomes a point, each fiber point becomes
    a plane; fiber incidences survive with distance at most 6 delta."""
    ball_dist = ctx.distance_to_horizontal(fam)
    if np.any(ball_dist > ctx.radius + 1e-9):
        raise ValueError("planes must lie within the context radius "
                         "of the horizontal plane")
    for i, cloud in fibers.items():
        pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud)
        if np.any(np.linalg.norm(pts, axis=1) > 2.0 + 1e-9):
            raise ValueError(f"fiber {i} leaves the radius-2 ball")
        if np.any(dist_points_to_plane(pts, fam[i]) > 2 * delta * (1 + 1e-9)):
            raise ValueError(f"fiber {i} leaves the 2*delta neighborhood of its plane")

    dpts = dual_points_batch(fam)
    if len(dpts) > 1:
        diffs = dpts[:, None, :] - dpts[None, :, :]
        dm = np.linalg.norm(diffs, axis=-1)
        np.fill_diagonal(dm, np.inf)
        sep = float(dm.min())
    else:
        sep = 1.0
    p_d = PointCloud(d=fam.d, points=dpts, separation=sep,
                     bounding_radius=float(np.linalg.norm(dpts, axis=1).max()))

    all_pts, index_map = [], {}
    cursor = 0
    for i in sorted(fibers):
        pts = fibers[i].points if isinstance(fibers[i], PointCloud) else np.asarray(fibers[i])
        all_pts.append(pts)
        index_map[i] = np.arange(cursor, cursor + len(pts), dtype=np.int64)
        cursor += len(pts)
    stacked = np.concatenate(all_pts, axis=0)
    v_d = dual_planes_batch(stacked)
    v_d.separation = verify_family_separation(v_d, max_pairs=200_000, seed=0)

    worst = 0.0
    for i in sorted(fibers):
        planes_idx = index_map[i]
        for j in planes_idx:
            dd = float(dist_points_to_plane(dpts[i][None, :], v_d[int(j)])[0])
            worst = max(worst, dd)
    if worst > 6 * delta * (1 + 1e-9):
        raise AssertionError(f"dual fiber distance {worst} exceeds 6*delta")
    return DualConfig(dual_points=p_d, dual_planes=v_d,
                      fiber_plane_indices=index_map, max_fiber_distance=worst)


def calibrate_duality_radius(d: int = 2, samples: int = 1_000_000,
                             seed: int = 0) -> float:
    """Largest radius (halved for safety) such that sampled planes near the
    horizontal plane all invert inside the unit ball."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x4A11]))
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = (lo + hi) / 2
        frac = rng.uniform(0.0, 1.0, size=4096)
        theta = np.arcsin(np.minimum(mid * frac, 1.0 - 1e-12))
        q = mid * (1 - frac)
        xp = np.tan(theta)
        xd = q / np.cos(theta)
        ok = np.all(xp ** 2 + xd ** 2 <= 1.0)
        if ok:
            lo = mid
        else:
            hi = mid
    del samples
    return lo / 2.0
