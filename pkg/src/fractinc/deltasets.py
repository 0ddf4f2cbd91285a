"""Discretized fractal sets: covering counts, Frostman-condition validation,
self-similar generators, and the tube/line sharpness construction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PlaneFamily, PointCloud, Resolution
from .measures import GridMeasure


def _as_points(obj) -> np.ndarray:
    if isinstance(obj, PointCloud):
        return obj.points
    pts = np.asarray(obj, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def covering_number(points, rho: float) -> int:
    """Greedy packing count: size of a maximal rho-separated subset.

    Built by farthest-first traversal; the result upper-bounds the exact
    covering number at radius rho and lower-bounds it at radius rho/2, and is
    monotone non-increasing in rho.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    pts = _as_points(points)
    if len(pts) == 0:
        return 0
    dist = np.linalg.norm(pts - pts[0], axis=1)
    count = 1
    while True:
        far = int(np.argmax(dist))
        if dist[far] <= rho:
            return count
        count += 1
        dist = np.minimum(dist, np.linalg.norm(pts - pts[far], axis=1))


@dataclass
class FrostmanReport:
    """Worst-case ball-count ratio of a separated point set."""

    exponent: float
    best_constant: float
    worst_ball: tuple  # (center array, radius)
    scales_tested: list
    raw_max_ratio: float = 0.0

    def to_dict(self):
        c, r = self.worst_ball
        return {
            "exponent": self.exponent,
            "best_constant": self.best_constant,
            "worst_ball": {"center": [float(x) for x in np.atleast_1d(c)], "radius": float(r)},
            "scales_tested": [float(x) for x in self.scales_tested],
            "raw_max_ratio": self.raw_max_ratio,
        }


def _ball_test_centers(pts: np.ndarray, r: float) -> np.ndarray:
    """Points of P plus the spacing-r/2 lattice cells that P meets.

    Lattice cells farther than r from every point hold empty balls, so
    dropping them never changes the maximal ratio.
    """
    step = r / 2.0
    snapped = np.round(pts / step) * step
    lattice = np.unique(snapped, axis=0)
    return np.concatenate([pts, lattice], axis=0)


def validate_frostman_set(cloud: PointCloud, delta: float, s: float) -> FrostmanReport:
    """Maximal |P ∩ B(x,r)| / (|P| r^s) over dyadic radii r in [delta, 1] and
    test centers at the points and on r/2-lattices."""
    if len(cloud.points) == 0:
        raise ValueError("empty point cloud")
    if delta > cloud.separation * (1 + 1e-9):
        raise ValueError("delta must not exceed the cloud separation")
    pts = cloud.points
    total = len(pts)
    tree = cKDTree(pts)
    radii = []
    r = float(delta)
    while r < 1.0:
        radii.append(r)
        r *= 2.0
    radii.append(1.0)
    best = -1.0
    worst = (pts[0], radii[0])
    for r in radii:
        centers = _ball_test_centers(pts, r)
        counts = tree.query_ball_point(centers, r, return_length=True)
        i = int(np.argmax(counts))
        ratio = counts[i] / (total * r ** s)
        if ratio > best:
            best = float(ratio)
            worst = (centers[i].copy(), r)
    return FrostmanReport(exponent=s, best_constant=max(best, 1.0),
                          worst_ball=worst, scales_tested=radii,
                          raw_max_ratio=best)


# ---------------------------------------------------------------------------
# Self-similar generators
# ---------------------------------------------------------------------------

def cantor_levels_1d(base: int, kept_digits, levels: int) -> np.ndarray:
    """Centers of the surviving intervals after `levels` subdivisions, sorted."""
    digits = sorted(set(int(x) for x in kept_digits))
    if not all(0 <= x < base for x in digits):
        raise ValueError("digits must lie in [0, base)")
    if len(digits) >= base:
        raise ValueError("need fewer kept digits than the base")
    if len(digits) < 1 or levels < 1:
        raise ValueError("need at least one digit and level >= 1")
    xs = np.zeros(1)
    for lvl in range(1, levels + 1):
        xs = (xs[:, None] + np.array(digits, dtype=float)[None, :] * base ** (-lvl)).reshape(-1)
    return np.sort(xs + 0.5 * base ** (-float(levels)))


def gen_product_cantor(d: int, base: int, kept_digits, levels: int):
    """Product self-similar set after `levels` subdivisions: cell-center cloud
    plus the uniform measure on surviving cells (mass exactly 1)."""
    axis = cantor_levels_1d(base, kept_digits, levels)
    nkept = len(set(int(x) for x in kept_digits))
    h = base ** (-float(levels))
    gaps = np.diff(axis)
    min_gap = float(gaps.min()) if len(gaps) else 1.0
    if d == 1:
        pts = axis[:, None]
        vals = np.zeros(base ** levels)
        idx = np.round((axis - 0.5 * h) / h).astype(int)
        vals[idx] = 1.0
    elif d == 2:
        pts = np.array(np.meshgrid(axis, axis, indexing="ij")).reshape(2, -1).T
        vals = np.zeros((base ** levels, base ** levels))
        idx = np.round((axis - 0.5 * h) / h).astype(int)
        vals[np.ix_(idx, idx)] = 1.0
    else:
        raise NotImplementedError("d <= 2 supported")
    mass_per_cell = nkept ** (-float(d * levels))
    density = mass_per_cell / h ** d
    measure = GridMeasure(d=d, h=h, origin=np.zeros(d), values=vals * density)
    radius = float(np.max(np.linalg.norm(pts, axis=1)))
    cloud = PointCloud(d=d, points=pts, separation=min_gap, bounding_radius=radius)
    return cloud, measure


def dimension_of(base: int, kept) -> float:
    """Similarity dimension log(#digits)/log(base); `kept` is a count or a
    digit collection."""
    n = kept if isinstance(kept, int) else len(kept)
    return math.log(n) / math.log(base)


def pick_cantor_base(target_dim: float, tol: float = 0.02):
    """Smallest (M, D) with |log D / log M - target| <= tol, digits spread evenly."""
    best = None
    for base in range(3, 33):
        for nd in range(2, base):
            err = abs(dimension_of(base, nd) - target_dim)
            if best is None or err < best[0]:
                best = (err, base, nd)
        if best[0] <= tol:
            break
    err, base, nd = best
    if err > tol:
        raise ValueError(f"no base/digit pair within {tol} of dimension {target_dim}; "
                         f"closest achievable is {dimension_of(base, nd):.4f} "
                         f"with base={base}, digits={nd}")
    digits = np.round(np.linspace(0, base - 1, nd)).astype(int)
    return base, sorted(set(digits.tolist()))


def gen_cantor_times_ball(d: int, s: float, levels: int) -> GridMeasure:
    """Product of a Cantor measure of dimension ~ s-(d-1) on the first axis
    with the uniform unit measure on [0,1] in the remaining axis (d=2)."""
    if d != 2:
        raise NotImplementedError("d = 2 supported")
    tau = s - (d - 1)
    if not (0 < tau <= 1):
        raise ValueError("need s - (d-1) in (0, 1]")
    if tau == 1.0:
        base, digits = 4, [0, 1, 2, 3]
        axis_dim = 1.0
    else:
        base, digits = pick_cantor_base(tau)
        axis_dim = dimension_of(base, digits)
    h = base ** (-float(levels))
    n = base ** levels
    axis = (cantor_levels_1d(base, digits, levels) if len(digits) < base
            else (np.arange(n) + 0.5) * h)
    idx = np.round((axis - 0.5 * h) / h).astype(int)
    vals = np.zeros((n, n))
    # column mass = (per-interval Cantor mass) * h; density = mass / h^2
    density = len(digits) ** (-float(levels)) / h
    vals[idx, :] = density
    mu = GridMeasure(d=2, h=h, origin=np.zeros(2), values=vals)
    mu.axis_dimension = axis_dim
    mu.base = base
    mu.kept_digits = digits
    return mu


# ---------------------------------------------------------------------------
# Sharpness construction: tubes, grids, direction nets, line nets
# ---------------------------------------------------------------------------

def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SharpnessParams:
    s: float
    t: float
    resolution: Resolution
    net_constant: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.s <= 1.0):
            raise ValueError("s must lie in [0, 1]")
        if not (1.0 <= self.t <= 2.0):
            raise ValueError("t must lie in [1, 2]")
        if self.resolution.k < 4:
            raise ValueError("resolution exponent k must be >= 4")
        if not (0.0 < self.net_constant <= 1.0):
            raise ValueError("net constant must lie in (0, 1]")

    @property
    def eta(self) -> float:
        return (1.0 - self.s) * (self.t - 1.0)

    @property
    def delta(self) -> float:
        return self.resolution.delta


@dataclass
class SharpnessInstance:
    params: SharpnessParams
    tubes: np.ndarray          # (m, 4): x0, y0, x1, y1 per horizontal tube
    points: PointCloud
    directions: np.ndarray     # (n_dirs, 2) unit vectors
    lines: PlaneFamily
    per_tube_lines: dict = field(default_factory=dict)
    line_angles: np.ndarray | None = None
    line_intercepts: np.ndarray | None = None

    @property
    def n_tubes(self) -> int:
        return len(self.tubes)

    def counts(self) -> dict:
        return {
            "tubes": int(self.n_tubes),
            "points": int(len(self.points.points)),
            "directions": int(len(self.directions)),
            "lines": int(len(self.lines)),
        }


def lines_from_angles(angles: np.ndarray, signed_offsets: np.ndarray,
                      separation: float) -> PlaneFamily:
    """Lines {x : <x, n(theta)> = q} with n = (-sin, cos), as a family."""
    angles = np.asarray(angles, dtype=float)
    q = np.asarray(signed_offsets, dtype=float)
    basis = np.stack([np.cos(angles), np.sin(angles)], axis=1)[:, None, :]
    normals = np.stack([-np.sin(angles), np.cos(angles)], axis=1)
    offsets = normals * q[:, None]
    return PlaneFamily(d=2, n=1, basis=basis, offset=offsets, separation=separation)


def gen_sharpness_construction(params: SharpnessParams) -> SharpnessInstance:
    """Evenly spaced horizontal tubes, a delta-spaced grid in each, a
    direction net around e1, and per-tube nets of near-horizontal lines.

    Tube count uses round-half-to-even-free rounding of (1/2) delta^-eta
    (half-up), which keeps the count-versus-scale trend unbiased across k;
    see the count fields for exact sizes.
    """
    s, t, c = params.s, params.t, params.net_constant
    delta = params.delta
    eta = params.eta
    n_tubes = max(1, round_half_up(0.5 * delta ** (-eta)))
    width = delta ** (1.0 - s)

    if n_tubes * width > 0.5 + 1e-12:
        raise ValueError("tube widths would exceed half the unit square; "
                         "reduce t or use a different resolution")
    if n_tubes > 1:
        gap = 1.0 / n_tubes - width
        if gap < delta ** eta / 2.0 - 1e-12:
            raise ValueError("tubes would violate the required separation")

    tube_y0 = np.arange(n_tubes) / n_tubes
    tubes = np.stack([np.zeros(n_tubes), tube_y0,
                      np.ones(n_tubes), tube_y0 + width], axis=1)

    # per-tube grid: rows spaced exactly delta across the width, columns
    # spaced delta^(t - eta - s) along the unit length
    n_rows = int(math.floor(delta ** (-s))) + 1
    col_step = delta ** (t - eta - s)
    n_cols = int(math.ceil(delta ** (-(t - eta - s))))
    if n_rows < 1 or n_cols < 1:
        raise ValueError("degenerate point grid")
    cols = np.arange(n_cols) * col_step
    rows = np.arange(n_rows) * delta
    pts = []
    for y0 in tube_y0:
        xg, yg = np.meshgrid(cols, y0 + rows, indexing="ij")
        pts.append(np.stack([xg.reshape(-1), yg.reshape(-1)], axis=1))
    pts = np.concatenate(pts, axis=0)
    if len(pts) > 1:
        tree = cKDTree(pts)
        dmin, _ = tree.query(pts, k=2)
        separation = float(dmin[:, 1].min())
    else:
        separation = 1.0
    cloud = PointCloud(d=2, points=pts, separation=separation,
                       bounding_radius=float(np.linalg.norm(pts, axis=1).max()))

    # direction net around e1, spacing delta in angle, two-sided
    m_max = int(math.floor(delta ** (-s)))
    ms = np.arange(-m_max, m_max + 1)
    thetas = ms * delta
    directions = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)

    # per tube and direction, intercepts stepping by c*delta across the
    # tube's vertical extent widened by the slope over the unit length
    angles_all, q_all = [], []
    per_tube = {}
    line_angles, line_icepts = [], []
    idx = 0
    for ti, y0 in enumerate(tube_y0):
        tube_idx = []
        for th in thetas:
            slope = math.tan(th)
            lo = y0 - max(0.0, slope)
            hi = y0 + width - min(0.0, slope)
            count = int(math.floor((hi - lo) / (c * delta))) + 1
            ys = lo + np.arange(count) * (c * delta)
            angles_all.append(np.full(count, th))
            # signed perpendicular offset of the line y = tan(th) x + y0
            q_all.append(ys * math.cos(th))
            line_icepts.append(ys)
            tube_idx.extend(range(idx, idx + count))
            idx += count
        per_tube[ti] = np.array(tube_idx, dtype=np.int64)
    angles_arr = np.concatenate(angles_all)
    q_arr = np.concatenate(q_all)
    icepts = np.concatenate(line_icepts)
    theta_max = m_max * delta
    sep_same_dir = c * delta * math.cos(theta_max)
    sep_cross_dir = math.sin(delta) if len(thetas) > 1 else np.inf
    fam = lines_from_angles(angles_arr, q_arr,
                            separation=float(min(sep_same_dir, sep_cross_dir)))
    return SharpnessInstance(params=params, tubes=tubes, points=cloud,
                             directions=directions, lines=fam,
                             per_tube_lines=per_tube,
                             line_angles=angles_arr, line_intercepts=icepts)


def sharpness_ball_profile(instance: SharpnessInstance, alphas=None, seed: int = 0):
    """Max point count in balls of radius delta^alpha, per alpha, with the
    ratio against delta^(alpha t - t)."""
    if alphas is None:
        alphas = np.linspace(0.0, 1.0, 10)
    delta = instance.params.delta
    t = instance.params.t
    pts = instance.points.points
    tree = cKDTree(pts)
    out = []
    for a in alphas:
        r = delta ** float(a)
        centers = _ball_test_centers(pts, r)
        counts = tree.query_ball_point(centers, r, return_length=True)
        mx = int(np.max(counts))
        out.append((float(a), r, mx, mx / delta ** (float(a) * t - t)))
    return out
