"""Lattice measures: mollification, projection pushforwards, slice densities,
and the integral identities they satisfy.

Conventions: a grid field holds density samples on a uniform lattice with
spacing h; cell index i has center origin + (i + 1/2) h per axis.  Masses are
density * h^d.  All estimators are deterministic per seed and report standard
errors where sampling is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import map_coordinates

from .geometry import AffinePlane, PointCloud, sample_grassmannian
from .slopes import SlopeFit, fit_loglog_slope

MASS_CONSERVATION_RTOL = 1e-9


@dataclass
class GridField:
    """A (possibly signed) function sampled on a uniform lattice."""

    d: int
    h: float
    origin: np.ndarray  # (d,) lower corner
    values: np.ndarray  # d-dimensional array

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(self.d)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != self.d:
            raise ValueError("values array rank must equal ambient dimension")
        if self.h <= 0:
            raise ValueError("spacing h must be positive")

    @property
    def shape(self):
        return self.values.shape

    @property
    def integral(self) -> float:
        return float(self.h ** self.d * self.values.sum())

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.shape[axis]) + 0.5) * self.h

    def bounding_box(self):
        hi = self.origin + np.array(self.shape) * self.h
        return self.origin.copy(), hi

    def interp(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation at world coordinates (m, d); 0 outside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = (pts - self.origin).T / self.h - 0.5
        return map_coordinates(self.values, idx, order=1, mode="constant",
                               cval=0.0, prefilter=False)


@dataclass
class GridMeasure(GridField):
    """A non-negative grid field; total_mass is the lattice integral."""

    def __post_init__(self):
        super().__post_init__()
        if np.min(self.values) < 0:
            raise ValueError("measure density must be non-negative")

    @property
    def total_mass(self) -> float:
        return self.integral


def grid_from_bounds(lo, hi, h, d) -> tuple[np.ndarray, tuple]:
    lo = np.asarray(lo, dtype=float).reshape(d)
    hi = np.asarray(hi, dtype=float).reshape(d)
    shape = tuple(int(math.ceil((b - a) / h - 1e-9)) for a, b in zip(lo, hi))
    return lo, shape


def project_coords(field: GridField, vec: np.ndarray) -> np.ndarray:
    """<center, vec> for every lattice cell, as an array of the grid's shape.

    Computed by separable outer sums, avoiding an (N, d) coordinate matrix.
    """
    vec = np.asarray(vec, dtype=float).reshape(field.d)
    out = np.zeros(field.shape)
    for ax in range(field.d):
        c = field.axis_centers(ax) * vec[ax]
        shape = [1] * field.d
        shape[ax] = field.shape[ax]
        out = out + c.reshape(shape)
    return out


# ---------------------------------------------------------------------------
# Mollification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MollifierSpec:
    """Radial bump: height (C delta)^-d out to 3 C delta, linear taper to 0 at
    4 C delta.  Lipschitz constant is exactly (C delta)^-(d+1)."""

    C: float
    delta: float

    def __post_init__(self):
        if self.C < 1:
            raise ValueError("thickening constant C must be >= 1")
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")

    @property
    def core_radius(self) -> float:
        return 3.0 * self.C * self.delta

    @property
    def support_radius(self) -> float:
        return 4.0 * self.C * self.delta

    def height(self, d: int) -> float:
        return (self.C * self.delta) ** (-d)

    def value_radial(self, rho, d: int):
        """Profile value at distance rho (vectorized)."""
        rho = np.asarray(rho, dtype=float)
        cd = self.C * self.delta
        taper = np.clip((4.0 * cd - rho) / cd, 0.0, 1.0)
        return self.height(d) * taper

    def mass(self, d: int) -> float:
        """Exact integral of the profile over R^d (independent of C, delta)."""
        vd = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        ring = 4.0 * (4.0 ** d - 3.0 ** d) / d - (4.0 ** (d + 1) - 3.0 ** (d + 1)) / (d + 1)
        return vd * (3.0 ** d + d * ring)


def mollify_point_cloud(cloud: PointCloud, spec: MollifierSpec, h: float) -> GridMeasure:
    """Average of translated mollifier bumps over the cloud, center-sampled."""
    if h > spec.C * spec.delta / 4 * (1 + 1e-12):
        raise ValueError(f"h={h} too coarse; need h <= C*delta/4 = {spec.C * spec.delta / 4}")
    pts = cloud.points
    if len(pts) == 0:
        raise ValueError("empty point cloud")
    d = cloud.d
    rad = spec.support_radius
    lo = pts.min(axis=0) - rad - 2 * h
    hi = pts.max(axis=0) + rad + 2 * h
    # align the origin to multiples of h so reruns and subsets share lattices
    lo = np.floor(lo / h) * h
    origin, shape = grid_from_bounds(lo, hi, h, d)
    vals = np.zeros(shape)
    axes_all = [origin[ax] + (np.arange(shape[ax]) + 0.5) * h for ax in range(d)]
    inv = 1.0 / len(pts)
    for p in pts:
        los, his, offs = [], [], []
        for ax in range(d):
            i0 = max(0, int(np.floor((p[ax] - rad - origin[ax]) / h - 0.5)))
            i1 = min(shape[ax] - 1, int(np.ceil((p[ax] + rad - origin[ax]) / h - 0.5)))
            los.append(i0)
            his.append(i1)
            offs.append(axes_all[ax][i0:i1 + 1] - p[ax])
        sq = np.zeros(tuple(o.size for o in offs))
        for ax, o in enumerate(offs):
            shp = [1] * d
            shp[ax] = o.size
            sq = sq + (o ** 2).reshape(shp)
        block = tuple(slice(lo_, hi_ + 1) for lo_, hi_ in zip(los, his))
        vals[block] += inv * spec.value_radial(np.sqrt(sq), d)
    return GridMeasure(d=d, h=h, origin=origin, values=vals)


# ---------------------------------------------------------------------------
# Reference measures and test functions
# ---------------------------------------------------------------------------

def make_uniform_square(h: float, d: int = 2) -> GridMeasure:
    """Lebesgue on [0,1]^d, exact when 1/h is an integer."""
    m = int(round(1.0 / h))
    vals = np.ones((m,) * d)
    return GridMeasure(d=d, h=1.0 / m, origin=np.zeros(d), values=vals)


def _antialiased_indicator(h, origin, shape, inside_fn, boundary_fn, supersample=16):
    """Cell-area fractions for a smooth region: exact away from the boundary,
    supersampled on boundary cells."""
    xs = origin[0] + (np.arange(shape[0]) + 0.5) * h
    ys = origin[1] + (np.arange(shape[1]) + 0.5) * h
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    frac = inside_fn(xg, yg).astype(float)
    bmask = boundary_fn(xg, yg, h)
    bi, bj = np.nonzero(bmask)
    if len(bi):
        ss = supersample
        sub = (np.arange(ss) + 0.5) / ss - 0.5
        sx = xg[bi, bj][:, None, None] + sub[None, :, None] * h
        sy = yg[bi, bj][:, None, None] + sub[None, None, :] * h
        frac[bi, bj] = inside_fn(sx, sy).mean(axis=(1, 2))
    return frac


def make_disc_measure(h: float, center=(0.0, 0.0), radius: float = 1.0,
                      supersample: int = 16) -> GridMeasure:
    """Uniform probability measure on a disc, area-antialiased at the rim."""
    cx, cy = float(center[0]), float(center[1])
    lo = np.floor((np.array([cx, cy]) - radius - 2 * h) / h) * h
    hi = np.array([cx, cy]) + radius + 2 * h
    origin, shape = grid_from_bounds(lo, hi, h, 2)

    def inside(x, y):
        return (x - cx) ** 2 + (y - cy) ** 2 <= radius ** 2

    def near_rim(x, y, hh):
        r = np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
        return np.abs(r - radius) <= hh * 1.5

    frac = _antialiased_indicator(h, origin, shape, inside, near_rim, supersample)
    mass = frac.sum() * h * h
    return GridMeasure(d=2, h=h, origin=origin, values=frac / mass)


def make_radial_bump(h: float, sigma: float = 0.5, box_radius: float = 2.0,
                     center=(0.0, 0.0), d: int = 2) -> GridField:
    """Truncated Gaussian bump exp(-r^2 / 2 sigma^2), compactly supported on its box."""
    c = np.asarray(center, dtype=float).reshape(d)
    lo = np.floor((c - box_radius) / h) * h
    origin, shape = grid_from_bounds(lo, c + box_radius, h, d)
    sq = np.zeros(shape)
    for ax in range(d):
        off = origin[ax] + (np.arange(shape[ax]) + 0.5) * h - c[ax]
        shp = [1] * d
        shp[ax] = shape[ax]
        sq = sq + (off ** 2).reshape(shp)
    return GridField(d=d, h=h, origin=origin, values=np.exp(-sq / (2 * sigma ** 2)))


def make_annulus_indicator(h: float, r_in: float = 1.0, r_out: float = 2.0,
                           supersample: int = 16) -> GridField:
    """Antialiased indicator of r_in <= |x| <= r_out in the plane."""
    lo = np.floor(np.array([-r_out - 2 * h, -r_out - 2 * h]) / h) * h
    origin, shape = grid_from_bounds(lo, np.array([r_out + 2 * h] * 2), h, 2)

    def inside(x, y):
        r2 = x ** 2 + y ** 2
        return (r2 >= r_in ** 2) & (r2 <= r_out ** 2)

    def near_rim(x, y, hh):
        r = np.sqrt(x ** 2 + y ** 2)
        return (np.abs(r - r_in) <= hh * 1.5) | (np.abs(r - r_out) <= hh * 1.5)

    frac = _antialiased_indicator(h, origin, shape, inside, near_rim, supersample)
    return GridField(d=2, h=h, origin=origin, values=frac)


# ---------------------------------------------------------------------------
# Projection pushforward and norms
# ---------------------------------------------------------------------------

@dataclass
class ProjectedDensity:
    """Pushforward density on an n-dimensional lattice in the target subspace."""

    plane: AffinePlane
    h: float
    origin: np.ndarray  # (n,)
    values: np.ndarray  # n-dimensional
    source_mass: float

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(-1)
        n = self.origin.size
        if self.values.ndim != n:
            raise ValueError("values rank must match target dimension")
        m = self.total_mass
        if self.source_mass > 0 and abs(m - self.source_mass) > 1e-6 * self.source_mass:
            raise ValueError("projection failed to conserve mass")

    @property
    def n(self) -> int:
        return self.origin.size

    @property
    def total_mass(self) -> float:
        return float(self.h ** self.n * self.values.sum())

    def axis_centers(self, axis: int = 0) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.values.shape[axis]) + 0.5) * self.h


def project_measure(mu: GridField, plane: AffinePlane, h_out: float | None = None) -> ProjectedDensity:
    """Mass-conserving multilinear splat of mu onto the subspace spanned by plane.

    The subspace must be linear (zero offset).  Each lattice cell's mass is
    split linearly among the 2^n nearest target cells.
    """
    if np.linalg.norm(plane.offset) > 1e-12:
        raise ValueError("projection target must be a linear subspace")
    if plane.d != mu.d:
        raise ValueError("dimension mismatch")
    n = plane.n
    if n > 2:
        raise NotImplementedError("target dimension n <= 2 supported")
    h = mu.h if h_out is None else float(h_out)
    mass = mu.values.reshape(-1) * mu.h ** mu.d

    # target coordinates of every cell center, one axis at a time
    us = [project_coords(mu, plane.basis[ax]).reshape(-1) for ax in range(n)]
    lo_c, hi_c = mu.bounding_box()
    corners = np.array(np.meshgrid(*zip(lo_c, hi_c), indexing="ij")).reshape(mu.d, -1).T
    uc = corners @ plane.basis.T  # (2^d, n)
    base = plane.basis @ mu.origin

    origins, nbins, idx0, frac = [], [], [], []
    for ax in range(n):
        lo_u = float(uc[:, ax].min()) - 2 * h
        # integer-align to the projected source origin so axis-parallel
        # projections land exactly on target cell centers
        u0 = base[ax] + math.floor((lo_u - base[ax]) / h) * h
        extent = float(uc[:, ax].max()) + 2 * h - u0
        nb = int(math.ceil(extent / h)) + 1
        p = (us[ax] - u0) / h - 0.5
        i0 = np.floor(p).astype(np.int64)
        w = p - i0
        i0 = np.clip(i0, 0, nb - 2)
        origins.append(u0)
        nbins.append(nb)
        idx0.append(i0)
        frac.append(w)

    if n == 1:
        nb = nbins[0]
        acc = np.bincount(idx0[0], weights=mass * (1 - frac[0]), minlength=nb)
        acc += np.bincount(idx0[0] + 1, weights=mass * frac[0], minlength=nb)
        values = acc / h
    else:
        nbx, nby = nbins
        flat = np.zeros(nbx * nby)
        for dx in (0, 1):
            wx = frac[0] if dx else (1 - frac[0])
            ix = idx0[0] + dx
            for dy in (0, 1):
                wy = frac[1] if dy else (1 - frac[1])
                iy = idx0[1] + dy
                flat += np.bincount(ix * nby + iy, weights=mass * wx * wy,
                                    minlength=nbx * nby)
        values = flat.reshape(nbx, nby) / h ** 2

    return ProjectedDensity(plane=plane, h=h, origin=np.array(origins),
                            values=values, source_mass=float(mass.sum()))


def lp_norm(f, p: float) -> float:
    """(h^n * sum |f|^p)^(1/p) for a GridField or ProjectedDensity."""
    if p < 1:
        raise ValueError("p must be >= 1")
    h = f.h
    vals = f.values
    n = vals.ndim
    return float((h ** n * np.sum(np.abs(vals) ** p)) ** (1.0 / p))


@dataclass
class MonteCarloEstimate:
    estimate: float
    std_error: float
    per_sample: np.ndarray

    def within(self, target: float, n_se: float = 3.0, extra_tol: float = 0.0) -> bool:
        return abs(self.estimate - target) <= n_se * self.std_error + extra_tol


def projection_lp_integral(mu: GridField, n: int, p: float, num_planes: int,
                           seed: int, method: str = "mc") -> MonteCarloEstimate:
    """Average of ||proj_V mu||_p^p over invariant-sampled n-subspaces."""
    if num_planes < 2:
        raise ValueError("need at least 2 planes")
    if method == "qmc":
        if mu.d != 2 or n != 1:
            raise ValueError("equispaced quasi-random planes only in d=2, n=1")
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x9C3]))
        off = rng.uniform(0, 1)
        thetas = (np.arange(num_planes) + off) * np.pi / num_planes
        bases = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)[:, None, :]
        planes = [AffinePlane(d=2, n=1, basis=b, offset=np.zeros(2)) for b in bases]
    else:
        planes = list(sample_grassmannian(mu.d, n, num_planes, seed))
    vals = np.array([lp_norm(project_measure(mu, v), p) ** p for v in planes])
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return MonteCarloEstimate(estimate=float(vals.mean()), std_error=se, per_sample=vals)


def restricted_projection_lp(mu: GridField, p: float, radius: float,
                             num_planes: int = 16, base_angle: float = 0.0):
    """Contribution to the L^p projection integral from the metric ball of
    directions around a base line (d=2): invariant mass of the ball times the
    average of ||proj_V mu||_p^p over equispaced directions inside it."""
    if mu.d != 2:
        raise ValueError("restricted contribution implemented for d=2")
    amax = math.asin(min(radius, 1.0))
    gamma_mass = 2.0 * amax / math.pi
    offs = (np.arange(num_planes) + 0.5) / num_planes * 2 - 1  # (-1, 1)
    thetas = base_angle + offs * amax
    vals = []
    for th in thetas:
        b = np.array([[math.cos(th), math.sin(th)]])
        plane = AffinePlane(d=2, n=1, basis=b, offset=np.zeros(2))
        vals.append(lp_norm(project_measure(mu, plane), p) ** p)
    vals = np.array(vals)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return gamma_mass * mean, MonteCarloEstimate(estimate=mean, std_error=se, per_sample=vals)


# ---------------------------------------------------------------------------
# Radial slice density and the slice/projection identity
# ---------------------------------------------------------------------------

def _line_quadrature_extent(mu: GridField) -> float:
    lo, hi = mu.bounding_box()
    return float(np.linalg.norm(hi - lo)) + 2 * mu.h


def radial_slice_density(mu: GridField, x, plane: AffinePlane) -> float:
    """Integral of mu's density along the line x + span(direction) (n=1)."""
    if plane.n != 1:
        raise NotImplementedError("slice dimension n=1 supported")
    if np.linalg.norm(plane.offset) > 1e-12:
        raise ValueError("slice direction must be a linear subspace")
    x = np.asarray(x, dtype=float).reshape(mu.d)
    b = plane.basis[0]
    half = _line_quadrature_extent(mu)
    ts = np.arange(-half, half + mu.h, mu.h)
    pts = x[None, :] + ts[:, None] * b[None, :]
    return float(mu.interp(pts).sum() * mu.h)


def slice_profile(mu: GridField, direction: np.ndarray):
    """All parallel slice integrals at once (d=2).

    Returns (u_centers, g) where g[i] is the line integral of mu along
    direction at transversal coordinate u_centers[i]; the transversal
    coordinate of a point x is <x, perp(direction)>.
    """
    if mu.d != 2:
        raise NotImplementedError("slice profiles implemented for d=2")
    b = np.asarray(direction, dtype=float).reshape(2)
    b = b / np.linalg.norm(b)
    perp = np.array([-b[1], b[0]])
    lo, hi = mu.bounding_box()
    corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
    u_all = corners @ perp
    u_lo, u_hi = float(u_all.min()) - mu.h, float(u_all.max()) + mu.h
    m = int(math.ceil((u_hi - u_lo) / mu.h))
    u_centers = u_lo + (np.arange(m) + 0.5) * mu.h
    t_all = corners @ b
    ts = np.arange(float(t_all.min()) - mu.h, float(t_all.max()) + 2 * mu.h, mu.h)
    # world points u * perp + t * b on a (u, t) grid
    px = u_centers[:, None] * perp[0] + ts[None, :] * b[0]
    py = u_centers[:, None] * perp[1] + ts[None, :] * b[1]
    ix = (px - mu.origin[0]) / mu.h - 0.5
    iy = (py - mu.origin[1]) / mu.h - 0.5
    vals = map_coordinates(mu.values, [ix, iy], order=1, mode="constant",
                           cval=0.0, prefilter=False)
    return u_centers, vals.sum(axis=1) * mu.h


@dataclass
class IdentityCheck:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    relative_error: float
    planes_used: int


def radial_identity_check(mu: GridMeasure, q: float, samples: int = 10_000,
                          seed: int = 0) -> IdentityCheck:
    """Both sides of the slice-vs-projection moment identity (d=2, n=1).

    Left: integral over directions and over x ~ mu of (slice density)^q, the
    slice density computed by independent line quadrature; the x-integral is
    evaluated exactly against the lattice masses (see design notes), the
    direction integral by Monte Carlo.  Right: for the same sampled
    directions, the (q+1)-th moment of the splat pushforward onto the
    orthogonal line.
    """
    if mu.d != 2:
        raise NotImplementedError("identity check implemented for d=2, n=1")
    if q < 1:
        raise ValueError("q must be >= 1")
    k = int(np.clip(samples // 100, 8, 512))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x51DE]))
    thetas = rng.uniform(0.0, np.pi, size=k)
    masses = mu.values * mu.h ** 2
    lhs_vals = np.empty(k)
    rhs_vals = np.empty(k)
    for i, th in enumerate(thetas):
        b = np.array([math.cos(th), math.sin(th)])
        perp = np.array([-b[1], b[0]])
        u_centers, g = slice_profile(mu, b)
        u_of_cells = project_coords(mu, perp)
        g_at = np.interp(u_of_cells.reshape(-1), u_centers, g, left=0.0, right=0.0)
        lhs_vals[i] = float(np.sum(masses.reshape(-1) * g_at ** q))
        perp_plane = AffinePlane(d=2, n=1, basis=perp[None, :], offset=np.zeros(2))
        f = project_measure(mu, perp_plane)
        rhs_vals[i] = lp_norm(f, q + 1) ** (q + 1)
    lhs, rhs = float(lhs_vals.mean()), float(rhs_vals.mean())
    lhs_se = float(lhs_vals.std(ddof=1) / math.sqrt(k))
    rhs_se = float(rhs_vals.std(ddof=1) / math.sqrt(k))
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return IdentityCheck(lhs=lhs, rhs=rhs, lhs_se=lhs_se, rhs_se=rhs_se,
                         relative_error=rel, planes_used=k)


# ---------------------------------------------------------------------------
# Rotation-average identity
# ---------------------------------------------------------------------------

@dataclass
class RotationIdentityCheck:
    lhs: float
    rhs: float
    lhs_se: float
    c_estimate: float | None
    rotations_used: int


def mattila_identity_check(f: GridField, n: int = 1, samples: int = 720,
                           seed: int = 0) -> RotationIdentityCheck:
    """Rotation average of int |x|^(d-n) f(g x) dx over lines through 0,
    against the plain integral of f; their ratio estimates the dimensional
    constant (1/pi for d=2, n=1).

    Rotations are equispaced with a seeded random phase (quasi-random is
    allowed for the d=2 rotation group); the standard error comes from block
    means.
    """
    if n != 1:
        raise NotImplementedError("radial weight implemented for n=1")
    if f.d != 2:
        raise NotImplementedError("rotation quadrature implemented for d=2")
    if samples < 24:
        raise ValueError("need at least 24 rotations")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x0E0]))
    phase = rng.uniform(0.0, 1.0)
    angles = (np.arange(samples) + phase) * (2 * np.pi / samples)
    lo, hi = f.bounding_box()
    tmax = float(max(np.linalg.norm(lo), np.linalg.norm(hi),
                     np.linalg.norm([lo[0], hi[1]]), np.linalg.norm([hi[0], lo[1]]))) + f.h
    ts = np.arange(-tmax, tmax + f.h, f.h)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    px = dirs[:, 0][:, None] * ts[None, :]
    py = dirs[:, 1][:, None] * ts[None, :]
    ix = (px - f.origin[0]) / f.h - 0.5
    iy = (py - f.origin[1]) / f.h - 0.5
    vals = map_coordinates(f.values, [ix.reshape(-1), iy.reshape(-1)], order=1,
                           mode="constant", cval=0.0, prefilter=False)
    vals = vals.reshape(samples, ts.size)
    weight = np.abs(ts) ** (f.d - n)
    per_rot = (vals * weight[None, :]).sum(axis=1) * f.h
    lhs = float(per_rot.mean())
    nblocks = 24
    blocks = per_rot[: samples - samples % nblocks].reshape(nblocks, -1).mean(axis=1)
    lhs_se = float(blocks.std(ddof=1) / math.sqrt(nblocks))
    rhs = f.integral
    c_est = lhs / rhs if abs(rhs) > 1e-300 else None
    return RotationIdentityCheck(lhs=lhs, rhs=rhs, lhs_se=lhs_se,
                                 c_estimate=c_est, rotations_used=samples)


# ---------------------------------------------------------------------------
# Ball-integral scaling
# ---------------------------------------------------------------------------

def ball_mass_field(mu: GridField, delta: float) -> np.ndarray:
    """mu(B(x, delta)) for x on the lattice extended by the ball radius,
    via per-row prefix sums (d <= 2)."""
    r_cells = delta / mu.h
    k = int(math.floor(r_cells + 1e-9))
    if mu.d == 1:
        m = mu.values * mu.h
        pref = np.concatenate([[0.0], np.cumsum(m)])
        nx = m.size
        out_idx = np.arange(-k, nx + k)
        lo = np.clip(out_idx - k, 0, nx)
        hi = np.clip(out_idx + k + 1, 0, nx)
        return pref[hi] - pref[lo]
    if mu.d != 2:
        raise NotImplementedError("ball sums implemented for d <= 2")
    m = mu.values * mu.h ** 2
    nx, ny = m.shape
    pref = np.zeros((nx, ny + 1))
    np.cumsum(m, axis=1, out=pref[:, 1:])
    out = np.zeros((nx + 2 * k, ny + 2 * k))
    col_idx = np.arange(-k, ny + k)
    r2 = r_cells * r_cells
    for di in range(-k, k + 1):
        w2 = r2 - di * di
        if w2 < 0:
            continue
        w = int(math.floor(math.sqrt(w2) + 1e-9))
        lo = np.clip(col_idx - w, 0, ny)
        hi = np.clip(col_idx + w + 1, 0, ny)
        contrib = pref[:, hi] - pref[:, lo]  # (nx, ny + 2k)
        out[k - di: k - di + nx, :] += contrib
    return out


def ball_integral_scaling(mu: GridMeasure, p: float, s: float, deltas) -> "BallScaling":
    """int mu(B(x, delta))^p dx at each delta, with its log-log slope."""
    deltas = [float(x) for x in deltas]
    if len(deltas) < 3:
        raise ValueError("need at least 3 scales")
    if p < 1:
        raise ValueError("p must be >= 1")
    for dl in deltas:
        if dl < 4 * mu.h:
            raise ValueError(f"delta={dl} under-resolved; need delta >= 4h = {4 * mu.h}")
    integrals = []
    for dl in deltas:
        bm = ball_mass_field(mu, dl)
        integrals.append(float(np.sum(bm ** p) * mu.h ** mu.d))
    fit = fit_loglog_slope(list(zip(deltas, integrals)))
    return BallScaling(fit=fit, deltas=np.array(deltas), integrals=np.array(integrals),
                       target_slope=mu.d - s + p * s)


@dataclass
class BallScaling:
    fit: SlopeFit
    deltas: np.ndarray
    integrals: np.ndarray
    target_slope: float


# ---------------------------------------------------------------------------
# Auxiliary: measure-side Frostman constant and Riesz energy
# ---------------------------------------------------------------------------

def measure_frostman_constant(mu: GridMeasure, s: float, seed: int = 0,
                              num_centers: int = 256, radii=None) -> float:
    """max over sampled balls of mu(B(x, r)) / r^s."""
    from scipy.spatial import cKDTree

    nz = np.nonzero(mu.values)
    if len(nz[0]) == 0:
        return 0.0
    centers_cells = np.stack([mu.axis_centers(ax)[nz[ax]] for ax in range(mu.d)], axis=1)
    masses = mu.values[nz] * mu.h ** mu.d
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xF805]))
    if len(centers_cells) > num_centers:
        pick = rng.choice(len(centers_cells), size=num_centers, replace=False,
                          p=masses / masses.sum())
        centers = centers_cells[pick]
    else:
        centers = centers_cells
    if radii is None:
        r = 4 * mu.h
        radii = []
        while r < 1.0:
            radii.append(r)
            r *= 2
        radii.append(1.0)
    tree = cKDTree(centers_cells)
    best = 0.0
    for r in radii:
        hits = tree.query_ball_point(centers, r)
        for row in hits:
            ball = float(masses[row].sum())
            best = max(best, ball / r ** s)
    return best


@lru_cache(maxsize=8)
def _unit_cell_inverse_moment(order: float, d: int, nsub: int = 12) -> float:
    """Mean of |u - v|^-order over two independent uniform points of a unit cell."""
    g = (np.arange(nsub) + 0.5) / nsub
    if d == 1:
        du = g[:, None] - g[None, :]
        r = np.abs(du)
    else:
        ux, uy = np.meshgrid(g, g, indexing="ij")
        pu = np.stack([ux.ravel(), uy.ravel()], axis=1)
        diff = pu[:, None, :] - pu[None, :, :]
        r = np.sqrt((diff ** 2).sum(-1))
    mask = r > 0
    return float(np.mean(r[mask] ** (-order)))


def riesz_energy(mu: GridMeasure, order: float, max_cells: int = 12_000) -> float:
    """Double-sum Riesz energy of order `order` (< d), coarsened if needed."""
    if order >= mu.d:
        raise ValueError("Riesz order must be below the ambient dimension")
    vals, h = mu.values, mu.h
    while np.count_nonzero(vals) > max_cells:
        nx = [ax - ax % 2 for ax in vals.shape]
        v = vals[tuple(slice(0, m) for m in nx)]
        if mu.d == 2:
            v = v.reshape(nx[0] // 2, 2, nx[1] // 2, 2).sum(axis=(1, 3))
        else:
            v = v.reshape(nx[0] // 2, 2).sum(axis=1)
        vals = v / 2 ** mu.d  # keep density normalization: mass per cell grows
        h *= 2
    nz = np.nonzero(vals)
    masses = vals[nz] * h ** mu.d
    pos = np.stack([mu.origin[ax] + (nz[ax] + 0.5) * h for ax in range(mu.d)], axis=1)
    total = 0.0
    selfc = _unit_cell_inverse_moment(order, mu.d)
    for lo in range(0, len(pos), 2048):
        blk = slice(lo, lo + 2048)
        diff = pos[blk][:, None, :] - pos[None, :, :]
        r = np.sqrt((diff ** 2).sum(-1))
        w = masses[blk][:, None] * masses[None, :]
        off = r > 1e-15
        total += float(np.sum(w[off] * r[off] ** (-order)))
    total += float(np.sum(masses ** 2) * selfc * h ** (-order))
    return total
