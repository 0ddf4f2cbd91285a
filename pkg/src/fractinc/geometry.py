"""Points, affine n-planes, the affine-Grassmannian metric, and uniform sampling.

An affine n-plane in R^d is stored as an orthonormal direction basis (n rows of
length d) plus the unique offset vector orthogonal to the direction subspace.
The metric between planes is the operator norm of the difference of the two
direction-subspace projection matrices plus the Euclidean distance of offsets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# exact-geometry checks / composed operations
ORTHO_TOL = 1e-12
COMPOSED_TOL = 1e-10


@dataclass(frozen=True)
class Resolution:
    """A dyadic scale delta = 2^-k."""

    k: int

    def __post_init__(self):
        if self.k < 0 or self.k != int(self.k):
            raise ValueError(f"k must be a non-negative integer, got {self.k}")

    @property
    def delta(self) -> float:
        return 2.0 ** (-self.k)


def _as_array(x, dtype=float):
    return np.ascontiguousarray(np.asarray(x, dtype=dtype))


@dataclass(frozen=True)
class AffinePlane:
    """Affine n-plane V = span(basis) + offset, offset orthogonal to the span."""

    d: int
    n: int
    basis: np.ndarray  # (n, d), orthonormal rows
    offset: np.ndarray  # (d,), orthogonal to every basis row

    def __post_init__(self):
        basis = _as_array(self.basis).reshape(self.n, self.d)
        offset = _as_array(self.offset).reshape(self.d)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "offset", offset)
        if not (0 < self.n < self.d):
            raise ValueError(f"need 0 < n < d, got n={self.n}, d={self.d}")
        gram = basis @ basis.T
        if np.max(np.abs(gram - np.eye(self.n))) > ORTHO_TOL:
            raise ValueError("basis rows are not orthonormal")
        if self.n and np.max(np.abs(basis @ offset)) > ORTHO_TOL:
            raise ValueError("offset is not orthogonal to the direction subspace")
        basis.flags.writeable = False
        offset.flags.writeable = False

    @classmethod
    def from_point_basis(cls, point, basis) -> "AffinePlane":
        """Build a plane through `point` with direction span(basis) (orthonormalized)."""
        basis = _as_array(basis)
        if basis.ndim == 1:
            basis = basis[None, :]
        n, d = basis.shape
        q, _ = np.linalg.qr(basis.T)  # (d, n)
        b = q.T
        point = _as_array(point).reshape(d)
        a = point - b.T @ (b @ point)
        return cls(d=d, n=n, basis=b, offset=a)

    def projection_matrix(self) -> np.ndarray:
        """d x d orthogonal projection onto the direction subspace."""
        return self.basis.T @ self.basis

    def point_on_plane(self, coeffs=None) -> np.ndarray:
        if coeffs is None:
            return self.offset.copy()
        return self.offset + _as_array(coeffs) @ self.basis


def dist_point_plane(x, plane: AffinePlane) -> float:
    """Euclidean distance from x to the affine plane."""
    x = _as_array(x)
    if x.shape != (plane.d,):
        raise ValueError(f"point dimension {x.shape} does not match plane d={plane.d}")
    r = x - plane.offset
    return float(np.linalg.norm(r - plane.basis.T @ (plane.basis @ r)))


def dist_points_to_plane(xs, plane: AffinePlane) -> np.ndarray:
    """Vectorized dist_point_plane over rows of xs."""
    xs = np.atleast_2d(_as_array(xs))
    if xs.shape[1] != plane.d:
        raise ValueError("point dimension does not match plane")
    r = xs - plane.offset
    tang = (r @ plane.basis.T) @ plane.basis
    return np.linalg.norm(r - tang, axis=1)


def grassmann_distance(v: AffinePlane, w: AffinePlane) -> float:
    """Projection-operator distance plus offset distance between two n-planes."""
    if (v.d, v.n) != (w.d, w.n):
        raise ValueError("planes must share ambient and plane dimension")
    diff = v.projection_matrix() - w.projection_matrix()
    op = float(np.linalg.norm(diff, ord=2))
    return op + float(np.linalg.norm(v.offset - w.offset))


def projection_op_distances(basis: np.ndarray, ref: AffinePlane) -> np.ndarray:
    """Operator-norm part of the metric from each basis[i] (n,d) to a fixed plane."""
    p_ref = ref.projection_matrix()
    mats = np.einsum("mni,mnj->mij", basis, basis) - p_ref
    return np.linalg.norm(mats, ord=2, axis=(1, 2))


@dataclass
class PlaneFamily:
    """A family of same-(d, n) affine planes with a claimed pairwise separation.

    Basis and offset arrays are stacked for fast vectorized access; element
    access materializes AffinePlane values on demand.
    """

    d: int
    n: int
    basis: np.ndarray  # (m, n, d)
    offset: np.ndarray  # (m, d)
    separation: float = 0.0

    def __post_init__(self):
        self.basis = _as_array(self.basis).reshape(-1, self.n, self.d)
        self.offset = _as_array(self.offset).reshape(-1, self.d)
        if len(self.basis) != len(self.offset):
            raise ValueError("basis/offset length mismatch")
        if self.separation < 0:
            raise ValueError("separation must be >= 0")

    @classmethod
    def from_planes(cls, planes, separation: float = 0.0) -> "PlaneFamily":
        planes = list(planes)
        if not planes:
            raise ValueError("empty plane family")
        d, n = planes[0].d, planes[0].n
        for p in planes:
            if (p.d, p.n) != (d, n):
                raise ValueError("planes must share (d, n)")
        basis = np.stack([p.basis for p in planes])
        offset = np.stack([p.offset for p in planes])
        return cls(d=d, n=n, basis=basis, offset=offset, separation=separation)

    def __len__(self) -> int:
        return len(self.basis)

    def __getitem__(self, i: int) -> AffinePlane:
        return AffinePlane(d=self.d, n=self.n, basis=self.basis[i], offset=self.offset[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def verify_family_separation(fam: PlaneFamily, max_pairs: int = 200_000,
                             seed: int = 0) -> float:
    """Minimum pairwise metric distance, exhaustive or sampled for large families."""
    m = len(fam)
    if m < 2:
        return np.inf
    pmats = np.einsum("mni,mnj->mij", fam.basis, fam.basis)
    if m * (m - 1) // 2 <= max_pairs:
        ii, jj = np.triu_indices(m, k=1)
    else:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E9A]))
        ii = rng.integers(0, m, size=max_pairs)
        jj = rng.integers(0, m, size=max_pairs)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
    best = np.inf
    for lo in range(0, len(ii), 4096):
        sl = slice(lo, lo + 4096)
        diff = pmats[ii[sl]] - pmats[jj[sl]]
        op = np.linalg.norm(diff, ord=2, axis=(1, 2))
        off = np.linalg.norm(fam.offset[ii[sl]] - fam.offset[jj[sl]], axis=1)
        best = min(best, float(np.min(op + off)))
    return best


@dataclass
class PointCloud:
    """A finite point set with claimed separation inside a bounding ball."""

    d: int
    points: np.ndarray  # (m, d)
    separation: float = 0.0
    bounding_radius: float = np.inf

    def __post_init__(self):
        self.points = _as_array(self.points).reshape(-1, self.d)
        if self.separation < 0:
            raise ValueError("separation must be >= 0")
        if np.isfinite(self.bounding_radius) and len(self.points):
            rmax = float(np.max(np.linalg.norm(self.points, axis=1)))
            if rmax > self.bounding_radius + 1e-9:
                raise ValueError(
                    f"points reach radius {rmax}, beyond bounding_radius {self.bounding_radius}")

    def __len__(self) -> int:
        return len(self.points)


def verify_cloud_separation(pc: PointCloud) -> float:
    """Actual minimum pairwise distance (exact, via KD-tree nearest neighbor)."""
    if len(pc) < 2:
        return np.inf
    from scipy.spatial import cKDTree

    tree = cKDTree(pc.points)
    dist, _ = tree.query(pc.points, k=2)
    return float(np.min(dist[:, 1]))


def sample_grassmannian(d: int, n: int, count: int, seed: int):
    """Rotation-invariant sample of `count` linear n-subspaces of R^d.

    Orthonormalizes independent standard normal frames; the invariance of the
    normal law makes the span distribution the invariant one. Returns a
    PlaneFamily with zero offsets; deterministic per seed.
    """
    if not (0 < n < d):
        raise ValueError(f"need 0 < n < d, got ({d},{n})")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6A55]))
    g = rng.standard_normal((count, d, n))
    q, r = np.linalg.qr(g)
    # fix signs so the frame is a deterministic function of g
    sgn = np.sign(np.einsum("mii->mi", r))
    sgn[sgn == 0] = 1.0
    q = q * sgn[:, None, :]
    basis = np.ascontiguousarray(np.transpose(q, (0, 2, 1)))  # (count, n, d)
    offset = np.zeros((count, d))
    return PlaneFamily(d=d, n=n, basis=basis, offset=offset, separation=0.0)


def orthocomplement(plane: AffinePlane) -> AffinePlane:
    """Orthogonal complement of a linear subspace (offset must be zero)."""
    if np.linalg.norm(plane.offset) > ORTHO_TOL:
        raise ValueError("orthocomplement requires a linear subspace (zero offset)")
    m = plane.n
    if not (0 < plane.d - m < plane.d):
        raise ValueError("complement dimension out of range")
    _, _, vt = np.linalg.svd(plane.basis, full_matrices=True)
    comp = vt[m:]
    return AffinePlane(d=plane.d, n=plane.d - m, basis=comp,
                       offset=np.zeros(plane.d))
