"""Repeatable numerical experiments with CSV/JSON output and embedded
pass/fail checks.

Each experiment is a pure function of (params, seed): given the same config
and seed it writes byte-identical outputs, independent of thread count.

Experiments
-----------
sharpness-incidence   tube construction across scales; line-count slope,
                      incidence/bound ratio slope, lines-through-point floor
projection-lp         L^p norms of 1-d projections of the unit disc
radial-identity       slice/projection energy identity on mollified clouds
                      or the disc, with lattice-refinement error decay
mattila               rotation-averaged radial integral against plain
                      integral; recovers the d=2, n=1 constant 1/pi
ball-scaling          integral of ball-mass powers across scales; slope
                      against d - s + p*s
duality-pipeline      point/line system mapped through the duality and
                      counted on the dual side
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io as fio
from .constants import DUALITY_RADIUS, MIN_LINES_C
from .deltasets import (
    SharpnessParams,
    cantor_levels_1d,
    gen_product_cantor,
    gen_sharpness_construction,
    lines_from_angles,
)
from .duality import (
    DualityContext,
    dualize_furstenberg_config,
    verify_duality_relations,
)
from .geometry import PlaneFamily, PointCloud, Resolution, verify_family_separation
from .incidence import count_incidences, incidence_bound_rhs
from .measures import (
    MollifierSpec,
    ball_integral_scaling,
    make_annulus_indicator,
    make_disc_measure,
    make_radial_bump,
    make_uniform_square,
    mattila_identity_check,
    mollify_point_cloud,
    project_measure,
    lp_norm,
    radial_identity_check,
)
from .slopes import fit_loglog_slope

DISC_L2_PROJECTION = 16.0 / (3.0 * np.pi**2)


# ---------------------------------------------------------------------------
# random instances for incidence-bound sweeps
# ---------------------------------------------------------------------------

def gen_random_frostman_set(t: float, k: int, seed: int = 0) -> PointCloud:
    """Random (delta, t)-set in the unit square by stochastic dyadic branching.

    Each surviving dyadic square keeps floor(2**t) or ceil(2**t) of its four
    children, chosen so the expected count per subdivision is 2**t.  Returns
    the centers of the surviving level-k squares (pairwise >= 2**-k apart).
    """
    if not 1.0 <= t <= 2.0:
        raise ValueError("t must lie in [1, 2] for a planar dyadic set")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xD7A]))
    mean = 2.0**t
    lo = int(np.floor(mean))
    p_hi = mean - lo
    cells = np.zeros((1, 2), dtype=np.int64)
    for _ in range(k):
        m = cells.shape[0]
        counts = lo + (rng.random(m) < p_hi).astype(np.int64)
        counts = np.minimum(counts, 4)
        order = np.argsort(rng.random((m, 4)), axis=1)
        keep = np.arange(4)[None, :] < counts[:, None]
        child = order[keep]
        parent = np.repeat(np.arange(m), counts)
        dx = child % 2
        dy = child // 2
        cells = np.column_stack((cells[parent, 0] * 2 + dx,
                                 cells[parent, 1] * 2 + dy))
    h = 2.0**-k
    pts = (cells.astype(float) + 0.5) * h
    return PointCloud(d=2, points=pts, separation=h,
                      bounding_radius=float(np.max(np.linalg.norm(pts, axis=1))))


def gen_random_lines(count: int, k: int, seed: int = 0,
                     offset_range: float = 1.5) -> PlaneFamily:
    """Random separated line family sampled from the (angle, offset) lattice.

    Angles run over multiples of delta = 2**-k in [0, pi), signed offsets over
    multiples of delta in [-offset_range, offset_range]; `count` lattice sites
    are drawn without replacement.  Distinct sites give lines at least
    sin(delta) apart, which is recorded as the family separation.
    """
    delta = 2.0**-k
    n_theta = int(np.floor(np.pi / delta))
    n_q = 2 * int(np.floor(offset_range / delta)) + 1
    total = n_theta * n_q
    if count > total:
        raise ValueError(f"requested {count} lines but the lattice has {total}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x11E5]))
    idx = np.sort(rng.choice(total, size=count, replace=False))
    i_theta = idx // n_q
    j_q = idx % n_q
    angles = i_theta * delta
    offsets = (j_q - (n_q - 1) // 2) * delta
    return lines_from_angles(angles, offsets, separation=float(np.sin(delta)))


# ---------------------------------------------------------------------------
# experiment registry
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment: str
    out_dir: Path
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.experiment not in EXPERIMENTS:
            known = ", ".join(sorted(EXPERIMENTS))
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"known: {known}")


def _check(name, value, target, tol):
    passed = bool(abs(value - target) <= tol)
    return {"name": name, "value": float(value), "target": float(target),
            "tol": float(tol), "passed": passed}


def _check_ge(name, value, floor):
    passed = bool(value >= floor)
    return {"name": name, "value": float(value), "floor": float(floor),
            "passed": passed}


def _run_sharpness_incidence(params: dict, seed: int):
    s = float(params.get("s", 0.5))
    t = float(params.get("t", 1.5))
    ks = [int(k) for k in params.get("k_range", range(6, 11))]
    net_constant = float(params.get("net_constant", 0.5))
    eps = float(params.get("eps", 0.1))
    if len(ks) < 2:
        raise ValueError("k_range needs at least two scales for slope fits")

    rows = []
    line_pairs = []
    ratio_pairs = []
    min_lines_scaled = []
    for k in ks:
        par = SharpnessParams(s=s, t=t, resolution=Resolution(k),
                              net_constant=net_constant)
        inst = gen_sharpness_construction(par)
        delta = par.delta
        tally = count_incidences(inst.points, inst.lines, r=delta)
        rhs = incidence_bound_rhs(
            n_points=len(inst.points.points), n_planes=len(inst.lines),
            delta=delta, d=2, n=1, t=t, frostman_constant=1.0, eps=eps)
        ratio = tally.total / rhs
        min_lines = int(tally.per_point.min())
        rows.append({
            "k": k, "delta": delta,
            "n_points": inst.points.points.shape[0],
            "n_lines": len(inst.lines),
            "incidences": int(tally.total),
            "bound_rhs": rhs, "ratio": ratio,
            "min_lines_per_point": min_lines,
        })
        line_pairs.append((delta, float(len(inst.lines))))
        ratio_pairs.append((delta, ratio))
        min_lines_scaled.append(min_lines * delta**s)

    eta = (1.0 - s) * (t - 1.0)
    line_fit = fit_loglog_slope(line_pairs)
    ratio_fit = fit_loglog_slope(ratio_pairs)
    checks = [
        _check("line_count_slope", line_fit.slope, -(2 * s + eta),
               float(params.get("slope_tol", 0.1))),
        _check("incidence_ratio_slope", ratio_fit.slope, 0.0,
               float(params.get("ratio_tol", 0.15))),
        _check_ge("min_lines_per_point_scaled", min(min_lines_scaled),
                  MIN_LINES_C),
    ]
    summary = {
        "experiment": "sharpness-incidence",
        "params": {"s": s, "t": t, "k_range": ks,
                   "net_constant": net_constant, "eps": eps},
        "seed": seed,
        "eta": eta,
        "line_count_slope": line_fit.slope,
        "line_count_target": -(2 * s + eta),
        "line_count_r_squared": line_fit.r_squared,
        "incidence_ratio_slope": ratio_fit.slope,
        "min_lines_per_point_scaled": min(min_lines_scaled),
        "checks": checks,
    }
    columns = ["k", "delta", "n_points", "n_lines", "incidences",
               "bound_rhs", "ratio", "min_lines_per_point"]
    return columns, rows, summary


def _run_projection_lp(params: dict, seed: int):
    p = float(params.get("p", 2.0))
    num_planes = int(params.get("num_planes", 360))
    h = float(params.get("h", 2.0**-8))
    if num_planes < 2:
        raise ValueError("num_planes must be >= 2")

    mu = make_disc_measure(radius=1.0, h=h)
    angles = (np.arange(num_planes) + 0.5) * np.pi / num_planes
    rows = []
    values = np.empty(num_planes)
    for i, theta in enumerate(angles):
        plane = _line_through_origin(theta)
        proj = project_measure(mu, plane)
        values[i] = lp_norm(proj, p) ** p
        rows.append({"index": i, "angle": float(theta), "norm_p_pow_p": values[i]})
    est = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(num_planes))

    checks = []
    target = None
    if p == 2.0:
        target = DISC_L2_PROJECTION
        tol = max(3.0 * se, 1e-3 * target)
        checks.append(_check("disc_l2_projection", est, target, tol))
    summary = {
        "experiment": "projection-lp",
        "params": {"p": p, "num_planes": num_planes, "h": h},
        "seed": seed,
        "estimate": est,
        "std_error": se,
        "target": target,
        "checks": checks,
    }
    return ["index", "angle", "norm_p_pow_p"], rows, summary


def _line_through_origin(theta: float):
    from .geometry import AffinePlane
    direction = np.array([np.cos(theta), np.sin(theta)])
    return AffinePlane(d=2, n=1, basis=direction[None, :], offset=np.zeros(2))


def _radial_source(source: str, delta: float, h: float, seed: int):
    if source == "disc":
        return make_disc_measure(radius=1.0, h=h)
    if source == "cloud":
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xC1D]))
        pts = []
        min_gap = 3.0 * delta
        while len(pts) < 50:
            cand = rng.uniform(0.0, 1.0, size=2)
            if all(np.linalg.norm(cand - q) >= min_gap for q in pts):
                pts.append(cand)
        pts = np.array(pts)
        from scipy.spatial import cKDTree
        sep = float(cKDTree(pts).query(pts, k=2)[0][:, 1].min())
        cloud = PointCloud(d=2, points=pts, separation=sep,
                           bounding_radius=float(np.max(np.linalg.norm(pts, axis=1))))
        spec = MollifierSpec(C=1.0, delta=delta)
        return mollify_point_cloud(cloud, spec, h)
    raise ValueError(f"unknown radial-identity source {source!r}")


def _run_radial_identity(params: dict, seed: int):
    source = str(params.get("source", "cloud"))
    q = float(params.get("q", 2.0))
    k = int(params.get("k", 5))
    samples = int(params.get("samples", 10_000))
    halvings = int(params.get("halvings", 1))
    if halvings < 1:
        raise ValueError("halvings must be >= 1")
    delta = 2.0**-k
    h0 = delta / 4.0

    rows = []
    errors = []
    for j in range(halvings):
        h = h0 / 2**j
        mu = _radial_source(source, delta, h, seed)
        chk = radial_identity_check(mu, q=q, samples=samples, seed=seed)
        rows.append({
            "halving": j, "h": h, "lhs": chk.lhs, "rhs": chk.rhs,
            "lhs_se": chk.lhs_se, "rhs_se": chk.rhs_se,
            "relative_error": chk.relative_error,
            "planes": chk.planes_used,
        })
        errors.append(chk.relative_error)

    tol = float(params.get("tol", 0.02))
    checks = [_check("relative_error", errors[0], 0.0, tol)]
    monotone = all(errors[i + 1] <= errors[i] * (1.0 + 1e-9)
                   for i in range(len(errors) - 1))
    if halvings > 1:
        checks.append({"name": "error_decreases_under_refinement",
                       "passed": bool(monotone),
                       "errors": [float(e) for e in errors]})
    summary = {
        "experiment": "radial-identity",
        "params": {"source": source, "q": q, "k": k, "samples": samples,
                   "halvings": halvings, "tol": tol},
        "seed": seed,
        "relative_errors": [float(e) for e in errors],
        "checks": checks,
    }
    columns = ["halving", "h", "lhs", "rhs", "lhs_se", "rhs_se",
               "relative_error", "planes"]
    return columns, rows, summary


def _mattila_test_function(name: str, h: float):
    if name == "gaussian":
        return make_radial_bump(h=h, sigma=0.5, box_radius=2.0)
    if name == "annulus":
        return make_annulus_indicator(h=h, r_in=0.6, r_out=1.4)
    if name == "offset-bump":
        f = make_radial_bump(h=h, sigma=0.35, box_radius=2.0)
        xx = f.axis_centers(0)[:, None] - 0.3
        yy = f.axis_centers(1)[None, :] - 0.2
        vals = np.exp(-(xx**2 + yy**2) / (2 * 0.35**2))
        vals[xx**2 + yy**2 > (1.5 - 2 * h) ** 2] = 0.0
        from .measures import GridField
        return GridField(d=2, h=f.h, origin=f.origin, values=vals)
    raise ValueError(f"unknown mattila test function {name!r}")


def _run_mattila(params: dict, seed: int):
    names = list(params.get("functions", ["gaussian", "annulus", "offset-bump"]))
    samples = int(params.get("samples", 720))
    h = float(params.get("h", 2.0**-7))
    target = 1.0 / np.pi

    rows = []
    checks = []
    for name in names:
        f = _mattila_test_function(name, h)
        tol = 0.02 if name == "offset-bump" else 0.01
        chk = mattila_identity_check(f, n=1, samples=samples, seed=seed)
        rel = abs(chk.c_estimate - target) / target
        rows.append({
            "function": name, "rotations": samples,
            "lhs": chk.lhs, "rhs": chk.rhs,
            "c_estimate": chk.c_estimate, "target": target,
            "relative_error": rel, "tolerance": tol,
        })
        checks.append(_check(f"c_2_1[{name}]", chk.c_estimate, target,
                             tol * target))
    summary = {
        "experiment": "mattila",
        "params": {"functions": names, "samples": samples, "h": h},
        "seed": seed,
        "target": target,
        "checks": checks,
    }
    columns = ["function", "rotations", "lhs", "rhs", "c_estimate",
               "target", "relative_error", "tolerance"]
    return columns, rows, summary


def _run_ball_scaling(params: dict, seed: int):
    measure = str(params.get("measure", "lebesgue"))
    p = float(params.get("p", 2.0))
    if measure == "lebesgue":
        h = float(params.get("h", 2.0**-9))
        s = float(params.get("s", 2.0))
        deltas = [float(x) for x in params.get("deltas",
                                               [2.0**-j for j in range(4, 8)])]
        mu = make_uniform_square(h=h)
        tol = float(params.get("tol", 0.1))
    elif measure == "product-cantor":
        k = int(params.get("k", 5))
        mu = gen_product_cantor(d=2, base=4, kept_digits=(0, 1, 3), levels=k)[1]
        s = float(params.get("s", np.log(9.0) / np.log(4.0)))
        deltas = [float(x) for x in params.get("deltas",
                                               [4.0**-j for j in (2, 3, 4)])]
        tol = float(params.get("tol", 0.15))
    else:
        raise ValueError(f"unknown ball-scaling measure {measure!r}")

    scaling = ball_integral_scaling(mu, p=p, s=s, deltas=deltas)
    rows = [{"delta": d, "integral": v}
            for d, v in zip(scaling.deltas, scaling.integrals)]
    checks = [_check("ball_integral_slope", scaling.fit.slope,
                     scaling.target_slope, tol)]
    summary = {
        "experiment": "ball-scaling",
        "params": {"measure": measure, "p": p, "s": s, "deltas": deltas},
        "seed": seed,
        "slope": scaling.fit.slope,
        "target_slope": scaling.target_slope,
        "r_squared": scaling.fit.r_squared,
        "checks": checks,
    }
    return ["delta", "integral"], rows, summary


def build_furstenberg_lines(k: int, ctx: DualityContext,
                            angle_levels: Optional[int] = None) -> PlaneFamily:
    """Line family with Cantor-set angles and a delta-lattice of offsets,
    all within 0.9 * ctx.radius of the horizontal axis."""
    delta = 2.0**-k
    j = angle_levels if angle_levels is not None else max(2, k // 2)
    cantor = cantor_levels_1d(4, (0, 3), j)
    budget = 0.9 * ctx.radius
    sines = 0.5 * budget * (2.0 * cantor - 1.0)
    angles = np.arcsin(sines)
    q_max = budget - float(np.max(np.abs(sines)))
    m = int(np.floor(q_max / delta))
    q_vals = np.arange(-m, m + 1) * delta
    all_angles = np.repeat(angles, q_vals.size)
    all_q = np.tile(q_vals, angles.size)
    fam = lines_from_angles(all_angles, all_q, separation=0.0)
    fam.separation = verify_family_separation(fam, max_pairs=50_000)
    return fam


def build_furstenberg_fibers(fam: PlaneFamily, k: int) -> dict:
    """Cantor-positioned points on each line, all inside the unit disc."""
    j = max(2, k // 2)
    cantor = cantor_levels_1d(4, (0, 3), j)
    u = 1.5 * (cantor - 0.5)
    fibers = {}
    for i in range(len(fam)):
        direction = fam.basis[i, 0]
        fibers[i] = fam.offset[i][None, :] + u[:, None] * direction[None, :]
    return fibers


def _run_duality_pipeline(params: dict, seed: int):
    ks = [int(k) for k in params.get("k_range", [6, 7])]
    s = float(params.get("s", 0.5))
    ctx = DualityContext(d=2, radius=float(
        params.get("radius", DUALITY_RADIUS)))

    rows = []
    checks = []
    for k in ks:
        delta = 2.0**-k
        fam = build_furstenberg_lines(k, ctx)
        fibers = build_furstenberg_fibers(fam, k)
        cfg = dualize_furstenberg_config(fam, fibers, ctx, delta)
        tally = count_incidences(cfg.dual_points, cfg.dual_planes, r=6 * delta)
        min_inc = int(tally.per_point.min())
        threshold = int(np.floor(delta**-s / 2.0))

        all_fiber_pts = np.vstack([fibers[i] for i in range(len(fam))])
        cloud = PointCloud(d=2, points=all_fiber_pts, separation=0.0,
                           bounding_radius=float(
                               np.max(np.linalg.norm(all_fiber_pts, axis=1))))
        report = verify_duality_relations(cloud, fam, ctx,
                                          max_pairs=20_000, seed=seed)
        rows.append({
            "k": k, "delta": delta, "n_lines": len(fam),
            "fiber_size": fibers[0].shape[0],
            "n_dual_points": cfg.dual_points.points.shape[0],
            "n_dual_planes": len(cfg.dual_planes),
            "min_incidences_per_dual_point": min_inc,
            "threshold": threshold,
            "max_fiber_dual_distance": cfg.max_fiber_distance,
            "factor3_violations": report.factor3_violations,
        })
        checks.append(_check_ge(f"dual_incidences[k={k}]", min_inc, threshold))
        checks.append(_check_ge(f"factor3_ok[k={k}]",
                                -report.factor3_violations, 0))

    summary = {
        "experiment": "duality-pipeline",
        "params": {"k_range": ks, "s": s, "radius": ctx.radius},
        "seed": seed,
        "checks": checks,
    }
    columns = ["k", "delta", "n_lines", "fiber_size", "n_dual_points",
               "n_dual_planes", "min_incidences_per_dual_point", "threshold",
               "max_fiber_dual_distance", "factor3_violations"]
    return columns, rows, summary


EXPERIMENTS = {
    "sharpness-incidence": _run_sharpness_incidence,
    "projection-lp": _run_projection_lp,
    "radial-identity": _run_radial_identity,
    "mattila": _run_mattila,
    "ball-scaling": _run_ball_scaling,
    "duality-pipeline": _run_duality_pipeline,
}


def run_experiment(config: ExperimentConfig) -> dict:
    """Run one experiment; write <id>.csv and <id>-summary.json; return the
    summary dict (its "passed" key aggregates all embedded checks)."""
    fn = EXPERIMENTS[config.experiment]
    columns, rows, summary = fn(config.params, config.seed)
    summary["passed"] = all(c["passed"] for c in summary["checks"])
    out = fio.ensure_dir(config.out_dir)
    fio.save_csv(out / f"{config.experiment}.csv", columns, rows)
    fio.dump_json(summary, out / f"{config.experiment}-summary.json")
    return summary
