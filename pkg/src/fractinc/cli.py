"""Command-line interface.

Every command is deterministic given (--seed, config): reruns write
byte-identical files regardless of --threads.  Commands that carry embedded
tolerance checks exit 0 only when all checks pass.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .constants import DUALITY_RADIUS
from .deltasets import (
    SharpnessParams,
    dimension_of,
    gen_cantor_times_ball,
    gen_product_cantor,
    gen_sharpness_construction,
    validate_frostman_set,
)
from .duality import (
    DualityContext,
    dual_planes_batch,
    dual_points_batch,
    verify_duality_relations,
)
from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    gen_random_frostman_set,
    gen_random_lines,
    run_experiment,
)
from .geometry import PlaneFamily, PointCloud, Resolution
from .incidence import (
    count_incidences,
    direction_separation_stats,
    incidence_bound_rhs,
    pigeonhole_two_stage,
    set_num_threads,
)


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=0,
                        help="0 = library default")
    parser.add_argument("--out", type=Path, default=Path("out"))


def _parse_digits(text):
    return tuple(int(x) for x in text.split(","))


def cmd_generate(args) -> int:
    out = fio.ensure_dir(args.out)
    if args.kind == "sharpness":
        params = SharpnessParams(s=args.s, t=args.t,
                                 resolution=Resolution(args.k),
                                 net_constant=args.net_constant)
        inst = gen_sharpness_construction(params)
        fio.save_point_cloud(inst.points, out / "points.csv")
        fio.save_plane_family(inst.lines, out / "lines.json")
        fio.dump_json({
            "kind": "sharpness", "s": args.s, "t": args.t, "k": args.k,
            "delta": params.delta, "n_tubes": inst.n_tubes,
            "n_points": inst.points.points.shape[0],
            "n_lines": len(inst.lines),
        }, out / "instance.json")
    elif args.kind == "cantor":
        digits = _parse_digits(args.digits)
        cloud, mu = gen_product_cantor(d=args.d, base=args.base,
                                       kept_digits=digits, levels=args.k)
        fio.save_point_cloud(cloud, out / "points.csv")
        fio.save_grid_measure(mu, out / "measure.csv")
        fio.dump_json({
            "kind": "cantor", "d": args.d, "base": args.base,
            "digits": list(digits), "levels": args.k,
            "dimension": dimension_of(args.base, digits) * args.d,
            "n_points": cloud.points.shape[0],
        }, out / "instance.json")
    elif args.kind == "cantor-ball":
        mu = gen_cantor_times_ball(d=2, s=args.s, levels=args.k)
        fio.save_grid_measure(mu, out / "measure.csv")
        fio.dump_json({
            "kind": "cantor-ball", "s": args.s, "levels": args.k,
            "axis_dimension": mu.axis_dimension, "base": mu.base,
            "kept_digits": list(mu.kept_digits),
        }, out / "instance.json")
    elif args.kind == "random-set":
        cloud = gen_random_frostman_set(t=args.t, k=args.k, seed=args.seed)
        fio.save_point_cloud(cloud, out / "points.csv")
    elif args.kind == "random-lines":
        fam = gen_random_lines(count=args.count, k=args.k, seed=args.seed)
        fio.save_plane_family(fam, out / "lines.json")
    return 0


def cmd_validate(args) -> int:
    cloud = fio.load_point_cloud(args.points)
    report = validate_frostman_set(cloud, delta=args.delta, s=args.exponent)
    fio.dump_json(report.to_dict(), fio.ensure_dir(args.out) / "frostman.json")
    if args.max_constant is not None:
        return 0 if report.best_constant <= args.max_constant else 1
    return 0


def cmd_incidences(args) -> int:
    set_num_threads(args.threads)
    cloud = fio.load_point_cloud(args.points)
    fam = fio.load_plane_family(args.planes)
    tally = count_incidences(cloud, fam, r=args.r)
    pig = pigeonhole_two_stage(tally)
    rec = {
        "n_points": tally.n_points, "n_planes": tally.n_planes,
        "r": tally.r, "incidences": tally.total,
        "per_plane_histogram": tally.histogram(tally.per_plane),
        "per_point_histogram": tally.histogram(tally.per_point),
        "pigeonhole": {"N": pig.N, "V_1": pig.V_1, "M": pig.M,
                       "P_1": pig.P_1, "log_factor": pig.log_factor},
    }
    ok = True
    if args.t is not None:
        rhs = incidence_bound_rhs(tally.n_points, tally.n_planes, args.r,
                                  d=cloud.d, n=fam.n, t=args.t,
                                  frostman_constant=args.frostman_const,
                                  eps=args.eps)
        rec["bound_rhs"] = rhs
        rec["ratio"] = tally.total / rhs
        if args.max_ratio is not None:
            ok = rec["ratio"] <= args.max_ratio
    if args.rho is not None and fam.n == 1 and fam.d == 2:
        rec["direction_separation"] = direction_separation_stats(
            tally, fam, rho=args.rho, seed=args.seed)
    fio.dump_json(rec, fio.ensure_dir(args.out) / "incidences.json")
    return 0 if ok else 1


def cmd_project(args) -> int:
    from .geometry import AffinePlane
    from .measures import lp_norm, project_measure

    mu = fio.load_grid_measure(args.measure)
    theta = args.angle
    direction = np.array([np.cos(theta), np.sin(theta)])
    plane = AffinePlane(d=2, n=1, basis=direction[None, :],
                        offset=np.zeros(2))
    proj = project_measure(mu, plane)
    out = fio.ensure_dir(args.out)
    rows = [{"u": proj.origin[0] + (i + 0.5) * proj.h, "density": v}
            for i, v in enumerate(proj.values)]
    fio.save_csv(out / "projection.csv", ["u", "density"], rows)
    fio.dump_json({"angle": theta, "p": args.p,
                   "lp_norm": lp_norm(proj, args.p),
                   "mass": proj.values.sum() * proj.h},
                  out / "projection.json")
    return 0


def cmd_identity(args) -> int:
    if args.kind == "radial":
        params = {"source": args.source, "q": args.q, "k": args.k,
                  "samples": args.samples, "halvings": args.halvings}
        cfg = ExperimentConfig("radial-identity", args.out, args.seed, params)
    else:
        params = {"samples": args.samples, "h": 2.0**-args.k}
        cfg = ExperimentConfig("mattila", args.out, args.seed, params)
    summary = run_experiment(cfg)
    return 0 if summary["passed"] else 1


def cmd_duality(args) -> int:
    ctx = DualityContext(d=2, radius=DUALITY_RADIUS)
    out = fio.ensure_dir(args.out)
    if args.kind == "check":
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0xDC]))
        pts = rng.uniform(-1.0, 1.0, size=(args.count, 2)) * np.array([2 / np.sqrt(2)] * 2)
        keep = np.linalg.norm(pts, axis=1) <= 2.0
        pts = pts[keep]
        cloud = PointCloud(d=2, points=pts, separation=0.0,
                           bounding_radius=float(np.max(np.linalg.norm(pts, axis=1))))
        budget = 0.98 * ctx.radius
        sines = rng.uniform(-0.5, 0.5, size=args.count) * budget
        q = rng.uniform(-1.0, 1.0, size=args.count) * (budget - np.abs(sines))
        from .deltasets import lines_from_angles
        fam = lines_from_angles(np.arcsin(sines), q, separation=0.0)
        report = verify_duality_relations(cloud, fam, ctx,
                                          max_pairs=args.pairs, seed=args.seed)
        fio.dump_json(report.to_dict(), out / "duality-check.json")
        ok = (report.factor3_violations == 0
              and report.incidence_mismatches == 0)
        return 0 if ok else 1
    if args.points is not None:
        cloud = fio.load_point_cloud(args.points)
        fam = dual_planes_batch(cloud.points)
        fio.save_plane_family(fam, out / "dual-planes.json")
    if args.planes is not None:
        fam = fio.load_plane_family(args.planes)
        pts = dual_points_batch(fam)
        cloud = PointCloud(d=2, points=pts, separation=0.0,
                           bounding_radius=float(np.max(np.linalg.norm(pts, axis=1))))
        fio.save_point_cloud(cloud, out / "dual-points.csv")
    return 0


def cmd_experiment(args) -> int:
    set_num_threads(args.threads)
    params = {}
    for item in args.param or []:
        key, val = item.split("=", 1)
        try:
            parsed = int(val)
        except ValueError:
            try:
                parsed = float(val)
            except ValueError:
                if "," in val:
                    parsed = [float(x) for x in val.split(",")]
                else:
                    parsed = val
        params[key] = parsed
    cfg = ExperimentConfig(args.id, args.out, args.seed, params)
    summary = run_experiment(cfg)
    status = "PASS" if summary["passed"] else "FAIL"
    print(f"[{status}] {args.id} -> {args.out}")
    return 0 if summary["passed"] else 1


def build_parser():
    ap = argparse.ArgumentParser(
        prog="fractinc",
        description="Numerical experiments in fractal incidence geometry.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate point/line/measure fixtures")
    g.add_argument("kind", choices=["sharpness", "cantor", "cantor-ball",
                                    "random-set", "random-lines"])
    g.add_argument("--s", type=float, default=0.5)
    g.add_argument("--t", type=float, default=1.5)
    g.add_argument("--k", type=int, default=6)
    g.add_argument("--net-constant", type=float, default=0.5)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--base", type=int, default=4)
    g.add_argument("--digits", type=str, default="0,3")
    g.add_argument("--count", type=int, default=256)
    _add_common(g)
    g.set_defaults(fn=cmd_generate)

    v = sub.add_parser("validate", help="Frostman condition report")
    v.add_argument("--points", type=Path, required=True)
    v.add_argument("--delta", type=float, required=True)
    v.add_argument("--exponent", type=float, required=True)
    v.add_argument("--max-constant", type=float, default=None)
    _add_common(v)
    v.set_defaults(fn=cmd_validate)

    c = sub.add_parser("incidences", help="count point/plane incidences")
    c.add_argument("--points", type=Path, required=True)
    c.add_argument("--planes", type=Path, required=True)
    c.add_argument("--r", type=float, required=True)
    c.add_argument("--t", type=float, default=None,
                   help="compare against the incidence bound at this t")
    c.add_argument("--frostman-const", type=float, default=1.0)
    c.add_argument("--eps", type=float, default=0.1)
    c.add_argument("--max-ratio", type=float, default=None)
    c.add_argument("--rho", type=float, default=None)
    _add_common(c)
    c.set_defaults(fn=cmd_incidences)

    p = sub.add_parser("project", help="project a grid measure onto a line")
    p.add_argument("--measure", type=Path, required=True)
    p.add_argument("--angle", type=float, default=0.0)
    p.add_argument("--p", type=float, default=2.0)
    _add_common(p)
    p.set_defaults(fn=cmd_project)

    i = sub.add_parser("identity", help="integral identity checks")
    i.add_argument("kind", choices=["radial", "mattila"])
    i.add_argument("--source", choices=["cloud", "disc"], default="cloud")
    i.add_argument("--q", type=float, default=2.0)
    i.add_argument("--k", type=int, default=5)
    i.add_argument("--samples", type=int, default=10_000)
    i.add_argument("--halvings", type=int, default=1)
    _add_common(i)
    i.set_defaults(fn=cmd_identity)

    d = sub.add_parser("duality", help="point/plane duality checks and maps")
    d.add_argument("kind", choices=["check", "map"])
    d.add_argument("--points", type=Path, default=None)
    d.add_argument("--planes", type=Path, default=None)
    d.add_argument("--count", type=int, default=512)
    d.add_argument("--pairs", type=int, default=100_000)
    _add_common(d)
    d.set_defaults(fn=cmd_duality)

    e = sub.add_parser("experiment", help="run a registered experiment")
    e.add_argument("--id", required=True, choices=sorted(EXPERIMENTS))
    e.add_argument("--param", action="append", default=[],
                   metavar="KEY=VALUE")
    _add_common(e)
    e.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 0):
        set_num_threads(args.threads)
        fio.set_threads_env(args.threads)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
