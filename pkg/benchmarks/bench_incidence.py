"""Benchmark the compiled incidence kernel against the NumPy fallback.

Builds random point/line instances at a few sizes, times both kernels on
identical inputs, checks that they produce identical totals, and prints a
speedup table.  The kernel is switched in-process (the counting path reads
the module flag on every call), so one run covers both.

Usage:
    python3 benchmarks/bench_incidence.py [--sizes 10000,50000,100000]
                                          [--repeats 3] [--threads 0]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import fractinc as fi
from fractinc import incidence as inc


def best_time(cloud, fam, r: float, repeats: int) -> tuple[float, int]:
    best = float("inf")
    total = -1
    for _ in range(repeats):
        t0 = time.perf_counter()
        tally = fi.count_incidences(cloud, fam, r=r)
        best = min(best, time.perf_counter() - t0)
        total = tally.total
    return best, total


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="10000,50000,100000",
                        help="comma-separated instance sizes (points == lines)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timed repetitions per cell; best time is kept")
    parser.add_argument("--threads", type=int, default=0,
                        help="thread count for the compiled kernel (0 = auto)")
    args = parser.parse_args()

    if not inc.HAVE_COMPILED:
        print("compiled kernel unavailable (FRACTINC_PURE=1 or build skipped); "
              "benchmarking the NumPy kernel only")
    fi.set_num_threads(args.threads)

    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)
    print(f"{'n':>8}  {'incidences':>11}  {'numpy':>9}  {'compiled':>9}  {'speedup':>8}")
    for n in sizes:
        cloud = fi.PointCloud(d=2, points=rng.random((n, 2)))
        fam = fi.gen_random_lines(n, 10, seed=1)
        r = 2.0 ** -10

        inc.HAVE_COMPILED = False
        t_numpy, total_numpy = best_time(cloud, fam, r, args.repeats)
        row = {"numpy": f"{t_numpy:8.3f}s"}

        if inc._gridcount is not None:
            inc.HAVE_COMPILED = True
            t_comp, total_comp = best_time(cloud, fam, r, args.repeats)
            if total_comp != total_numpy:
                raise SystemExit(f"kernel disagreement at n={n}: "
                                 f"{total_comp} != {total_numpy}")
            row["compiled"] = f"{t_comp:8.3f}s"
            row["speedup"] = f"{t_numpy / t_comp:7.1f}x"
        else:
            row["compiled"] = "      n/a"
            row["speedup"] = "     n/a"
        print(f"{n:>8}  {total_numpy:>11}  {row['numpy']}  {row['compiled']}  "
              f"{row['speedup']}")


if __name__ == "__main__":
    main()
