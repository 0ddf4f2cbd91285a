"""Separated point sets: covering numbers, ball-count regularity reports,
self-similar generators, and the sharpness construction."""

from __future__ import annotations

import numpy as np
import pytest

import fractinc as fi
from fractinc.constants import MIN_LINES_C, SHARPNESS_BALL_A
from fractinc.deltasets import (
    cantor_levels_1d,
    covering_number,
    dimension_of,
    pick_cantor_base,
    round_half_up,
    sharpness_ball_profile,
)


# ---------------------------------------------------------------------------
# covering numbers
# ---------------------------------------------------------------------------

def test_covering_number_examples():
    line = np.linspace(0.0, 1.0, 51)[:, None]
    assert covering_number(line, 0.25) == 3
    assert covering_number(line, 10.0) == 1
    assert covering_number(np.zeros((1, 2)), 0.1) == 1
    two = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert covering_number(two, 0.4) == 2
    assert covering_number(two, 1.1) == 1


def test_covering_number_monotone_in_radius():
    rng = np.random.default_rng(0)
    pts = rng.random((200, 2))
    radii = [0.01, 0.03, 0.1, 0.3, 1.0]
    counts = [covering_number(pts, r) for r in radii]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] == 1


# ---------------------------------------------------------------------------
# ball-count regularity reports
# ---------------------------------------------------------------------------

def _oracle_frostman(pts: np.ndarray, delta: float, s: float) -> float:
    """Independent recomputation of the documented candidate-ball protocol:
    dyadic radii from delta up to 1, centers at the points and on the
    r/2-lattice cells the points occupy."""
    total = len(pts)
    radii = []
    r = float(delta)
    while r < 1.0:
        radii.append(r)
        r *= 2.0
    radii.append(1.0)
    best = -1.0
    for r in radii:
        step = r / 2.0
        centers = np.concatenate(
            [pts, np.unique(np.round(pts / step) * step, axis=0)])
        dist = np.sqrt(((centers[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        counts = (dist <= r).sum(axis=1)
        best = max(best, counts.max() / (total * r ** s))
    return max(best, 1.0)


@pytest.mark.parametrize("m,s", [(5, 1.0), (5, 2.0), (9, 1.5), (9, 2.0)])
def test_frostman_report_matches_oracle_on_grids(m, s):
    g = np.linspace(0.0, 1.0, m)
    pts = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
    sep = 1.0 / (m - 1)
    cloud = fi.PointCloud(d=2, points=pts, separation=sep)
    report = fi.validate_frostman_set(cloud, sep, s)
    assert report.best_constant == _oracle_frostman(pts, sep, s)
    assert report.exponent == s
    assert report.scales_tested[0] == sep
    assert report.scales_tested[-1] == 1.0


def test_frostman_report_matches_oracle_on_random_dyadic_set():
    rng = np.random.default_rng(5)
    idx = rng.choice(17 * 17, size=40, replace=False)
    pts = np.stack(np.divmod(idx, 17), axis=1) / 16.0
    sep = fi.verify_cloud_separation(fi.PointCloud(d=2, points=pts))
    cloud = fi.PointCloud(d=2, points=pts, separation=float(sep))
    report = fi.validate_frostman_set(cloud, 1.0 / 16, 1.3)
    assert report.best_constant == _oracle_frostman(pts, 1.0 / 16, 1.3)
    center, radius = report.worst_ball
    dist = np.linalg.norm(pts - center, axis=1)
    count = int(np.sum(dist <= radius))
    assert count / (len(pts) * radius ** 1.3) == pytest.approx(report.raw_max_ratio)


def test_frostman_report_single_point_and_errors():
    cloud = fi.PointCloud(d=2, points=[[0.3, 0.4]], separation=1.0)
    report = fi.validate_frostman_set(cloud, 0.5, 0.0)
    assert report.best_constant == 1.0
    with pytest.raises(ValueError):
        fi.validate_frostman_set(
            fi.PointCloud(d=2, points=[[0.0, 0.0], [0.1, 0.0]], separation=0.1),
            0.5, 1.0)
    with pytest.raises(ValueError):
        fi.validate_frostman_set(fi.PointCloud(d=2, points=np.empty((0, 2))), 0.1, 1.0)


def test_frostman_dict_roundtrip():
    cloud = fi.PointCloud(d=2, points=[[0.0, 0.0], [0.5, 0.0]], separation=0.5)
    d = fi.validate_frostman_set(cloud, 0.5, 1.0).to_dict()
    assert set(d) >= {"exponent", "best_constant", "worst_ball", "scales_tested"}
    assert d["worst_ball"] == {"center": [0.0, 0.0], "radius": 0.5}
    assert d["best_constant"] == 2.0


# ---------------------------------------------------------------------------
# self-similar generators
# ---------------------------------------------------------------------------

def test_cantor_levels_exact_values():
    lvl1 = cantor_levels_1d(3, [0, 2], 1)
    assert np.allclose(lvl1, [1 / 6, 5 / 6], atol=1e-15)
    lvl2 = cantor_levels_1d(3, [0, 2], 2)
    assert np.allclose(lvl2, [1 / 18, 5 / 18, 13 / 18, 17 / 18], atol=1e-15)
    lvl5 = cantor_levels_1d(3, [0, 2], 5)
    assert len(lvl5) == 2 ** 5
    assert np.all(np.diff(lvl5) >= 2 * 3.0 ** -5 - 1e-12)
    assert lvl5.min() > 0 and lvl5.max() < 1


def test_cantor_levels_validation():
    with pytest.raises(ValueError):
        cantor_levels_1d(3, [0, 3], 2)
    with pytest.raises(ValueError):
        cantor_levels_1d(3, [0, 1, 2], 2)
    with pytest.raises(ValueError):
        cantor_levels_1d(3, [], 2)
    with pytest.raises(ValueError):
        cantor_levels_1d(3, [0, 2], 0)


def test_product_cantor_cloud_and_measure():
    cloud, mu = fi.gen_product_cantor(1, 4, (0, 3), 3)
    assert len(cloud) == 8
    assert mu.total_mass == pytest.approx(1.0, abs=1e-12)
    cloud2, mu2 = fi.gen_product_cantor(2, 4, (0, 1, 3), 2)
    assert len(cloud2) == 81
    assert mu2.h == pytest.approx(4.0 ** -2)
    assert mu2.total_mass == pytest.approx(1.0, abs=1e-12)
    # claimed separation is achieved exactly (adjacent kept digits 0 and 1)
    assert fi.verify_cloud_separation(cloud2) == pytest.approx(cloud2.separation)


def test_dimension_helpers():
    assert dimension_of(4, 2) == pytest.approx(0.5)
    assert dimension_of(4, [0, 1, 3]) == pytest.approx(np.log(3) / np.log(4))
    base, digits = pick_cantor_base(0.5)
    assert (base, list(digits)) == (4, [0, 3])
    assert dimension_of(base, digits) == pytest.approx(0.5, abs=0.02)
    base, digits = pick_cantor_base(0.63, tol=0.05)
    assert dimension_of(base, digits) == pytest.approx(0.63, abs=0.05)
    with pytest.raises(ValueError):
        pick_cantor_base(0.01)


def test_cantor_times_ball_metadata():
    mu = fi.gen_cantor_times_ball(2, 1.5, 4)
    assert mu.axis_dimension == pytest.approx(0.5, abs=0.02)
    assert (mu.base, list(mu.kept_digits)) == (4, [0, 3])
    assert mu.h == pytest.approx(4.0 ** -4)
    assert mu.total_mass == pytest.approx(1.0, abs=1e-12)
    mu2 = fi.gen_cantor_times_ball(2, 1.25, 3)
    assert mu2.axis_dimension == pytest.approx(0.25, abs=0.02)
    with pytest.raises(ValueError):
        fi.gen_cantor_times_ball(2, 2.2, 3)


# ---------------------------------------------------------------------------
# sharpness construction
# ---------------------------------------------------------------------------

def test_round_half_up():
    assert round_half_up(0.5) == 1
    assert round_half_up(1.5) == 2
    assert round_half_up(2.5) == 3
    assert round_half_up(2.4) == 2
    assert round_half_up(2.6) == 3


def test_sharpness_params_validation():
    with pytest.raises(ValueError):
        fi.SharpnessParams(s=1.5, t=1.5, resolution=fi.Resolution(6))
    with pytest.raises(ValueError):
        fi.SharpnessParams(s=0.5, t=0.5, resolution=fi.Resolution(6))
    with pytest.raises(ValueError):
        fi.SharpnessParams(s=0.5, t=1.5, resolution=fi.Resolution(3))
    p = fi.SharpnessParams(s=0.5, t=1.5, resolution=fi.Resolution(6))
    assert p.eta == pytest.approx(0.25)
    assert p.delta == 2.0 ** -6


def test_sharpness_reference_counts():
    inst = fi.gen_sharpness_construction(
        fi.SharpnessParams(s=0.5, t=1.5, resolution=fi.Resolution(6)))
    assert inst.counts() == {"tubes": 1, "points": 207, "directions": 17, "lines": 433}


def test_sharpness_suite_invariants(sharpness_suite):
    for (s, t, k), inst in sharpness_suite.items():
        delta = 2.0 ** -k
        c = inst.counts()
        # direction net: two-sided, spacing delta, |sin theta| <= delta^s
        assert c["directions"] == 2 * int(np.floor(delta ** -s)) + 1
        # tube count follows the eta exponent
        eta = (1 - s) * (t - 1)
        assert c["tubes"] == round_half_up(0.5 * delta ** -eta)
        # cardinalities track the designed exponents within a factor of 8
        assert delta ** -t / 8 <= c["points"] <= 8 * delta ** -t
        assert delta ** -(2 * s + eta) / 8 <= c["lines"] <= 8 * delta ** -(2 * s + eta)
        # per-tube line allotments are balanced
        per_tube = [len(v) for v in inst.per_tube_lines.values()]
        assert max(per_tube) - min(per_tube) <= 1
        assert sum(per_tube) == c["lines"]
        # every point sits inside its tube's vertical extent
        pts = inst.points.points
        y0, y1 = inst.tubes[:, 1], inst.tubes[:, 3]
        inside = ((pts[:, 1][:, None] >= y0[None, :] - 1e-12)
                  & (pts[:, 1][:, None] <= y1[None, :] + 1e-12)).any(axis=1)
        assert inside.all()
        assert pts[:, 0].min() >= -1e-12 and pts[:, 0].max() <= 1 + 1e-12
        # claimed separations are genuine lower bounds
        assert fi.verify_cloud_separation(inst.points) >= inst.points.separation * (1 - 1e-9)
        assert (fi.verify_family_separation(inst.lines, max_pairs=20_000)
                >= inst.lines.separation * (1 - 1e-9))


def test_sharpness_extreme_parameters():
    inst = fi.gen_sharpness_construction(
        fi.SharpnessParams(s=0.0, t=1.0, resolution=fi.Resolution(6)))
    assert inst.counts()["tubes"] == 1
    assert inst.counts()["directions"] == 3
    assert fi.gen_sharpness_construction(
        fi.SharpnessParams(s=0.5, t=2.0, resolution=fi.Resolution(8))).n_tubes == 8
    with pytest.raises(ValueError):
        fi.gen_sharpness_construction(
            fi.SharpnessParams(s=0.5, t=2.0, resolution=fi.Resolution(7)))


def test_sharpness_ball_profile(sharpness_suite):
    inst = sharpness_suite[(0.5, 1.5, 6)]
    prof = sharpness_ball_profile(inst)
    alphas = [row[0] for row in prof]
    assert alphas == sorted(alphas)
    assert alphas[0] == 0.0 and alphas[-1] == 1.0
    delta = inst.params.delta
    npts = len(inst.points)
    for alpha, r, max_count, ratio in prof:
        assert r == pytest.approx(delta ** alpha)
        assert 1 <= max_count <= npts
        # normalized count against the designed delta^-t mass at every scale
        assert ratio == pytest.approx(max_count / (delta ** -1.5 * r ** 1.5))
        assert ratio <= SHARPNESS_BALL_A


def test_sharpness_min_lines_per_point(sharpness_suite):
    inst = sharpness_suite[(0.5, 1.5, 6)]
    delta = inst.params.delta
    tally = fi.count_incidences(inst.points, inst.lines, r=delta)
    scaled = tally.per_point.min() * delta ** 0.5
    assert scaled >= MIN_LINES_C


def test_lines_from_angles_normal_form():
    fam = fi.lines_from_angles(np.array([0.0, np.pi / 2]), np.array([0.3, -0.2]),
                               separation=0.1)
    assert fi.dist_point_plane([5.0, 0.3], fam[0]) == pytest.approx(0.0, abs=1e-12)
    assert fi.dist_point_plane([0.0, 0.0], fam[0]) == pytest.approx(0.3)
    # angle pi/2: direction (0,1), normal (-1,0), so x = 0.2 on the line
    assert fi.dist_point_plane([0.2, 7.0], fam[1]) == pytest.approx(0.0, abs=1e-12)
