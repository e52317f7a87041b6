import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from flab import fractal as fr
from flab.errors import EmptyInput


def line_grid(k):
    d = 2.0 ** (-k)
    xs = np.arange(0.0, 1.0 + d / 2.0, d)
    return np.column_stack([xs, np.zeros_like(xs)])


def square_grid(k):
    d = 2.0 ** (-k)
    g = np.arange(0.0, 1.0 + d / 2.0, d)
    gx, gy = np.meshgrid(g, g)
    return np.column_stack([gx.ravel(), gy.ravel()])


def circle_cloud(k, r=1.0, center=(0.0, 0.0)):
    d = 2.0 ** (-k)
    th = np.arange(0.0, 2.0 * math.pi, d / r)
    return np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])


def min_separation(pts):
    tree = cKDTree(pts)
    dd, _ = tree.query(pts, k=2)
    return float(dd[:, 1].min())


class TestPointCloudCsv:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-3.0, 3.0, (257, 2))
        pts[0] = [0.1 + 0.2, -1.5e-17]
        cloud = fr.PointCloud(pts, 7)
        p = tmp_path / "c.csv"
        fr.save_csv(cloud, p)
        back = fr.load_csv(p)
        assert back.k == 7 and back.dim == 2
        assert np.array_equal(back.points, cloud.points)
        p2 = tmp_path / "c2.csv"
        fr.save_csv(back, p2)
        assert p.read_bytes() == p2.read_bytes()

    def test_3d_round_trip(self, tmp_path):
        pts = np.array([[0.1, -0.2, 1.5], [0.0, 0.25, 0.5]])
        p = tmp_path / "v.csv"
        fr.save_csv(fr.PointCloud(pts, 6), p)
        back = fr.load_csv(p)
        assert back.dim == 3 and np.array_equal(back.points, pts)

    def test_dedupe_at_quarter_delta(self):
        k = 4
        d = 2.0 ** (-k)
        pts = np.array([[0.0, 0.0], [d / 16.0, 0.0], [0.5, 0.5]])
        cloud = fr.PointCloud.create(pts, k)
        assert len(cloud) == 2


class TestExtraction:
    def test_single_point(self):
        cloud = fr.PointCloud(np.array([[0.3, 0.4]]), 5)
        ds = fr.extract_delta_q_set(cloud, 1.0)
        assert len(ds.cloud) == 1
        assert ds.conc_measured <= 1.0

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            fr.extract_delta_q_set(fr.PointCloud(np.empty((0, 2)), 5), 1.0)

    def test_line_grid_cardinality(self):
        # exhaustive oracle: the full grid has 2^6+1 points; extraction must
        # keep at least beta_hat * 2^6 / 64 of them
        k, q = 6, 1.0
        cloud = fr.PointCloud(line_grid(k), k)
        ds = fr.extract_delta_q_set(cloud, q)
        beta_hat = fr.content_lower(cloud.points, q, cloud.delta)
        assert beta_hat >= 0.25
        assert len(ds.cloud) >= beta_hat * 2 ** k / 64.0
        assert len(ds.cloud) <= 64.0 * 2 ** k
        assert min_separation(ds.cloud.points) >= cloud.delta

    def test_square_grid_audit(self):
        k, q = 5, 2.0
        cloud = fr.PointCloud(square_grid(k), k)
        ds = fr.extract_delta_q_set(cloud, q)
        assert min_separation(ds.cloud.points) >= cloud.delta
        assert ds.conc_measured <= 16.0
        assert fr.verify_non_concentration(ds, 1000, seed=9) <= 16.0

    def test_subset_of_input(self):
        k = 5
        cloud = fr.PointCloud(square_grid(k), k)
        ds = fr.extract_delta_q_set(cloud, 1.5)
        src = {tuple(p) for p in cloud.points}
        assert all(tuple(p) in src for p in ds.cloud.points)

    def test_remark_sandwich_in_reference_box(self):
        # 3-d grid inside the reference parameter box
        k, q = 4, 1.0
        d = 2.0 ** (-k)
        xs = np.arange(-0.25, 0.25 + d / 2, d)
        rs = np.arange(0.5, 2.0 + d / 2, d)
        gx, gy, gr = np.meshgrid(xs, xs, rs)
        pts = np.column_stack([gx.ravel(), gy.ravel(), gr.ravel()])
        cloud = fr.PointCloud(pts, k)
        ds = fr.extract_delta_q_set(cloud, q)
        beta_hat = fr.content_lower(pts, q, d)
        n = len(ds.cloud)
        assert beta_hat > 0
        assert beta_hat * 2 ** (q * k) / 64.0 <= n <= 64.0 * 2 ** (q * k)


class TestNonConcentration:
    def test_single_point_ratio(self):
        ds = fr.DeltaQSet(fr.PointCloud(np.array([[0.0, 0.0]]), 5), 1.0, 0.0)
        assert fr.verify_non_concentration(ds, 10) <= 1.0

    def test_arithmetic_progression(self):
        k = 6
        d = 2.0 ** (-k)
        pts = np.column_stack([np.arange(64) * d, np.zeros(64)])
        ds = fr.DeltaQSet(fr.PointCloud(pts, k), 1.0, 0.0)
        # each ball of radius r holds at most 2r/delta + 1 points
        assert fr.verify_non_concentration(ds, 500, seed=1) <= 3.0


class TestFrostman:
    def test_uniform_weights(self):
        cloud = fr.PointCloud(np.array([[0.0, 0.0], [1, 0], [0, 1], [1, 1]], float), 4)
        mu = fr.frostman_measure(cloud)
        assert np.allclose(mu.weights, 0.25)
        assert mu.total_mass == 1.0

    def test_full_mass_ball(self):
        rng = np.random.default_rng(2)
        cloud = fr.PointCloud(rng.uniform(0, 1, (37, 2)), 5)
        mu = fr.frostman_measure(cloud)
        assert mu.measure_ball((0.5, 0.5), 3.0) == 1.0

    def test_ball_mass_is_exact_count_fraction(self):
        rng = np.random.default_rng(3)
        cloud = fr.PointCloud(rng.uniform(0, 1, (49, 2)), 5)
        mu = fr.frostman_measure(cloud)
        for _ in range(20):
            z = rng.uniform(-0.2, 1.2, 2)
            r = rng.uniform(0.05, 0.8)
            cnt = int((np.linalg.norm(cloud.points - z, axis=1) <= r).sum())
            assert mu.measure_ball(z, r) == cnt / 49

    def test_frostman_condition_from_audit(self):
        k, q = 5, 2.0
        cloud = fr.PointCloud(square_grid(k), k)
        ds = fr.extract_delta_q_set(cloud, q)
        mu = fr.frostman_measure(ds.cloud)
        conc = ds.conc_measured
        n = len(ds.cloud)
        rng = np.random.default_rng(4)
        d = cloud.delta
        for _ in range(100):
            z = rng.uniform(-0.1, 1.1, 2)
            for j in range(1, k):
                r = 2.0 ** (-j)
                assert mu.measure_ball(z, r) <= conc / n * (r / d) ** q + 1e-12

    def test_scaled_measure(self):
        cloud = fr.PointCloud(np.array([[0.0, 0.0], [1.0, 1.0]]), 4)
        mu = fr.frostman_measure(cloud).scaled(0.25)
        assert mu.total_mass == pytest.approx(0.25)


class TestContent:
    def test_single_point_upper_shrinks(self):
        pts = np.array([[0.3, 0.4]])
        e1 = fr.content_greedy(pts, 0.5, 0.01, delta=0.001)
        e2 = fr.content_greedy(pts, 0.5, 0.001, delta=0.001)
        assert e1.upper <= (2 * 0.01) ** 0.5 * (1 + 1e-12)
        assert e2.upper <= (2 * 0.001) ** 0.5 * (1 + 1e-12)
        assert e2.upper < e1.upper
        assert e1.lower <= e1.upper

    def test_circle_two_sided(self):
        k = 7
        est = fr.content_greedy(circle_cloud(k), 1.0, 2.0 ** (-k))
        assert est.upper <= 2.0 * (1 + 1e-9)
        assert est.lower >= 1.0
        assert est.lower <= est.upper

    def test_cover_record_matches_upper(self):
        k = 6
        est = fr.content_greedy(circle_cloud(k, r=0.7), 1.0, 2.0 ** (-k))
        assert est.upper == pytest.approx(est.cover_sum(1.0), rel=1e-12)

    def test_middle_half_cantor_vs_dp_oracle(self):
        # exact dynamic-programming cover over dyadic intervals of level <= 12
        level = 6
        x = np.array([0.0])
        for j in range(1, level + 1):
            x = np.concatenate([x, x + 3.0 * 4.0 ** (-j)])
        x = np.sort(x)
        s = 0.5
        delta = 4.0 ** (-level)

        def dp(lo, size):
            sel = x[(x >= lo) & (x < lo + size)]
            if sel.size == 0:
                return 0.0
            if size <= delta:
                return size ** s
            return min(size ** s, dp(lo, size / 2) + dp(lo + size / 2, size / 2))

        oracle = dp(0.0, 1.0)
        pts = np.column_stack([x, np.zeros_like(x)])
        est = fr.content_greedy(pts, s, delta)
        assert est.lower <= oracle * 1.0001
        assert est.upper <= 8.0 * est.lower
        assert est.lower <= est.upper

    def test_upper_monotone_in_s_on_recorded_radii(self):
        rng = np.random.default_rng(8)
        pts, _ = fr.normalize_to_unit_ball(rng.uniform(0, 1, (200, 2)))
        est = fr.content_greedy(pts, 0.7, 2.0 ** (-8))
        radii = [r for _, r in est.cover]
        assert all(r <= 1.0 for r in radii)
        sums = [sum(r ** s for r in radii) for s in (0.4, 0.7, 1.0, 1.5)]
        assert all(a >= b for a, b in zip(sums, sums[1:]))

    def test_measure_additivity_over_disjoint_balls(self):
        rng = np.random.default_rng(9)
        cloud = fr.PointCloud(rng.uniform(0, 1, (64, 2)), 5)
        mu = fr.frostman_measure(cloud)
        centers = [(0.2, 0.2), (0.8, 0.8), (0.2, 0.8)]
        r = 0.2
        total = sum(mu.measure_ball(c, r) for c in centers)
        assert total <= 1.0 + 1e-12
