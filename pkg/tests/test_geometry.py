import numpy as np
import pytest

from pns.geometry import (
    Subsphere,
    frechet_mean_circle,
    geodesic_dist,
    inverse_transform,
    project_to_subsphere,
    rotation_to_pole,
    sphere_transform,
    wrap_angle,
)

from conftest import random_unit, subsphere_data, tangent_basis


class TestGeodesicDist:
    def test_identity(self):
        x = np.array([0.6, 0.8, 0.0])
        assert geodesic_dist(x, x) == 0.0

    def test_orthogonal(self):
        assert geodesic_dist([1.0, 0, 0], [0, 1.0, 0]) == pytest.approx(np.pi / 2)

    def test_antipodal(self):
        assert geodesic_dist([1.0, 0], [-1.0, 0]) == pytest.approx(np.pi)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            geodesic_dist([1.0, 0], [1.0, 0, 0])

    def test_symmetry_and_triangle(self, rng):
        for _ in range(200):
            x, y, z = (random_unit(rng, 4) for _ in range(3))
            assert geodesic_dist(x, y) == geodesic_dist(y, x)
            assert geodesic_dist(x, z) <= geodesic_dist(x, y) + geodesic_dist(y, z) + 1e-12


class TestRotationToPole:
    def test_pole_gives_identity(self):
        v = np.array([0.0, 0.0, 1.0])
        assert np.array_equal(rotation_to_pole(v), np.eye(3))

    def test_antipode(self):
        v = np.array([0.0, 0.0, -1.0])
        rot = rotation_to_pole(v)
        assert np.linalg.norm(rot @ v - np.array([0, 0, 1.0])) < 1e-12
        assert np.abs(rot.T @ rot - np.eye(3)).max() < 1e-12

    def test_property_random_axes(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            dim = int(rng.integers(2, 51))
            v = random_unit(rng, dim)
            rot = rotation_to_pole(v)
            pole = np.zeros(dim)
            pole[-1] = 1.0
            assert np.linalg.norm(rot @ v - pole) < 1e-12
            assert np.abs(rot.T @ rot - np.eye(dim)).max() < 1e-12

    def test_proper_rotation(self, rng):
        for _ in range(50):
            v = random_unit(rng, 5)
            assert np.linalg.det(rotation_to_pole(v)) == pytest.approx(1.0, abs=1e-9)

    def test_deterministic(self, rng):
        v = random_unit(rng, 8)
        assert np.array_equal(rotation_to_pole(v), rotation_to_pole(v.copy()))


class TestProjection:
    def test_fixed_point_on_subsphere(self, rng):
        v = random_unit(rng, 4)
        sub = Subsphere(v, 0.9)
        x = subsphere_data(v, 0.9, 1, rng)[0]
        assert np.linalg.norm(project_to_subsphere(x, sub) - x) < 1e-12

    def test_equator_example(self):
        sub = Subsphere(np.array([0.0, 0.0, 1.0]), np.pi / 2)
        got = project_to_subsphere(np.array([0.0, 0.6, 0.8]), sub)
        # brute-force check: the closest equator point of (0, .6, .8) is (0, 1, 0)
        theta = np.linspace(-np.pi, np.pi, 20001)
        cand = np.stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)], axis=1)
        best = cand[np.argmin(geodesic_dist(cand, np.array([0.0, 0.6, 0.8])))]
        assert np.linalg.norm(got - np.array([0.0, 1.0, 0.0])) < 1e-12
        assert np.linalg.norm(best - got) < 1e-3

    def test_optimality_oracle(self, rng):
        for _ in range(25):
            v = random_unit(rng, 3)
            r = rng.uniform(0.1, np.pi / 2)
            sub = Subsphere(v, r)
            x = random_unit(rng, 3)
            proj = project_to_subsphere(x, sub)
            sample = subsphere_data(v, r, 10_000, rng)
            assert geodesic_dist(x, proj) <= geodesic_dist(sample, x).min() + 1e-6

    def test_degenerate_at_axis(self):
        v = np.array([0.0, 0.0, 1.0])
        sub = Subsphere(v, 0.5)
        for x in (v, -v):
            point, degenerate = project_to_subsphere(x, sub, with_status=True)
            assert degenerate
            e1 = np.zeros(2)
            e1[0] = 1.0
            assert np.allclose(point, inverse_transform(e1, sub), atol=1e-12)
        _, flag = project_to_subsphere(np.array([1.0, 0, 0]), sub, with_status=True)
        assert not flag

    def test_result_on_subsphere(self, rng):
        for _ in range(100):
            v = random_unit(rng, 5)
            r = rng.uniform(0.05, np.pi / 2)
            sub = Subsphere(v, r)
            x = random_unit(rng, 5)
            proj = project_to_subsphere(x, sub)
            assert abs(geodesic_dist(proj, v) - r) < 1e-10


class TestSphereTransform:
    def test_hand_case_pole_axis(self):
        sub = Subsphere(np.array([0.0, 0.0, 1.0]), np.pi / 2)
        assert np.allclose(sphere_transform(np.array([0.0, 1.0, 0.0]), sub), [0.0, 1.0], atol=1e-15)

    def test_great_case_no_rescale(self, rng):
        v = random_unit(rng, 4)
        sub = Subsphere(v, np.pi / 2)
        x = subsphere_data(v, np.pi / 2, 1, rng)[0]
        rotated = rotation_to_pole(v) @ x
        assert np.allclose(sphere_transform(x, sub), rotated[:-1], atol=1e-12)

    def test_round_trip_both_ways(self, rng):
        for _ in range(100):
            v = random_unit(rng, 6)
            sub = Subsphere(v, rng.uniform(0.05, np.pi / 2))
            x = subsphere_data(v, sub.angle, 1, rng)[0]
            assert np.linalg.norm(inverse_transform(sphere_transform(x, sub), sub) - x) < 1e-10
            y = random_unit(rng, 5)
            assert np.linalg.norm(sphere_transform(inverse_transform(y, sub), sub) - y) < 1e-10

    def test_off_subsphere_rejected(self):
        sub = Subsphere(np.array([0.0, 0.0, 1.0]), 0.3)
        with pytest.raises(ValueError, match="not on subsphere"):
            sphere_transform(np.array([1.0, 0.0, 0.0]), sub)

    def test_inverse_lands_on_subsphere(self, rng):
        v = random_unit(rng, 7)
        sub = Subsphere(v, 0.8)
        for _ in range(50):
            y = random_unit(rng, 6)
            w = inverse_transform(y, sub)
            assert abs(geodesic_dist(w, v) - sub.angle) < 1e-10

    def test_equatorial_embedding(self):
        dim = 5
        v = np.zeros(dim)
        v[-1] = 1.0
        sub = Subsphere(v, np.pi / 2)
        y = np.zeros(dim - 1)
        y[0] = 1.0
        expect = np.zeros(dim)
        expect[0] = 1.0
        assert np.allclose(inverse_transform(y, sub), expect, atol=1e-15)


def brute_force_circle_mean(theta, grid_size=1_000_000):
    grid = np.linspace(-np.pi, np.pi, grid_size, endpoint=False)
    total = np.zeros(grid_size)
    for t in theta:
        total += wrap_angle(t - grid) ** 2
    return grid[np.argmin(total)], total.min()


class TestFrechetMeanCircle:
    def test_all_equal(self):
        assert frechet_mean_circle([0.4, 0.4, 0.4]) == pytest.approx(0.4)

    def test_symmetric_tie_returns_smaller(self):
        assert frechet_mean_circle([-np.pi / 2, np.pi / 2]) == 0.0

    def test_wraparound_pair(self):
        got = frechet_mean_circle([3.0, -3.0])
        assert got == pytest.approx(np.pi)
        grid_best, grid_obj = brute_force_circle_mean(np.array([3.0, -3.0]), 100_000)
        ours = sum(wrap_angle(t - got) ** 2 for t in (3.0, -3.0))
        assert ours <= grid_obj + 1e-9

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            frechet_mean_circle([])

    def test_matches_brute_force_grid(self):
        rng = np.random.default_rng(5150)
        grid = np.linspace(-np.pi, np.pi, 1_000_000, endpoint=False)
        step = 2 * np.pi / 1_000_000
        for _ in range(100):
            n = int(rng.integers(1, 21))
            theta = rng.uniform(-np.pi, np.pi, n)
            got = frechet_mean_circle(theta)
            objective = np.zeros(grid.size)
            for t in theta:
                objective += wrap_angle(t - grid) ** 2
            best = int(np.argmin(objective))
            ours = np.sum(wrap_angle(theta - got) ** 2)
            # never worse than the scan; agree in position unless the scan
            # found a distinct global minimum of equal value
            assert ours <= objective[best] + 1e-9
            if abs(wrap_angle(got - grid[best])) >= 2 * step:
                assert ours <= objective[best] + 1e-12


class TestSubsphereValidation:
    def test_angle_bounds(self):
        with pytest.raises(ValueError):
            Subsphere(np.array([1.0, 0.0]), 0.0)
        with pytest.raises(ValueError):
            Subsphere(np.array([1.0, 0.0]), np.pi / 2 + 0.01)

    def test_axis_norm(self):
        with pytest.raises(ValueError):
            Subsphere(np.array([1.0, 1.0]), 0.5)

    def test_is_great(self):
        assert Subsphere(np.array([1.0, 0.0]), np.pi / 2).is_great
        assert not Subsphere(np.array([1.0, 0.0]), 0.5).is_great
