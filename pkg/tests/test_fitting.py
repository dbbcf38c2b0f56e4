import numpy as np
import pytest

from pns.fitting import DegenerateDataError, fit_both, fit_great, fit_small
from pns.geometry import geodesic_dist

from conftest import random_sphere_data, random_unit, subsphere_data


def best_great_on_grid(data, n_grid=1_000_000):
    """Brute-force great-circle fit on S^2 over a Fibonacci sphere grid."""
    i = np.arange(n_grid)
    phi = np.arccos(1 - 2 * (i + 0.5) / n_grid)
    lam = np.pi * (1 + 5**0.5) * i
    axes = np.stack(
        [np.sin(phi) * np.cos(lam), np.sin(phi) * np.sin(lam), np.cos(phi)], axis=1
    )
    best = np.inf
    for chunk in np.array_split(axes, 50):
        rho = np.arccos(np.clip(chunk @ data.T, -1.0, 1.0))
        rss = np.sum((rho - np.pi / 2) ** 2, axis=1)
        best = min(best, rss.min())
    return best


class TestFitSmall:
    def test_noise_free_recovery(self, rng):
        v0 = random_unit(rng, 3)
        data = subsphere_data(v0, 0.7, 50, rng)
        fit = fit_small(data)
        assert abs(fit.angle - 0.7) < 1e-6
        assert min(geodesic_dist(fit.axis, v0), geodesic_dist(fit.axis, -v0)) < 1e-6
        assert fit.rss < 1e-12
        assert fit.converged

    def test_equatorial_data_gives_great_angle(self, rng):
        data = subsphere_data(np.array([0.0, 0.0, 1.0]), np.pi / 2, 40, rng)
        fit = fit_small(data)
        assert abs(fit.angle - np.pi / 2) < 1e-8

    def test_monte_carlo_noisy_recovery(self):
        misses = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            v0 = random_unit(rng, 3)
            data = subsphere_data(v0, 0.5, 200, rng, noise=0.05)
            fit = fit_small(data)
            if abs(fit.angle - 0.5) >= 0.02:
                misses += 1
        assert misses <= 2

    def test_residual_definition_and_rss(self, rng):
        data = random_sphere_data(rng, 40, 4)
        fit = fit_small(data)
        expected = geodesic_dist(data, fit.axis) - fit.angle
        assert np.abs(fit.residuals - expected).max() < 1e-12
        assert abs(fit.rss - fit.residuals @ fit.residuals) < 1e-10

    def test_profiled_angle_is_mean_distance(self, rng):
        data = random_sphere_data(rng, 60, 5)
        fit = fit_small(data)
        mean_rho = geodesic_dist(data, fit.axis).mean()
        if fit.angle < np.pi / 2 - 1e-9:  # not clamped
            assert abs(fit.angle - mean_rho) < 1e-10

    def test_mean_angle_at_most_half_pi(self, rng):
        for _ in range(20):
            data = random_sphere_data(rng, 30, 3)
            fit = fit_small(data)
            assert geodesic_dist(data, fit.axis).mean() <= np.pi / 2 + 1e-9

    def test_angle_floor_warns(self):
        # radius below the 1e-6 floor but spread enough to not be "identical"
        v0 = np.array([0.0, 0.0, 1.0])
        theta = np.linspace(-np.pi, np.pi, 20, endpoint=False)
        r0 = 9e-7
        data = np.stack(
            [np.sin(r0) * np.cos(theta), np.sin(r0) * np.sin(theta),
             np.full_like(theta, np.cos(r0))], axis=1
        )
        with pytest.warns(RuntimeWarning, match="collapsed"):
            fit = fit_small(data)
        assert fit.angle == pytest.approx(1e-6)

    def test_degenerate_rejected(self):
        data = np.tile([1.0, 0.0, 0.0], (5, 1))
        with pytest.raises(DegenerateDataError):
            fit_small(data)


class TestFitGreat:
    def test_equator_exact(self, rng):
        data = subsphere_data(np.array([0.0, 0.0, 1.0]), np.pi / 2, 30, rng)
        fit = fit_great(data)
        assert min(np.linalg.norm(fit.axis - [0, 0, 1]), np.linalg.norm(fit.axis + [0, 0, 1])) < 1e-6
        assert fit.rss < 1e-12
        assert fit.angle == np.pi / 2

    def test_cluster_matches_grid_search(self, rng):
        center = random_unit(rng, 3)
        data = subsphere_data(center, 0.15, 20, rng, noise=0.05)
        fit = fit_great(data)
        grid_best = best_great_on_grid(data, n_grid=200_000)
        assert fit.rss <= grid_best + 1e-3
        # optimal great circle passes near the cluster: axis _|_ mean direction
        mean_dir = data.mean(axis=0)
        mean_dir /= np.linalg.norm(mean_dir)
        assert abs(fit.axis @ mean_dir) < 0.2

    def test_axis_sign_canonical(self, rng):
        data = random_sphere_data(rng, 25, 4)
        fit = fit_great(data)
        lead = np.flatnonzero(np.abs(fit.axis) > 1e-8)[0]
        assert fit.axis[lead] > 0

    def test_nesting_small_beats_great(self, rng):
        for _ in range(30):
            data = random_sphere_data(rng, 25, 4)
            great, small = fit_both(data)
            assert small.rss <= great.rss + 1e-12


class TestOptimizerProperties:
    def test_bitwise_determinism(self, rng):
        data = random_sphere_data(rng, 30, 3)
        a, b = fit_small(data), fit_small(data)
        assert np.array_equal(a.axis, b.axis) and a.angle == b.angle
        g1, g2 = fit_great(data), fit_great(data)
        assert np.array_equal(g1.axis, g2.axis)

    def test_rotation_invariance(self, rng):
        data = subsphere_data(random_unit(rng, 4), 0.6, 80, rng, noise=0.1)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        fit = fit_small(data)
        fit_rot = fit_small(data @ q.T)
        assert abs(fit.angle - fit_rot.angle) < 1e-8
        mapped = q @ fit.axis
        assert min(np.linalg.norm(fit_rot.axis - mapped), np.linalg.norm(fit_rot.axis + mapped)) < 1e-6

    def test_matches_full_grid_search_s2(self):
        rng = np.random.default_rng(99)
        n_axis, n_r = 200, 200
        u = np.linspace(0, 1, n_axis)
        phi = np.arccos(np.clip(1 - 2 * u, -1, 1))
        lam = np.linspace(-np.pi, np.pi, n_axis, endpoint=False)
        pp, ll = np.meshgrid(phi, lam)
        axes = np.stack(
            [np.sin(pp) * np.cos(ll), np.sin(pp) * np.sin(ll), np.cos(pp)], axis=-1
        ).reshape(-1, 3)
        r_grid = np.linspace(1e-3, np.pi / 2, n_r)
        for _ in range(20):
            data = random_sphere_data(rng, 15, 3)
            fit = fit_small(data)
            rho = np.arccos(np.clip(axes @ data.T, -1.0, 1.0))
            # sum_i (rho_i - r)^2 = sum rho^2 - 2 r sum rho + n r^2 over the r grid
            s1 = rho.sum(axis=1)
            s2 = (rho**2).sum(axis=1)
            rss_grid = s2[:, None] - 2 * r_grid[None, :] * s1[:, None] + 15 * r_grid[None, :] ** 2
            assert fit.rss <= rss_grid.min() + 1e-6

    def test_objective_trace_monotone(self, rng):
        data = random_sphere_data(rng, 50, 4)
        fit = fit_small(data)
        trace = np.array(fit.objective_trace)
        assert np.all(np.diff(trace) <= 0)

    def test_input_validation(self, rng):
        with pytest.raises(ValueError, match="unit norm"):
            fit_small(np.ones((5, 3)))
        with pytest.raises(ValueError, match="at least 3"):
            fit_small(random_sphere_data(rng, 2, 3))
