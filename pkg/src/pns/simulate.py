"""Synthetic data generation and null-calibration of the level tests.

Data are produced by drawing score residuals per level and pushing them
through the inverse score map of a randomly drawn ground-truth model. All
randomness flows through numpy's seeded PCG64 generator, so every output
is reproducible from the seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LevelRecord, NestedSphereModel, inverse_score_map, _cumulative_radii
from .fitting import fit_great, fit_small
from .geometry import Subsphere
from .selection import ks_two_sample, lr_test, variance_f_test

__all__ = [
    "GroundTruth",
    "simulate_nested",
    "sample_great_null",
    "CalibrationReport",
    "calibrate_test",
    "truncated_gaussian",
]


def truncated_gaussian(rng: np.random.Generator, sd: float, lo: float,
                       hi: float, size: int) -> np.ndarray:
    """Mean-zero Gaussian draws rejected outside (lo, hi)."""
    if sd < 0:
        raise ValueError("sd must be non-negative")
    if sd == 0.0:
        return np.zeros(size)
    out = np.empty(size)
    filled = 0
    while filled < size:
        draw = rng.normal(0.0, sd, size=size - filled)
        keep = draw[(draw > lo) & (draw <= hi)]
        out[filled:filled + keep.size] = keep
        filled += keep.size
    return out


def _random_axis(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class GroundTruth:
    model: NestedSphereModel
    radii: tuple[float, ...]
    noise_sd: float
    pns1_sd: float | None
    seed: int


def simulate_nested(d: int, n: int, radii, noise_sd: float, seed: int,
                    pns1_sd: float | None = None) -> tuple[np.ndarray, GroundTruth]:
    """Draw n points from a random nested-sphere model on S^d.

    radii gives the subsphere angle at each of the d - 1 levels. Residuals
    at every level are truncated Gaussians with standard deviation
    noise_sd; the position along the deepest circle is uniform unless
    pns1_sd is given (the uniform is the wide-sd limit of the truncation).
    """
    radii = [float(r) for r in np.atleast_1d(radii)]
    if len(radii) != d - 1:
        raise ValueError(f"need {d - 1} radii for d = {d}, got {len(radii)}")
    if not all(0.0 < r <= np.pi / 2 for r in radii):
        raise ValueError("all radii must lie in (0, pi/2]")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    subspheres = tuple(
        Subsphere(_random_axis(rng, d + 2 - k), radii[k - 1]) for k in range(1, d)
    )
    final_mean = float(rng.uniform(-np.pi, np.pi))
    cumulative = _cumulative_radii(d, subspheres)
    records = tuple(
        LevelRecord(
            sphere_dim=sub.axis.size - 1,
            choice="great" if sub.is_great else "small",
            angle=sub.angle,
            test=None,
            rss_great=None,
            rss_small=None,
            converged=True,
        )
        for sub in subspheres
    )
    model = NestedSphereModel(
        ambient_dim=d,
        subspheres=subspheres,
        final_mean=final_mean,
        pns_mean=inverse_score_map(np.zeros(d), _bare_model(d, subspheres, final_mean, cumulative)),
        cumulative_radii=cumulative,
        level_choices=records,
        mode="small",
        alpha=0.05,
    )
    residuals = np.zeros((n, d))
    if pns1_sd is None:
        residuals[:, 0] = rng.uniform(-np.pi, np.pi, size=n)
    else:
        residuals[:, 0] = truncated_gaussian(rng, pns1_sd, -np.pi, np.pi, n)
    for level in range(1, d):  # level k writes residual column d - k
        r = radii[level - 1]
        residuals[:, d - level] = truncated_gaussian(rng, noise_sd, -r, np.pi - r, n)
    scores = residuals * cumulative[None, :]
    data = inverse_score_map(scores, model)
    truth = GroundTruth(model=model, radii=tuple(radii), noise_sd=noise_sd,
                        pns1_sd=pns1_sd, seed=seed)
    return data, truth


def _bare_model(d, subspheres, final_mean, cumulative) -> NestedSphereModel:
    return NestedSphereModel(
        ambient_dim=d,
        subspheres=subspheres,
        final_mean=final_mean,
        pns_mean=np.zeros(d + 1),
        cumulative_radii=cumulative,
        level_choices=(),
        mode="small",
        alpha=0.05,
    )


def sample_great_null(rng: np.random.Generator, n: int, d: int,
                      noise_sd: float, axis: np.ndarray | None = None) -> np.ndarray:
    """Points around a true great subsphere of S^d with angular noise.

    Positions on the subsphere are uniform; offsets off it are truncated
    Gaussian. This is the null of the great-versus-small level tests.
    """
    if axis is None:
        axis = _random_axis(rng, d + 1)
    tang = rng.standard_normal((n, d + 1))
    tang -= (tang @ axis)[:, None] * axis
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    phi = np.pi / 2 + truncated_gaussian(rng, noise_sd, -np.pi / 2, np.pi / 2, n)
    return np.cos(phi)[:, None] * axis + np.sin(phi)[:, None] * tang


@dataclass(frozen=True)
class CalibrationReport:
    test: str
    replicates: int
    n: int
    d: int
    noise_sd: float
    alpha: float
    seed: int
    rejection_rate: float
    p_values: np.ndarray
    p_uniform_ks: float  # sup distance of the p-value sample from U[0,1]

    def summary(self) -> dict:
        return {
            "test": self.test,
            "replicates": self.replicates,
            "n": self.n,
            "d": self.d,
            "noise_sd": self.noise_sd,
            "alpha": self.alpha,
            "seed": self.seed,
            "rejection_rate": self.rejection_rate,
            "p_uniform_ks": self.p_uniform_ks,
            "p_value_mean": float(self.p_values.mean()),
        }


def calibrate_test(test: str, replicates: int, n: int, d: int,
                   noise_sd: float, alpha: float, seed: int) -> CalibrationReport:
    """Empirical size of a level test under the great-subsphere null.

    The likelihood ratio test is calibrated on nested fits of the same
    dataset (its chi-squared reference comes from that nesting); the
    variance and KS tests are calibrated on fits of two independent
    replicate datasets from the same truth (their F / Kolmogorov references
    assume independent samples). Fitting both models to one dataset makes
    those two statistics degenerate and the tests deliberately
    conservative, which is their in-pipeline behavior, not their size.
    """
    if test not in ("ks", "var", "lr"):
        raise ValueError(f"test must be ks, var or lr, got {test!r}")
    if replicates < 100:
        raise ValueError("need at least 100 replicates")
    rng = np.random.default_rng(seed)
    p_values = np.empty(replicates)
    rejections = 0
    for i in range(replicates):
        axis = _random_axis(rng, d + 1)
        data = sample_great_null(rng, n, d, noise_sd, axis=axis)
        great = fit_great(data)
        if test == "lr":
            small = fit_small(data, _great_fit=great)
            result = lr_test(great.residuals, small.residuals, alpha)
            p = result.p_value
            rejected = result.chose_small
        else:
            other = sample_great_null(rng, n, d, noise_sd, axis=axis)
            small = fit_small(other)
            if test == "var":
                result = variance_f_test(great.residuals, small.residuals, alpha)
                p = result.p_value
                rejected = result.chose_small
            else:
                _, p = ks_two_sample(np.abs(great.residuals), np.abs(small.residuals))
                rejected = p < alpha
        p_values[i] = p
        rejections += bool(rejected)
    grid = np.sort(p_values)
    ecdf = np.arange(1, replicates + 1) / replicates
    ks_dist = float(np.max(np.maximum(np.abs(ecdf - grid),
                                      np.abs(ecdf - 1.0 / replicates - grid))))
    return CalibrationReport(
        test=test,
        replicates=replicates,
        n=n,
        d=d,
        noise_sd=noise_sd,
        alpha=alpha,
        seed=seed,
        rejection_rate=rejections / replicates,
        p_values=p_values,
        p_uniform_ks=ks_dist,
    )
