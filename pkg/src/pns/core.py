"""Backward nested-sphere fitting, scores, and the score map h / inverse.

The pipeline fits one subsphere per level, starting on the full sphere S^d
and descending one dimension per level until the circle S^1, where the
remaining structure is a single angular mean. Signed residuals collected on
the way down become scores after rescaling by the cumulative radii, giving
a circular first score and interval-valued higher scores.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .fitting import DegenerateDataError, SubsphereFit, fit_both, fit_great
from .geometry import (
    Subsphere,
    frechet_mean_circle,
    geodesic_dist,
    inverse_transform,
    project_to_subsphere,
    sphere_transform,
    wrap_angle,
)
from .selection import (
    LevelTestResult,
    bic_choice,
    ks_level_test,
    lr_test,
    variance_f_test,
)

__all__ = [
    "MODES",
    "LevelRecord",
    "NestedSphereModel",
    "PnsFit",
    "fit_pns",
    "score_map",
    "inverse_score_map",
    "variance_explained",
    "parameter_count",
]

MODES = ("small", "great", "ks", "var", "lr", "bic")

# Slack allowed when checking scores against their validity intervals.
_SCORE_SLACK = 1e-9


@dataclass(frozen=True)
class LevelRecord:
    """Bookkeeping for one fitted level."""

    sphere_dim: int
    choice: str  # "great" | "small"
    angle: float
    test: LevelTestResult | None
    rss_great: float | None
    rss_small: float | None
    converged: bool


@dataclass(frozen=True)
class NestedSphereModel:
    """A fitted sequence of nested subspheres on S^d.

    subspheres[k-1] is the level-k subsphere, living on the sphere of
    ambient dimension d + 2 - k. cumulative_radii[j-1] is the radius of the
    j-dimensional nested sphere, the product of the sines of the angles
    fitted above it; the last entry is always 1.
    """

    ambient_dim: int
    subspheres: tuple[Subsphere, ...]
    final_mean: float | None
    pns_mean: np.ndarray
    cumulative_radii: np.ndarray
    level_choices: tuple[LevelRecord, ...]
    mode: str
    alpha: float
    truncated: bool = False
    collapse_point: np.ndarray | None = None

    @property
    def n_levels(self) -> int:
        return len(self.subspheres)

    def free_parameters(self) -> int:
        """Number of free parameters actually fitted (axes plus free angles)."""
        d = self.ambient_dim
        axes = sum(d + 1 - k for k in range(1, self.n_levels + 1))
        if not self.truncated:
            axes += 1  # the final circle mean
        small_angles = sum(1 for rec in self.level_choices if rec.choice == "small")
        return axes + small_angles


@dataclass(frozen=True)
class PnsFit:
    model: NestedSphereModel
    scores: np.ndarray
    residuals: np.ndarray


def parameter_count(d: int) -> int:
    """Dimension of the parameter space on S^d when every level is small."""
    if d < 1:
        raise ValueError("d must be at least 1")
    return d * (d + 3) // 2 - 1


def _check_sphere_data(data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be an n x (d+1) matrix")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite entries")
    n, m1 = data.shape
    if m1 < 2:
        raise ValueError("ambient dimension must be at least 2")
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    norms = np.linalg.norm(data, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"row {bad} is not on the unit sphere (|x| = {norms[bad]:.10f})")
    return data / norms[:, None]


def _collapsed(points: np.ndarray) -> bool:
    return bool(np.min(points @ points[0]) > 1.0 - 1e-12)


def _cumulative_radii(d: int, subspheres) -> np.ndarray:
    sines = np.array([np.sin(s.angle) for s in subspheres])
    radii = np.ones(d)
    for j in range(1, d):  # a_j = product of the first d - j sines
        radii[j - 1] = np.prod(sines[: d - j])
    return radii


def _descend(points: np.ndarray, sub: Subsphere) -> np.ndarray:
    return sphere_transform(project_to_subsphere(points, sub), sub)


def fit_pns(data, mode: str = "small", alpha: float = 0.05) -> PnsFit:
    """Fit the full nested-sphere sequence to data on S^d.

    mode chooses the per-level rule: force small or great subspheres, or
    pick per level with a test ("ks", "var", "lr") at significance alpha,
    or by BIC.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 0.5]")
    points = _check_sphere_data(data)
    n, m1 = points.shape
    d = m1 - 1
    if n < d + 2:
        warnings.warn(
            f"n = {n} is small for dimension d = {d}; fits may be unstable",
            RuntimeWarning,
        )

    residuals = np.zeros((n, d))
    subspheres: list[Subsphere] = []
    records: list[LevelRecord] = []
    truncated = False
    collapse_point = None
    current = points
    for level in range(1, d):
        if _collapsed(current):
            truncated = True
            collapse_point = current[0].copy()
            break
        sphere_dim = current.shape[1] - 1
        try:
            if mode == "great":
                great = fit_great(current)
                chosen, choice, test = great, "great", None
                rss_g, rss_s = great.rss, None
            else:
                great, small = fit_both(current)
                rss_g, rss_s = great.rss, small.rss
                if mode == "small":
                    test = None
                    chose_small = True
                elif mode == "bic":
                    test = bic_choice(great.residuals, small.residuals, sphere_dim)
                    chose_small = test.chose_small
                else:
                    runner = {"ks": ks_level_test, "var": variance_f_test, "lr": lr_test}[mode]
                    test = runner(great.residuals, small.residuals, alpha)
                    chose_small = test.chose_small
                chosen, choice = (small, "small") if chose_small else (great, "great")
        except DegenerateDataError:
            truncated = True
            collapse_point = current[0].copy()
            break
        subspheres.append(chosen.subsphere)
        residuals[:, d - level] = chosen.residuals
        records.append(
            LevelRecord(
                sphere_dim=sphere_dim,
                choice=choice,
                angle=chosen.angle,
                test=test,
                rss_great=rss_g,
                rss_small=rss_s,
                converged=chosen.converged,
            )
        )
        current = _descend(current, chosen.subsphere)

    if truncated:
        final_mean = None
    elif _collapsed(current) and current.shape[1] == 2:
        # all final angles equal: mean is that angle, residuals zero
        final_mean = float(np.arctan2(current[0, 1], current[0, 0]))
        residuals[:, 0] = wrap_angle(
            np.arctan2(current[:, 1], current[:, 0]) - final_mean
        )
    else:
        theta = np.arctan2(current[:, 1], current[:, 0])
        final_mean = frechet_mean_circle(theta)
        residuals[:, 0] = wrap_angle(theta - final_mean)

    radii = _cumulative_radii(d, subspheres)
    scores = residuals * radii[None, :]

    pns_mean = _reconstruct_mean(d, subspheres, final_mean, collapse_point)
    model = NestedSphereModel(
        ambient_dim=d,
        subspheres=tuple(subspheres),
        final_mean=final_mean,
        pns_mean=pns_mean,
        cumulative_radii=radii,
        level_choices=tuple(records),
        mode=mode,
        alpha=alpha,
        truncated=truncated,
        collapse_point=collapse_point,
    )
    return PnsFit(model=model, scores=scores, residuals=residuals)


def _reconstruct_mean(d, subspheres, final_mean, collapse_point) -> np.ndarray:
    if final_mean is not None:
        z = np.array([np.cos(final_mean), np.sin(final_mean)])
    else:
        z = collapse_point.copy()
    for sub in reversed(subspheres):
        z = inverse_transform(z, sub)
    return z


def score_map(x, model: NestedSphereModel) -> np.ndarray:
    """Map points of S^d to their score vectors under a fitted model."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    d = model.ambient_dim
    if pts.shape[1] != d + 1:
        raise ValueError(f"expected points in R^{d + 1}, got R^{pts.shape[1]}")
    n = pts.shape[0]
    residuals = np.zeros((n, d))
    current = pts
    for level, sub in enumerate(model.subspheres, start=1):
        residuals[:, d - level] = geodesic_dist(current, sub.axis) - sub.angle
        current = _descend(current, sub)
    if not model.truncated:
        theta = np.arctan2(current[:, 1], current[:, 0])
        residuals[:, 0] = wrap_angle(theta - model.final_mean)
    scores = residuals * model.cumulative_radii[None, :]
    return scores[0] if single else scores


def _score_bounds(model: NestedSphereModel):
    """Validity interval (lo, hi) of each raw residual, by score column."""
    d = model.ambient_dim
    lo = np.full(d, -np.pi)
    hi = np.full(d, np.pi)
    for level, sub in enumerate(model.subspheres, start=1):
        lo[d - level] = -sub.angle
        hi[d - level] = np.pi - sub.angle
    return lo, hi


def inverse_score_map(s, model: NestedSphereModel) -> np.ndarray:
    """Reconstruct the point of S^d with the given score vector.

    Scores must lie in their validity intervals: the circular first score
    within (-a1 pi, a1 pi] and each higher score s_k within the rescaled
    interval (-a_k r, a_k (pi - r)] of its level.
    """
    sc = np.asarray(s, dtype=float)
    single = sc.ndim == 1
    if single:
        sc = sc[None, :]
    d = model.ambient_dim
    if sc.shape[1] != d:
        raise ValueError(f"expected score vectors of length {d}, got {sc.shape[1]}")
    xi = sc / model.cumulative_radii[None, :]
    lo, hi = _score_bounds(model)
    if np.any(xi < lo[None, :] - _SCORE_SLACK) or np.any(xi > hi[None, :] + _SCORE_SLACK):
        bad = np.argwhere((xi < lo[None, :] - _SCORE_SLACK) | (xi > hi[None, :] + _SCORE_SLACK))
        row, col = bad[0]
        raise ValueError(
            f"score s{col + 1} = {sc[row, col]:.6g} outside its validity interval"
        )

    if model.truncated:
        tail = d - len(model.subspheres)
        if np.any(np.abs(xi[:, :tail]) > _SCORE_SLACK):
            raise ValueError(
                "model is truncated: scores below the collapse level must be zero"
            )
        current = np.broadcast_to(model.collapse_point, (sc.shape[0], model.collapse_point.size)).copy()
    else:
        theta = model.final_mean + xi[:, 0]
        current = np.stack([np.cos(theta), np.sin(theta)], axis=1)

    for level in range(len(model.subspheres), 0, -1):
        sub = model.subspheres[level - 1]
        on_sub = inverse_transform(current, sub)
        offset = xi[:, d - level]
        phi = np.clip(sub.angle + offset, 0.0, np.pi)
        u = (on_sub - np.cos(sub.angle) * sub.axis) / np.sin(sub.angle)
        current = np.cos(phi)[:, None] * sub.axis + np.sin(phi)[:, None] * u
    return current[0] if single else current


def variance_explained(scores) -> np.ndarray:
    """Percent of total mean-square score carried by each component."""
    sc = np.asarray(scores, dtype=float)
    if sc.ndim != 2 or sc.shape[0] < 2:
        raise ValueError("scores must be an n x d matrix with n >= 2")
    power = np.mean(sc**2, axis=0)
    total = power.sum()
    if total <= 0.0:
        raise ValueError("all scores are zero; variance fractions undefined")
    return 100.0 * power / total
