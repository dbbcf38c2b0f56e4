"""Sphere geometry primitives used by the nested-sphere pipeline.

All functions work on points of the unit sphere S^m embedded in R^(m+1),
represented as plain numpy arrays (single points as 1-d arrays, batches as
rows of a 2-d array). Everything here is a pure function; there is no
shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Subsphere",
    "geodesic_dist",
    "rotation_to_pole",
    "project_to_subsphere",
    "sphere_transform",
    "inverse_transform",
    "frechet_mean_circle",
    "wrap_angle",
]

# Dot products are clamped to [-1, 1] before acos; tolerance below which a
# point counts as lying on the rotation axis (projection undefined).
_DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class Subsphere:
    """One pipeline level: the locus of points at angle `angle` from `axis`.

    `angle` = pi/2 describes a great subsphere (an equator), smaller angles
    a small subsphere strictly inside one hemisphere.
    """

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.ndim != 1 or axis.size < 2:
            raise ValueError("axis must be a 1-d vector of length >= 2")
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("axis must have unit norm (within 1e-12)")
        if not (0.0 < self.angle <= np.pi / 2 + 1e-12):
            raise ValueError(f"angle must lie in (0, pi/2], got {self.angle}")
        object.__setattr__(self, "axis", axis)

    @property
    def ambient_dim(self) -> int:
        return self.axis.size

    @property
    def is_great(self) -> bool:
        return abs(self.angle - np.pi / 2) <= 1e-12


def _as_points(x) -> tuple[np.ndarray, bool]:
    """Coerce to a 2-d (n, m+1) float array; report whether input was 1-d."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim != 2:
        raise ValueError("expected a vector or a matrix of row vectors")
    return arr, False


def geodesic_dist(x, y) -> np.ndarray | float:
    """Arc-length distance acos(x.y) in [0, pi] between unit vectors.

    Broadcasts over rows when either argument is 2-d.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape[-1] != ya.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {xa.shape[-1]} vs {ya.shape[-1]}"
        )
    dots = np.clip(np.sum(xa * ya, axis=-1), -1.0, 1.0)
    return np.arccos(dots)


def rotation_to_pole(v: np.ndarray) -> np.ndarray:
    """Orthogonal matrix R with R v = e_last, deterministic in v.

    R is the proper rotation acting only in the plane spanned by v and the
    pole; when v is (nearly) antipodal to the pole it is composed with a
    half-turn in the (e_1, pole) plane so the result stays exact.
    """
    v = np.asarray(v, dtype=float)
    m1 = v.size
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("v must have unit norm")
    c = float(np.clip(v[-1], -1.0, 1.0))
    if c < 0.0:
        # Lower hemisphere: rotate by pi in the (e_1, pole) plane first so
        # the Rodrigues denominator 1 + c stays >= 1.
        half_turn = np.eye(m1)
        half_turn[0, 0] = -1.0
        half_turn[-1, -1] = -1.0
        return rotation_to_pole(half_turn @ v) @ half_turn
    u = v.copy()
    u[-1] -= c  # v - c * pole, orthogonal to the pole
    rot = np.eye(m1)
    rot[-1, -1] += c - 1.0
    # Stable Rodrigues form: (cos a - 1) u^ u^T / |u|^2 = -u u^T / (1 + c).
    rot -= np.outer(u, u) / (1.0 + c)
    rot[-1, :] += u
    rot[:, -1] -= u
    return rot


def project_to_subsphere(x, sub: Subsphere, with_status: bool = False):
    """Closest point of the subsphere to x (minimal arc distance).

    Points within 1e-10 of +-axis have no unique closest point; they map to
    the fixed point `inverse_transform(e_1, sub)` and are reported in the
    degenerate mask when `with_status` is true.
    """
    pts, single = _as_points(x)
    v = sub.axis
    if pts.shape[1] != v.size:
        raise ValueError("point dimension does not match subsphere axis")
    dots = np.clip(pts @ v, -1.0, 1.0)
    rho = np.arccos(dots)
    sin_rho = np.sin(rho)
    degenerate = sin_rho < _DEGENERATE_TOL
    safe_sin = np.where(degenerate, 1.0, sin_rho)
    scale = np.sin(sub.angle) / safe_sin
    proj = np.cos(sub.angle) * v + scale[:, None] * (pts - dots[:, None] * v)
    if np.any(degenerate):
        e1 = np.zeros(v.size - 1)
        e1[0] = 1.0
        proj[degenerate] = inverse_transform(e1, sub)
    if single:
        proj = proj[0]
        degenerate = bool(degenerate[0])
    if with_status:
        return proj, degenerate
    return proj


def sphere_transform(x, sub: Subsphere, atol: float = 1e-8):
    """Map points of the subsphere onto the unit sphere one dimension down.

    Rotates the axis to the pole, drops the (now constant) last coordinate
    and rescales by 1/sin(angle). Raises if a point is farther than `atol`
    (in angle) from the subsphere.
    """
    pts, single = _as_points(x)
    v = sub.axis
    off = np.abs(np.arccos(np.clip(pts @ v, -1.0, 1.0)) - sub.angle)
    if np.any(off > atol):
        raise ValueError(
            f"point not on subsphere: angular offset {off.max():.3e} > {atol:.1e}"
        )
    rot = rotation_to_pole(v)
    out = (pts @ rot.T)[:, :-1] / np.sin(sub.angle)
    return out[0] if single else out


def inverse_transform(y, sub: Subsphere):
    """Inverse of `sphere_transform`: embed S^(m-1) back as the subsphere."""
    pts, single = _as_points(y)
    if pts.shape[1] != sub.axis.size - 1:
        raise ValueError("point dimension must be one below the subsphere axis")
    rot = rotation_to_pole(sub.axis)
    lifted = np.empty((pts.shape[0], sub.axis.size))
    lifted[:, :-1] = np.sin(sub.angle) * pts
    lifted[:, -1] = np.cos(sub.angle)
    out = lifted @ rot
    return out[0] if single else out


def wrap_angle(theta):
    """Wrap angles into (-pi, pi]."""
    arr = np.asarray(theta, dtype=float)
    wrapped = np.mod(arr + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    if np.isscalar(theta) or arr.ndim == 0:
        return float(wrapped)
    return wrapped


def frechet_mean_circle(angles) -> float:
    """Minimizer of the summed squared arc distance on the circle.

    The objective is piecewise quadratic in the mean; the candidate set of
    per-observation unwrapped averages contains its minimum, so candidates
    are enumerated and the best (smallest angle on ties) returned.
    """
    theta = np.asarray(angles, dtype=float).ravel()
    if theta.size == 0:
        raise ValueError("empty input")
    candidates = wrap_angle(theta + np.mean(wrap_angle(theta[None, :] - theta[:, None]), axis=1))
    deviations = wrap_angle(theta[None, :] - candidates[:, None])
    objective = np.sum(deviations**2, axis=1)
    best = objective.min()
    tied = objective <= best + 1e-12 * max(1.0, best)
    return float(candidates[tied].min())
