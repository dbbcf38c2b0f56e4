"""Least-squares fitting of one subsphere (axis, angle) to points on S^m.

The small variant leaves the angle free and profiles it out in closed form
(the optimal angle for a fixed axis is the mean angular distance); the
great variant pins the angle at pi/2. The axis is optimized by a damped
Gauss-Newton iteration in the tangent space at the current axis, with an
exponential-map retraction after every accepted step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import Subsphere, rotation_to_pole

__all__ = ["SubsphereFit", "fit_small", "fit_great", "fit_both", "DegenerateDataError"]

HALF_PI = np.pi / 2
MAX_ITER = 500
REL_RSS_TOL = 1e-12
STEP_TOL = 1e-10
MIN_ANGLE = 1e-6


class DegenerateDataError(ValueError):
    """Raised when the data admit no meaningful subsphere (all points equal)."""


@dataclass
class SubsphereFit:
    """Result of one subsphere fit.

    residuals are signed angular offsets distance(x_i, axis) - angle, so
    negative values lie on the axis side of the subsphere.
    """

    subsphere: Subsphere
    residuals: np.ndarray
    rss: float
    converged: bool
    iterations: int
    objective_trace: list[float] = field(default_factory=list)

    @property
    def axis(self) -> np.ndarray:
        return self.subsphere.axis

    @property
    def angle(self) -> float:
        return self.subsphere.angle


def _check_data(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be an n x (m+1) matrix of unit rows")
    n, m1 = data.shape
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    if m1 < 2:
        raise ValueError("ambient dimension must be at least 2")
    norms = np.linalg.norm(data, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"row {bad} is not unit norm (|x| = {norms[bad]:.12f})")
    spread = data @ data[0]
    if np.min(spread) > 1.0 - 1e-12:
        raise DegenerateDataError("all data points are identical")
    return data


def _angles(data: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(data @ v, -1.0, 1.0))


def _rss(data: np.ndarray, v: np.ndarray, great: bool) -> float:
    rho = _angles(data, v)
    r = HALF_PI if great else rho.mean()
    d = rho - r
    return float(d @ d)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip so the first coordinate with magnitude > 1e-8 is positive."""
    nz = np.flatnonzero(np.abs(v) > 1e-8)
    lead = nz[0] if nz.size else int(np.argmax(np.abs(v)))
    return -v if v[lead] < 0 else v


def _gauss_newton(data: np.ndarray, v0: np.ndarray, great: bool):
    """Damped Gauss-Newton over the axis; returns (v, rss, converged, iters, trace)."""
    n, m1 = data.shape
    v = v0 / np.linalg.norm(v0)
    rho = _angles(data, v)
    r = HALF_PI if great else rho.mean()
    resid = rho - r
    rss = float(resid @ resid)
    trace = [rss]
    lam = 1e-4
    converged = False
    it = 0
    while it < MAX_ITER:
        it += 1
        # d rho_i / d v in tangent coordinates: -(x_i . B_j) / sin rho_i
        basis = rotation_to_pole(v).T[:, :-1]  # (m+1) x m, orthonormal, _|_ v
        sin_rho = np.sin(rho)
        weights = np.where(sin_rho < 1e-12, 0.0, 1.0 / np.maximum(sin_rho, 1e-12))
        jac = -(data * weights[:, None]) @ basis
        if not great:
            jac = jac - jac.mean(axis=0)
        grad = jac.T @ resid
        jtj = jac.T @ jac
        scale = max(np.trace(jtj) / (m1 - 1), 1e-12)
        accepted = False
        while lam < 1e12:
            try:
                step = np.linalg.solve(jtj + lam * scale * np.eye(m1 - 1), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            norm = np.linalg.norm(step)
            if norm < STEP_TOL:
                converged = True
                break
            tangent = basis @ step
            v_new = np.cos(norm) * v + np.sin(norm) * tangent / norm
            v_new /= np.linalg.norm(v_new)
            rho_new = _angles(data, v_new)
            r_new = HALF_PI if great else rho_new.mean()
            resid_new = rho_new - r_new
            rss_new = float(resid_new @ resid_new)
            if rss_new < rss:
                accepted = True
                if rss - rss_new < REL_RSS_TOL * max(rss, 1e-300):
                    converged = True
                v, rho, resid, rss = v_new, rho_new, resid_new, rss_new
                trace.append(rss)
                lam = max(lam / 3.0, 1e-15)
                break
            lam *= 10.0
        if converged or not accepted:
            converged = converged or not accepted  # stuck at a stationary point
            break
    return v, rss, converged, it, trace


def _start_axes(data: np.ndarray) -> list[np.ndarray]:
    """Deterministic starting axes: near-great and small-circle guesses."""
    n, m1 = data.shape
    second_moment = data.T @ data / n
    eigvals, eigvecs = np.linalg.eigh(second_moment)
    near_great = _canonical_sign(eigvecs[:, 0])
    starts = [near_great]
    mean = data.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm > 1e-12:
        starts.append(mean / norm)
    return starts


def _finish(data: np.ndarray, v: np.ndarray, rss: float, converged: bool,
            iters: int, trace: list[float], great: bool) -> SubsphereFit:
    rho = _angles(data, v)
    if great:
        v = _canonical_sign(v)
        r = HALF_PI
    else:
        r = rho.mean()
        if r > HALF_PI:
            v = -v
            r = np.pi - r
        if r < MIN_ANGLE:
            warnings.warn(
                "fitted angle collapsed below 1e-6; data nearly concentrated at a point",
                RuntimeWarning,
                stacklevel=3,
            )
            r = MIN_ANGLE
        r = min(r, HALF_PI)
    residuals = _angles(data, v) - r
    return SubsphereFit(
        subsphere=Subsphere(v, float(r)),
        residuals=residuals,
        rss=float(residuals @ residuals),
        converged=converged,
        iterations=iters,
        objective_trace=trace,
    )


def fit_great(data) -> SubsphereFit:
    """Best great subsphere (angle pi/2): minimizes sum (rho_i - pi/2)^2."""
    data = _check_data(data)
    best = None
    for v0 in _start_axes(data):
        out = _gauss_newton(data, v0, great=True)
        if best is None or out[1] < best[1]:
            best = out
    return _finish(data, *best, great=True)


def fit_small(data, _great_fit: SubsphereFit | None = None) -> SubsphereFit:
    """Best subsphere with free angle: minimizes sum (rho_i - mean rho)^2.

    The great-fit axis is always included as a third start, which guarantees
    rss(small) <= rss(great) because the damped iteration never accepts an
    uphill step.
    """
    data = _check_data(data)
    great = _great_fit if _great_fit is not None else fit_great(data)
    best = None
    for v0 in _start_axes(data) + [great.axis]:
        out = _gauss_newton(data, v0, great=False)
        if best is None or out[1] < best[1]:
            best = out
    return _finish(data, *best, great=False)


def fit_both(data) -> tuple[SubsphereFit, SubsphereFit]:
    """Great and small fits of the same data (shared work for model choice)."""
    data = _check_data(data)
    great = fit_great(data)
    small = fit_small(data, _great_fit=great)
    return great, small
