"""Fast fitting for high-dimensional spheres via a PCA-reduced subsphere.

A principal-component basis is built in the tangent space at the spherical
mean of the data; points are mapped to the low-dimensional sphere spanned
by the mean and the top loadings, the nested-sphere fit runs there, and
three lift maps carry results back to the ambient space (exact spherical,
tangent-plane, and extrinsic-normalized).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import PnsFit, fit_pns

__all__ = [
    "FastPnsBasis",
    "FastPnsFit",
    "build_basis",
    "project_reduced",
    "lift_exact",
    "lift_tangent",
    "lift_extrinsic",
    "fast_pns",
]

_RANK_TOL = 1e-14


@dataclass(frozen=True)
class FastPnsBasis:
    """Spherical mean plus p orthonormal tangent loadings.

    arithmetic_mean is kept un-normalized for the extrinsic lift; loadings
    are rows of a p x (d+1) matrix, each orthogonal to the mean.
    """

    mean: np.ndarray
    arithmetic_mean: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    pct_variance: float

    @property
    def p(self) -> int:
        return self.loadings.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.mean.size - 1


@dataclass(frozen=True)
class FastPnsFit:
    basis: FastPnsBasis
    fit: PnsFit
    reduced: np.ndarray  # the projected data rows on S^p


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make each row's largest-magnitude entry positive (determinism)."""
    out = vecs.copy()
    for i in range(out.shape[0]):
        lead = int(np.argmax(np.abs(out[i])))
        if out[i, lead] < 0:
            out[i] = -out[i]
    return out


def build_basis(data, p: int) -> FastPnsBasis:
    """PCA basis of the tangent residuals at the normalized mean.

    Uses the n x n Gram matrix when the ambient dimension exceeds the sample
    size, which yields identical loadings at a fraction of the cost. p is
    reduced (with a warning) if the spectrum is rank-deficient.
    """
    data = np.asarray(data, dtype=float)
    n, m1 = data.shape
    d = m1 - 1
    if not 1 <= p <= d:
        raise ValueError(f"p must lie in 1..{d}, got {p}")
    if p >= n:
        raise ValueError(f"p must be smaller than the sample size {n}")
    abar = data.mean(axis=0)
    norm = np.linalg.norm(abar)
    if norm < 1e-12:
        raise ValueError("arithmetic mean is zero; data antipodally balanced")
    mean = abar / norm
    tangents = data - (data @ mean)[:, None] * mean
    centered = tangents - tangents.mean(axis=0)
    if m1 > n:
        gram = centered @ centered.T / (n - 1)
        gvals, gvecs = np.linalg.eigh(gram)
        order = np.argsort(gvals)[::-1]
        gvals = gvals[order]
        gvecs = gvecs[:, order]
        total = float(gvals[gvals > 0].sum())
        keep = min(p, int(np.sum(gvals > _RANK_TOL)))
        vecs = (centered.T @ gvecs[:, :keep]) / np.sqrt(gvals[:keep] * (n - 1))
        vecs = vecs.T
        vals = gvals[:keep]
    else:
        cov = centered.T @ centered / (n - 1)
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        total = float(evals[evals > 0].sum())
        keep = min(p, int(np.sum(evals > _RANK_TOL)))
        vecs = evecs[:, order][:, :keep].T
        vals = evals[:keep]
    if keep < p:
        warnings.warn(
            f"requested p = {p} but spectrum has rank {keep}; using p = {keep}",
            RuntimeWarning,
        )
    # Loadings may pick up a tiny mean component from roundoff; re-orthogonalize.
    vecs = vecs - (vecs @ mean)[:, None] * mean[None, :]
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    vecs = _fix_signs(vecs)
    pct = 100.0 * float(vals.sum()) / total if total > 0 else 0.0
    return FastPnsBasis(
        mean=mean,
        arithmetic_mean=abar,
        loadings=vecs,
        eigenvalues=np.asarray(vals, dtype=float),
        pct_variance=pct,
    )


def orient_full_basis(basis: FastPnsBasis) -> FastPnsBasis:
    """When p = d, flip the last loading if needed so [mean; loadings] is a
    proper rotation; a reflective frame would mirror the final circle and
    flip the sign of the circular score relative to a direct fit."""
    if basis.p != basis.ambient_dim:
        return basis
    frame = np.vstack([basis.mean, basis.loadings])
    if np.linalg.det(frame) < 0:
        loadings = basis.loadings.copy()
        loadings[-1] = -loadings[-1]
        return FastPnsBasis(
            mean=basis.mean,
            arithmetic_mean=basis.arithmetic_mean,
            loadings=loadings,
            eigenvalues=basis.eigenvalues,
            pct_variance=basis.pct_variance,
        )
    return basis


def project_reduced(x, basis: FastPnsBasis, with_status: bool = False):
    """Coordinates on the reduced sphere S^p of the log-map projection.

    Rows at the mean (or with tangent component orthogonal to every
    loading) map to the pole (1, 0, ..., 0); rows antipodal to the mean
    have no defined log map and are flagged (and sent to the pole).
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    mean = basis.mean
    if pts.shape[1] != mean.size:
        raise ValueError("point dimension does not match basis")
    dots = np.clip(pts @ mean, -1.0, 1.0)
    rho = np.arccos(dots)
    tangents = pts - dots[:, None] * mean
    tnorm = np.linalg.norm(tangents, axis=1)
    antipodal = dots < -1.0 + 1e-10
    at_mean = tnorm < 1e-14
    safe = np.where(at_mean, 1.0, tnorm)
    lam = (rho / safe)[:, None] * (tangents @ basis.loadings.T)
    lam[at_mean | antipodal] = 0.0
    unorm = np.linalg.norm(lam, axis=1)
    out = np.zeros((pts.shape[0], basis.p + 1))
    out[:, 0] = np.cos(unorm)
    degenerate = unorm < 1e-14
    sinc = np.where(degenerate, 1.0, np.sin(unorm) / np.where(degenerate, 1.0, unorm))
    out[:, 1:] = sinc[:, None] * lam
    if np.any(antipodal):
        warnings.warn(
            "input antipodal to the basis mean: log map undefined, sent to pole",
            RuntimeWarning,
        )
    if single:
        out = out[0]
        degenerate = bool(degenerate[0])
        antipodal = bool(antipodal[0])
    if with_status:
        return out, degenerate, antipodal
    return out


def lift_exact(g, basis: FastPnsBasis):
    """Ambient coordinates of reduced-sphere points: G1 mean + sum Gj+1 Vj."""
    arr = np.asarray(g, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != basis.p + 1:
        raise ValueError(f"expected length {basis.p + 1} coordinates")
    out = arr[:, :1] * basis.mean[None, :] + arr[:, 1:] @ basis.loadings
    return out[0] if single else out


def lift_tangent(g, basis: FastPnsBasis):
    """Tangent-plane approximation at the mean: mean + (s / sin s) sum Gj+1 Vj."""
    arr = np.asarray(g, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    s = np.arccos(np.clip(arr[:, 0], -1.0, 1.0))
    if np.any(s >= np.pi - 1e-12):
        raise ValueError("tangent lift undefined for points antipodal to the pole")
    small = s < 1e-14
    factor = np.where(small, 1.0, s / np.where(small, 1.0, np.sin(s)))
    out = basis.mean[None, :] + factor[:, None] * (arr[:, 1:] @ basis.loadings)
    return out[0] if single else out


def lift_extrinsic(g, basis: FastPnsBasis):
    """Extrinsic approximation: normalize(arithmetic mean + sum Gj+1 Vj)."""
    arr = np.asarray(g, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    raw = basis.arithmetic_mean[None, :] + arr[:, 1:] @ basis.loadings
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms < 1e-12):
        raise ValueError("extrinsic lift hit the origin; cannot normalize")
    out = raw / norms[:, None]
    return out[0] if single else out


def fast_pns(data, p: int | None = None, mode: str = "small",
             alpha: float = 0.05, pct_target: float = 95.0,
             max_default_p: int = 30) -> FastPnsFit:
    """Reduce to S^p with a PCA basis, then run the nested-sphere fit there.

    With p omitted, the smallest p whose loadings capture `pct_target`
    percent of the tangent variance is used, capped at `max_default_p`.
    """
    data = np.asarray(data, dtype=float)
    n, m1 = data.shape
    d = m1 - 1
    if p is None:
        probe = build_basis(data, min(d, n - 1, max_default_p))
        csum = np.cumsum(probe.eigenvalues)
        total = csum[-1] / (probe.pct_variance / 100.0) if probe.pct_variance > 0 else 1.0
        enough = np.flatnonzero(100.0 * csum / total >= pct_target)
        p = int(enough[0]) + 1 if enough.size else probe.p
    basis = build_basis(data, p)
    basis = orient_full_basis(basis)
    reduced = project_reduced(data, basis)
    fit = fit_pns(reduced, mode=mode, alpha=alpha)
    return FastPnsFit(basis=basis, fit=fit, reduced=reduced)
