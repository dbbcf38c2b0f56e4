import numpy as np
import pytest

from pns.geometry import rotation_to_pole


def tangent_basis(v):
    """Orthonormal basis of the tangent space at v."""
    return rotation_to_pole(v).T[:, :-1]


def random_unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_sphere_data(rng, n, dim):
    x = rng.standard_normal((n, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def subsphere_data(v, r, n, rng, noise=0.0):
    """Points at angle r (+ optional Gaussian angular noise) from axis v."""
    m1 = v.size
    b = tangent_basis(v)
    w = rng.standard_normal((n, m1 - 1))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    w = w @ b.T
    angles = np.full(n, float(r))
    if noise:
        angles = angles + rng.normal(0.0, noise, n)
    return np.cos(angles)[:, None] * v + np.sin(angles)[:, None] * w


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
