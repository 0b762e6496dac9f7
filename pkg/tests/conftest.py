import numpy as np
import pytest

from slicedblue import manifold, measures


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_sphere_points(rng, d, n):
    return measures.uniform_sphere(rng, d, n)


def random_hyper_points(rng, d, n, spread=1.5):
    """Points on H^d within geodesic radius `spread` of the origin."""
    v = rng.standard_normal((n, d + 1))
    v[:, -1] = 0.0
    v *= (spread * rng.random((n, 1))) / np.linalg.norm(v[:, :-1], axis=1, keepdims=True)
    return manifold.exp_hyper(manifold.hyper_origin(d), v)


def random_sphere_tangent(rng, x, max_norm=np.pi * 0.99):
    v = manifold.tangent_sphere(x, rng.standard_normal(x.shape))
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    scale = max_norm * rng.random(nrm.shape)
    return v / nrm * scale


def random_hyper_tangent(rng, x, max_norm=2.0):
    v = manifold.tangent_hyper(x, rng.standard_normal(x.shape))
    nrm = np.sqrt(np.maximum(manifold.lorentz_dot(v, v), 0.0))[..., None]
    scale = max_norm * rng.random(nrm.shape)
    return v / nrm * scale
