import numpy as np
import pytest
from scipy import stats

from slicedblue import manifold, slicing
from slicedblue.slicing import (
    OrthogonalToSliceError,
    coord_hyper,
    coord_sphere,
    project_hyper,
    project_sphere,
    sample_slice_hyper,
    sample_slice_sphere,
)

from conftest import random_hyper_points, random_sphere_points


class TestSliceSampling:
    def test_sphere_invariants(self, rng):
        for d in (1, 2, 5):
            s = sample_slice_sphere(rng, d)
            s.validate()

    def test_hyper_invariants(self, rng):
        for d in (1, 2, 5):
            s = sample_slice_hyper(rng, d)
            s.validate()

    def test_sphere_golden_seed_42(self):
        s = sample_slice_sphere(np.random.default_rng(42), 2)
        assert np.allclose(s.e1, [0.23116514, -0.78895502, 0.56930893], atol=1e-8)
        assert np.allclose(s.e2, [0.3049964, -0.49689662, -0.8124475], atol=1e-8)

    def test_hyper_golden_seed_42(self):
        s = sample_slice_hyper(np.random.default_rng(42), 2)
        assert np.allclose(s.dvec, [0.28118049, -0.9596549, 0.0], atol=1e-8)

    def test_sphere_normal_uniform_octants(self):
        # chi-square on octant counts of the great-circle normals
        rng = np.random.default_rng(5)
        normals = np.array(
            [np.cross(s.e1, s.e2) for s in (sample_slice_sphere(rng, 2) for _ in range(10_000))]
        )
        octant = (normals[:, 0] > 0) * 4 + (normals[:, 1] > 0) * 2 + (normals[:, 2] > 0)
        counts = np.bincount(octant, minlength=8)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_hyper_direction_uniform_angle(self):
        rng = np.random.default_rng(5)
        angles = np.array(
            [np.arctan2(s.dvec[1], s.dvec[0]) for s in (sample_slice_hyper(rng, 2) for _ in range(10_000))]
        )
        counts, _ = np.histogram(angles, bins=16, range=(-np.pi, np.pi))
        assert stats.chisquare(counts).pvalue > 0.01


class TestProjection:
    def test_sphere_fixed_points(self, rng):
        s = sample_slice_sphere(rng, 3)
        assert np.allclose(project_sphere(s, s.e1), s.e1, atol=1e-12)
        n = np.linalg.svd(np.stack([s.e1, s.e2]))[2][-1]  # unit normal to the plane
        x = (s.e1 + n) / np.sqrt(2.0)
        assert np.allclose(project_sphere(s, x), s.e1, atol=1e-12)

    def test_sphere_idempotent(self, rng):
        s = sample_slice_sphere(rng, 4)
        x = random_sphere_points(rng, 4, 50)
        p = project_sphere(s, x)
        assert np.allclose(project_sphere(s, p), p, atol=1e-12)

    def test_sphere_orthogonal_raises(self, rng):
        s = sample_slice_sphere(rng, 2)
        n = np.cross(s.e1, s.e2)
        with pytest.raises(OrthogonalToSliceError):
            project_sphere(s, n)

    def test_sphere_commutes_with_negation(self, rng):
        s = sample_slice_sphere(rng, 3)
        x = random_sphere_points(rng, 3, 20)
        assert np.allclose(project_sphere(s, -x), -project_sphere(s, x), atol=1e-12)

    def test_hyper_origin_fixed(self, rng):
        s = sample_slice_hyper(rng, 2)
        o = manifold.hyper_origin(2)
        assert np.allclose(project_hyper(s, o), o, atol=1e-12)

    def test_hyper_idempotent_and_on_manifold(self, rng):
        s = sample_slice_hyper(rng, 3)
        x = random_hyper_points(rng, 3, 50)
        p = project_hyper(s, x)
        assert np.max(np.abs(manifold.lorentz_dot(p, p) + 1.0)) < 1e-10
        assert np.allclose(project_hyper(s, p), p, atol=1e-12)
        # no component outside span{dvec, x_O}
        res = p - (p @ s.dvec)[:, None] * s.dvec
        res[:, -1] = 0.0
        assert np.max(np.abs(res)) < 1e-10

    def test_hyper_on_slice_identity(self, rng):
        s = sample_slice_hyper(rng, 2)
        t = rng.uniform(-2, 2, size=7)
        pts = manifold.exp_hyper(manifold.hyper_origin(2), t[:, None] * s.dvec)
        assert np.allclose(project_hyper(s, pts), pts, atol=1e-12)


class TestCoordinates:
    def test_sphere_reference_points(self, rng):
        s = sample_slice_sphere(rng, 2)
        assert coord_sphere(s, s.e1) == pytest.approx(0.5)
        assert coord_sphere(s, s.e2) == pytest.approx(0.75)
        assert coord_sphere(s, -s.e1) == pytest.approx(0.0)  # 1.0 wraps

    def test_sphere_range_and_bijection(self, rng):
        s = sample_slice_sphere(rng, 2)
        ang = np.linspace(0, 2 * np.pi, 720, endpoint=False)
        circle = np.cos(ang)[:, None] * s.e1 + np.sin(ang)[:, None] * s.e2
        t = coord_sphere(s, circle)
        assert np.all((t >= 0.0) & (t < 1.0))
        assert len(np.unique(t)) == 720
        # monotone up to a single wrap
        jumps = np.diff(t)
        assert np.sum(jumps < 0) <= 1

    def test_hyper_signed_distance(self, rng):
        s = sample_slice_hyper(rng, 2)
        o = manifold.hyper_origin(2)
        assert coord_hyper(s, o) == pytest.approx(0.0)
        p = manifold.exp_hyper(o, 0.7 * s.dvec)
        assert coord_hyper(s, p) == pytest.approx(0.7, abs=1e-12)
        q = manifold.exp_hyper(o, -0.7 * s.dvec)
        assert coord_hyper(s, q) == pytest.approx(-0.7, abs=1e-12)

    def test_hyper_monotone(self, rng):
        s = sample_slice_hyper(rng, 2)
        t = np.linspace(-3, 3, 101)
        pts = manifold.exp_hyper(manifold.hyper_origin(2), t[:, None] * s.dvec)
        coords = coord_hyper(s, pts)
        assert np.all(np.diff(coords) > 0)
        assert np.allclose(coords, t, atol=1e-9)
