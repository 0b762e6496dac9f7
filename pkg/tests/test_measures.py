import numpy as np
import pytest

from slicedblue import manifold
from slicedblue.measures import (
    DiscreteMeasure,
    MixtureSpec,
    sphere_cap,
    sphere_mixture,
    subsample,
    symmetrize_antipodal,
    uniform_hyper_cap,
    uniform_sphere,
)


class TestDiscreteMeasure:
    def test_validate(self, rng):
        m = DiscreteMeasure(uniform_sphere(rng, 2, 10), "sphere")
        m.validate()
        assert len(m) == 10 and m.dim == 2
        with pytest.raises(ValueError):
            DiscreteMeasure(np.eye(3), "nowhere")
        off = DiscreteMeasure(1.5 * uniform_sphere(rng, 2, 3), "sphere")
        with pytest.raises(ValueError):
            off.validate()


class TestSubsample:
    def test_full_draw_is_permutation(self, rng):
        nu = DiscreteMeasure(uniform_sphere(rng, 2, 12), "sphere")
        sub = subsample(nu, 12, rng)
        assert sorted(map(tuple, sub.atoms)) == sorted(map(tuple, nu.atoms))

    def test_single(self, rng):
        nu = DiscreteMeasure(uniform_sphere(rng, 2, 5), "sphere")
        sub = subsample(nu, 1, rng)
        assert any(np.allclose(sub.atoms[0], a) for a in nu.atoms)

    def test_too_many(self, rng):
        nu = DiscreteMeasure(uniform_sphere(rng, 2, 5), "sphere")
        with pytest.raises(ValueError):
            subsample(nu, 6, rng)

    def test_uniform_frequency(self):
        rng = np.random.default_rng(0)
        nu = DiscreteMeasure(uniform_sphere(rng, 2, 10), "sphere")
        counts = np.zeros(10)
        reps = 10_000
        for _ in range(reps):
            idx = subsample(nu, 3, rng).atoms
            for a in idx:
                counts[np.argmin(np.linalg.norm(nu.atoms - a, axis=1))] += 1
        freq = counts / reps
        assert np.all(np.abs(freq - 0.3) < 0.02)


class TestGenerators:
    def test_uniform_sphere_on_manifold(self, rng):
        pts = uniform_sphere(rng, 5, 100)
        manifold.check_sphere(pts)

    def test_uniform_hyper_cap(self, rng):
        pts = uniform_hyper_cap(rng, 2, 1.5, 500)
        manifold.check_hyper(pts)
        assert np.all(pts[:, -1] <= 1.5 + 1e-12)
        # area element is uniform in cosh(r): time coords ~ U[1, 1.5]
        from scipy import stats

        assert stats.kstest(pts[:, -1], "uniform", args=(1.0, 0.5)).pvalue > 0.01

    def test_uniform_hyper_cap_higher_dim(self, rng):
        pts = uniform_hyper_cap(rng, 4, 2.0, 200)
        manifold.check_hyper(pts)
        assert np.all(pts[:, -1] <= 2.0 + 1e-9)

    def test_sphere_cap(self, rng):
        c = np.array([0.0, 1.0, 0.0])
        pts = sphere_cap(rng, c, 0.4, 300)
        manifold.check_sphere(pts)
        assert np.all(manifold.dist_sphere(pts, c) <= 0.4 + 1e-9)

    def test_mixture_normalized(self, rng):
        pts = sphere_mixture(rng, 400, MixtureSpec())
        manifold.check_sphere(pts)

    def test_symmetrize(self, rng):
        pts = uniform_sphere(rng, 2, 7)
        sym = symmetrize_antipodal(pts)
        assert sym.shape == (14, 3)
        assert np.allclose(sym[:7], -sym[7:])
        assert np.linalg.norm(sym.mean(axis=0)) < 1e-15
