"""Discrete measures on the supported spaces, plus target/baseline generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import manifold

SPACES = ("sphere", "hyperbolic", "projective")


@dataclass
class DiscreteMeasure:
    """Ordered list of manifold atoms with uniform weights."""

    atoms: np.ndarray  # (m, d+1)
    space: str

    def __post_init__(self) -> None:
        self.atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        if self.space not in SPACES:
            raise ValueError(f"unknown space {self.space!r}")

    def __len__(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1] - 1

    def validate(self, tol: float = 1e-6) -> None:
        if len(self) < 1:
            raise ValueError("measure needs at least one atom")
        if self.space == "hyperbolic":
            manifold.check_hyper(self.atoms, tol)
        else:
            manifold.check_sphere(self.atoms, tol)


def subsample(nu: DiscreteMeasure, k: int, rng: np.random.Generator) -> DiscreteMeasure:
    """k atoms drawn uniformly without replacement; a fresh draw per call."""
    m = len(nu)
    if k > m:
        raise ValueError(f"cannot subsample {k} atoms from {m}")
    idx = rng.choice(m, size=k, replace=False)
    return DiscreteMeasure(nu.atoms[idx], nu.space)


def uniform_sphere(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    """n uniform points on S^d (normalized Gaussians)."""
    g = rng.standard_normal((n, d + 1))
    return manifold.to_sphere(g)


def uniform_hyper_cap(
    rng: np.random.Generator, d: int, tmax: float, n: int
) -> np.ndarray:
    """n uniform points (w.r.t. hyperbolic volume) on {x in H^d : x_time <= tmax}.

    Geodesic polar sampling: radius density sinh^{d-1}(r) up to arccosh(tmax),
    direction uniform on S^{d-1}.
    """
    if tmax <= 1.0:
        raise ValueError("tmax must exceed 1")
    rmax = float(np.arccosh(tmax))
    if d == 2:
        # area element sinh(r) dr: cosh(r) ~ U[1, tmax]
        r = np.arccosh(rng.uniform(1.0, tmax, size=n))
    else:
        grid = np.linspace(0.0, rmax, 4096)
        pdf = np.sinh(grid) ** (d - 1)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        r = np.interp(rng.random(n), cdf, grid)
    dirs = manifold.to_sphere(rng.standard_normal((n, d)))
    pts = np.empty((n, d + 1))
    pts[:, :d] = np.sinh(r)[:, None] * dirs
    pts[:, d] = np.cosh(r)
    return pts


def _pole_to(center: np.ndarray, local: np.ndarray) -> np.ndarray:
    """Rotate points given in pole-centered coordinates so the pole lands on center."""
    z = np.array([0.0, 0.0, 1.0])
    if center @ z < -1.0 + 1e-12:
        return -local
    return manifold.rotate_along_slice_sphere(z, center, local)


def sphere_cap(
    rng: np.random.Generator, center: np.ndarray, angle: float, n: int
) -> np.ndarray:
    """n uniform points in the geodesic cap of the given angular radius on S^2."""
    center = manifold.to_sphere(np.asarray(center, float))
    if center.shape != (3,):
        raise ValueError("cap generator is S^2 only")
    cos_t = rng.uniform(np.cos(angle), 1.0, size=n)
    phi = rng.uniform(0.0, 2 * np.pi, size=n)
    sin_t = np.sqrt(1.0 - cos_t**2)
    local = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=1)
    return _pole_to(center, local)


def _vmf_s2(rng: np.random.Generator, mu: np.ndarray, kappa: float, n: int) -> np.ndarray:
    """von Mises-Fisher draws on S^2 (exact inverse-cdf for the colatitude)."""
    u = rng.random(n)
    w = 1.0 + np.log(u + (1.0 - u) * np.exp(-2.0 * kappa)) / kappa
    phi = rng.uniform(0.0, 2 * np.pi, size=n)
    s = np.sqrt(np.maximum(1.0 - w * w, 0.0))
    local = np.stack([s * np.cos(phi), s * np.sin(phi), w], axis=1)
    return _pole_to(manifold.to_sphere(mu), local)


@dataclass(frozen=True)
class MixtureSpec:
    """Default three-lobe mixture on S^2 used by tests and the CLI."""

    centers: np.ndarray = field(
        default_factory=lambda: manifold.to_sphere(
            np.array([[1.0, 0.2, 0.1], [-0.5, 1.0, 0.3], [0.1, -0.4, -1.0]])
        )
    )
    kappas: tuple = (12.0, 24.0, 6.0)
    weights: tuple = (0.5, 0.3, 0.2)


def sphere_mixture(rng: np.random.Generator, n: int, spec: MixtureSpec | None = None) -> np.ndarray:
    """n draws from a vMF mixture on S^2 (antipodally asymmetric by design)."""
    spec = spec or MixtureSpec()
    counts = rng.multinomial(n, spec.weights)
    parts = [
        _vmf_s2(rng, spec.centers[i], spec.kappas[i], counts[i])
        for i in range(len(spec.weights))
    ]
    pts = np.concatenate(parts, axis=0)
    return pts[rng.permutation(n)]


def symmetrize_antipodal(points: np.ndarray) -> np.ndarray:
    """Double each atom with its antipode (projective target ingestion)."""
    points = np.atleast_2d(np.asarray(points, float))
    return np.concatenate([points, -points], axis=0)
