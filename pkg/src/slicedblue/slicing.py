"""Random geodesic slices, projections onto them, and 1D slice coordinates.

A spherical slice is a great circle spanned by an orthonormal pair {e1, e2};
a hyperbolic slice is the origin geodesic generated by a unit spatial
direction dvec (last coordinate zero) together with the hyperboloid origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import dist_hyper, hyper_origin, lorentz_dot

ORTHOGONAL_EPS = 1e-12


class OrthogonalToSliceError(ValueError):
    """A point projects to (numerically) zero; the caller should re-draw the slice."""


@dataclass(frozen=True)
class SphereSlice:
    e1: np.ndarray
    e2: np.ndarray

    def validate(self, tol: float = 1e-12) -> None:
        if (
            abs(np.linalg.norm(self.e1) - 1.0) > tol
            or abs(np.linalg.norm(self.e2) - 1.0) > tol
            or abs(float(self.e1 @ self.e2)) > tol
        ):
            raise ValueError("slice basis not orthonormal")


@dataclass(frozen=True)
class HyperSlice:
    dvec: np.ndarray

    def validate(self, tol: float = 1e-12) -> None:
        if self.dvec[-1] != 0.0 or abs(np.linalg.norm(self.dvec) - 1.0) > tol:
            raise ValueError("slice direction not a unit spatial vector")


def sample_slice_sphere(rng: np.random.Generator, d: int) -> SphereSlice:
    """Draw a uniform great-circle slice of S^d.

    Two iid standard Gaussian vectors in R^{d+1}, orthonormalized by
    Gram-Schmidt; re-drawn on near-collinearity.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    while True:
        g = rng.standard_normal((2, d + 1))
        e1 = g[0] / np.linalg.norm(g[0])
        r = g[1] - (g[1] @ e1) * e1
        nrm = np.linalg.norm(r)
        if nrm >= 1e-9:
            return SphereSlice(e1, r / nrm)


def sample_slice_hyper(rng: np.random.Generator, d: int) -> HyperSlice:
    """Draw a uniform origin-geodesic slice of H^d (unit direction in x_O-perp)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    while True:
        g = rng.standard_normal(d)
        nrm = np.linalg.norm(g)
        if nrm >= 1e-9:
            dvec = np.zeros(d + 1)
            dvec[:-1] = g / nrm
            return HyperSlice(dvec)


def project_sphere(s: SphereSlice, x: np.ndarray) -> np.ndarray:
    """Project points onto the slice's great circle (normalize the in-plane part)."""
    x = np.asarray(x, float)
    a = x @ s.e1
    b = x @ s.e2
    nrm = np.hypot(a, b)
    if np.any(nrm < ORTHOGONAL_EPS):
        raise OrthogonalToSliceError("point orthogonal to slice")
    return (a / nrm)[..., None] * s.e1 + (b / nrm)[..., None] * s.e2


def project_hyper(s: HyperSlice, x: np.ndarray) -> np.ndarray:
    """Project points onto the slice geodesic and Lorentz-normalize.

    The in-plane part always has time component >= 1, so the result is
    never lightlike.
    """
    x = np.asarray(x, float)
    a = x @ s.dvec
    t = x[..., -1]
    pi = a[..., None] * s.dvec
    pi[..., -1] = t
    q = np.sqrt(t * t - a * a)
    return pi / q[..., None]


def coord_sphere(s: SphereSlice, p: np.ndarray) -> np.ndarray:
    """Periodic coordinate in [0,1) of an on-slice point: (pi + atan2)/2pi.

    The seam value 1.0 (p = -e1 exactly) wraps to 0.0 so the half-open
    interval expected by the circular 1D solver holds.
    """
    p = np.asarray(p, float)
    t = (np.pi + np.arctan2(p @ s.e2, p @ s.e1)) / (2.0 * np.pi)
    return np.where(t >= 1.0, 0.0, t)


def coord_hyper(s: HyperSlice, p: np.ndarray) -> np.ndarray:
    """Signed geodesic distance of an on-slice point to the origin."""
    p = np.asarray(p, float)
    d = dist_hyper(hyper_origin(s.dvec.shape[0] - 1), p)
    return np.sign(p @ s.dvec) * d


def slice_coords_sphere(s: SphereSlice, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Projection and coordinate in one pass (the coordinate only needs the
    two inner products, which projection computes anyway)."""
    proj = project_sphere(s, x)
    return proj, coord_sphere(s, proj)


def slice_coords_hyper(s: HyperSlice, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    proj = project_hyper(s, x)
    return proj, coord_hyper(s, proj)
