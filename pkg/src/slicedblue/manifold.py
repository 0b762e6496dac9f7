"""Closed-form geometry of the unit sphere S^d and the Lorentz hyperboloid H^d.

Points live in R^{d+1}. Spherical points have Euclidean norm 1; hyperbolic
points sit on the upper hyperboloid sheet, <x,x>_L = -1 with positive last
coordinate. All functions are vectorized over leading axes and pure.
"""

from __future__ import annotations

import numpy as np

# Below this squared-norm threshold a tangent vector is treated as zero,
# avoiding 0/0 in sin(|v|)/|v| and sinh(|v|)/|v|.
ZERO_TANGENT = 1e-14

SPHERE_TOL = 1e-9
HYPER_TOL = 1e-9


class AntipodalError(ValueError):
    """Log map requested between antipodal sphere points."""


def lorentz_dot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lorentzian inner product: sum of spatial products minus the time product."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    if x.shape[-1] < 2:
        raise ValueError("Lorentz product needs ambient dimension >= 2")
    xy = x * y
    return np.sum(xy[..., :-1], axis=-1) - xy[..., -1]


def hyper_origin(d: int) -> np.ndarray:
    """Origin of H^d: (0, ..., 0, 1)."""
    x = np.zeros(d + 1)
    x[-1] = 1.0
    return x


def check_sphere(x: np.ndarray, tol: float = SPHERE_TOL) -> None:
    err = np.abs(np.linalg.norm(np.asarray(x, float), axis=-1) - 1.0)
    if np.any(err > tol):
        raise ValueError(f"point off S^d by {err.max():.3e} (tol {tol:.0e})")


def check_hyper(x: np.ndarray, tol: float = HYPER_TOL) -> None:
    x = np.asarray(x, float)
    err = np.abs(lorentz_dot(x, x) + 1.0)
    if np.any(err > tol):
        raise ValueError(f"point off H^d by {err.max():.3e} (tol {tol:.0e})")
    if np.any(x[..., -1] < 1.0 - tol):
        raise ValueError("point on lower hyperboloid sheet")


def to_sphere(x: np.ndarray) -> np.ndarray:
    """Renormalize onto the unit sphere."""
    x = np.asarray(x, float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def to_hyperboloid(x: np.ndarray) -> np.ndarray:
    """Renormalize onto the upper hyperboloid sheet (x must be timelike)."""
    x = np.asarray(x, float)
    q = -lorentz_dot(x, x)
    return x / np.sqrt(q)[..., None]


def dist_sphere(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Geodesic distance on S^d: the angle between the two unit vectors.

    Evaluated as 2 atan2(|x-y|, |x+y|), which equals arccos(<x,y>) for unit
    vectors but stays well conditioned at both ends of [0, pi].
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return 2.0 * np.arctan2(
        np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1)
    )


def dist_hyper(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Geodesic distance on H^d: arccosh(-<x,y>_L).

    Evaluated as 2 asinh(|x-y|_L / 2) (the Lorentz chord is spacelike), which
    is the same function but well conditioned near coincident points.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    q = np.maximum(lorentz_dot(x - y, x - y), 0.0)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(q))


def tangent_sphere(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project v onto the tangent space of S^d at x."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    return v - np.sum(v * x, axis=-1, keepdims=True) * x


def tangent_hyper(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project v onto the tangent space of H^d at x (Lorentz-orthogonally)."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    return v + lorentz_dot(v, x)[..., None] * x


def exp_sphere(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """exp_x(v) = cos(|v|) x + sin(|v|) v/|v|, renormalized onto S^d."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    small = nrm < ZERO_TANGENT
    safe = np.where(small, 1.0, nrm)
    out = np.cos(nrm) * x + np.sin(nrm) * (v / safe)
    out = np.where(small, np.broadcast_to(x, out.shape), out)
    return to_sphere(out)


def log_sphere(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Inverse of exp_x: tangent vector at x of length d_S(x,y) pointing to y."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    dist = dist_sphere(x, y)[..., None]
    u = tangent_sphere(x, y - x)
    nrm = np.linalg.norm(u, axis=-1, keepdims=True)
    degenerate = nrm < ZERO_TANGENT
    if np.any(degenerate & (dist > np.pi / 2)):
        raise AntipodalError("antipodal log undefined")
    safe = np.where(degenerate, 1.0, nrm)
    return np.where(degenerate, 0.0, dist * u / safe)


def exp_hyper(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """exp_x(v) = cosh(|v|_L) x + sinh(|v|_L) v/|v|_L, renormalized onto H^d."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    sq = np.maximum(lorentz_dot(v, v), 0.0)[..., None]
    nrm = np.sqrt(sq)
    small = nrm < ZERO_TANGENT
    safe = np.where(small, 1.0, nrm)
    out = np.cosh(nrm) * x + np.sinh(nrm) * (v / safe)
    out = np.where(small, np.broadcast_to(x, out.shape), out)
    return to_hyperboloid(out)


def log_hyper(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Inverse of exp_x on H^d; zero vector in the x == y limit."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    c = lorentz_dot(x, y)[..., None]
    disc = c * c - 1.0
    degenerate = disc < 1e-18
    safe = np.where(degenerate, 1.0, disc)
    scale = np.arccosh(np.maximum(-c, 1.0)) / np.sqrt(safe)
    return np.where(degenerate, 0.0, scale * (y + c * x))


def rotate_along_slice_sphere(
    x: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    return_degenerate: bool = False,
):
    """Rotation of S^d taking x to y, applied to w.

    Decomposes w in the orthonormal basis {x, y~} (y~ the Gram-Schmidt residual
    of y against x), rotates the in-plane component by the angle d_S(x,y), and
    leaves the orthogonal complement unchanged. Degenerate pairs (y = ±x, no
    unique span) fall back to the identity and are flagged.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    w = np.asarray(w, float)
    c = np.sum(x * y, axis=-1, keepdims=True)
    yt = y - c * x
    nrm = np.linalg.norm(yt, axis=-1, keepdims=True)
    degenerate = nrm < ZERO_TANGENT
    yt = yt / np.where(degenerate, 1.0, nrm)
    phi = dist_sphere(x, y)[..., None]
    wx = np.sum(w * x, axis=-1, keepdims=True)
    wy = np.sum(w * yt, axis=-1, keepdims=True)
    perp = w - wx * x - wy * yt
    out = perp + x * (np.cos(phi) * wx - np.sin(phi) * wy) + yt * (
        np.sin(phi) * wx + np.cos(phi) * wy
    )
    out = np.where(degenerate, w, out)
    if return_degenerate:
        return out, degenerate[..., 0]
    return out


def rotate_along_slice_hyper(
    x: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    return_degenerate: bool = False,
):
    """Hyperbolic rotation of H^d taking x to y along their slice, applied to w.

    The rotation acts in span{x_O, dvec} with dvec the normalized spatial part
    of y - x, by the angle d_H(x,y); it preserves the Lorentz form and fixes
    the complement. Maps x to y exactly when both lie on a common geodesic
    through the origin (the sampler's use case). Degenerate pairs (no spatial
    direction) fall back to the identity.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    w = np.asarray(w, float)
    dvec = (y - x).copy()
    dvec[..., -1] = 0.0
    nrm = np.linalg.norm(dvec, axis=-1, keepdims=True)
    degenerate = nrm < ZERO_TANGENT
    dvec = dvec / np.where(degenerate, 1.0, nrm)
    phi = dist_hyper(x, y)[..., None]
    wd = np.sum(w * dvec, axis=-1, keepdims=True)
    w0 = w[..., -1:]
    perp = w - wd * dvec
    perp = perp.copy()
    perp[..., -1] = 0.0
    out = perp + dvec * (np.cosh(phi) * wd + np.sinh(phi) * w0)
    out[..., -1] += np.sinh(phi[..., 0]) * wd[..., 0] + np.cosh(phi[..., 0]) * w0[..., 0]
    out = np.where(degenerate, w, out)
    if return_degenerate:
        return out, degenerate[..., 0]
    return out
