"""Procedural test meshes: closed, manifold, oriented."""

import numpy as np
from skimage import measure as skmeasure

from slicedblue.mesh import TriMesh


def tetrahedron() -> TriMesh:
    v = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    )
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriMesh(v, f)


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> TriMesh:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    for _ in range(subdivisions):
        cache = {}
        nv = list(map(tuple, v))
        nf = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = np.array(nv[a]) + np.array(nv[b])
                m /= np.linalg.norm(m)
                cache[key] = len(nv)
                nv.append(tuple(m))
            return cache[key]

        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        v = np.array(nv)
        f = np.array(nf)
    return TriMesh(radius * v, f)


def ellipsoid(subdivisions: int = 3, scales=(1.0, 0.7, 0.45)) -> TriMesh:
    m = icosphere(subdivisions)
    return TriMesh(m.vertices * np.asarray(scales), m.faces)


def torus(n_major: int = 24, n_minor: int = 12, R: float = 1.0, r: float = 0.35) -> TriMesh:
    iu = np.arange(n_major)
    iv = np.arange(n_minor)
    uu, vv = np.meshgrid(2 * np.pi * iu / n_major, 2 * np.pi * iv / n_minor, indexing="ij")
    x = (R + r * np.cos(vv)) * np.cos(uu)
    y = (R + r * np.cos(vv)) * np.sin(uu)
    z = r * np.sin(vv)
    verts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)

    def vid(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces += [[a, b, c], [a, c, d]]
    return TriMesh(verts, np.array(faces))


def _marching_mesh(fn, bounds, res, level=0.0) -> TriMesh:
    axes = [np.linspace(lo, hi, res) for lo, hi in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vol = fn(grid[..., 0], grid[..., 1], grid[..., 2])
    spacing = [(hi - lo) / (res - 1) for lo, hi in bounds]
    verts, faces, _, _ = skmeasure.marching_cubes(vol, level=level, spacing=spacing)
    verts += np.array([lo for lo, _ in bounds])
    # weld duplicated vertices, drop degenerate faces
    verts = np.round(verts, 9)
    uniq, inv = np.unique(verts, axis=0, return_inverse=True)
    faces = inv[faces]
    keep = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 2] != faces[:, 0])
    )
    mesh = TriMesh(uniq, faces[keep])
    mesh.validate()
    return mesh


def genus2(res: int = 72) -> TriMesh:
    """Tube around a figure-eight (lemniscate) curve: genus 2."""

    def fn(x, y, z):
        g = (x * x + y * y) ** 2 - x * x + y * y
        return g * g + 6.0 * z * z - 0.02

    return _marching_mesh(fn, [(-1.3, 1.3), (-0.8, 0.8), (-0.3, 0.3)], res)


def genus4(res: int = 48) -> TriMesh:
    """Flattened ellipsoid with four smoothly blended through-holes: genus 4."""
    holes = [(0.45, 0.45), (-0.45, 0.45), (-0.45, -0.45), (0.45, -0.45)]

    def smax(f, g, k=0.08):
        return 0.5 * (f + g + np.sqrt((f - g) ** 2 + k * k))

    def fn(x, y, z):
        out = x * x + y * y + (z / 0.3) ** 2 - 1.0
        for hx, hy in holes:
            out = smax(out, 0.22**2 - (x - hx) ** 2 - (y - hy) ** 2)
        return out

    return _marching_mesh(fn, [(-1.15, 1.15), (-1.15, 1.15), (-0.45, 0.45)], res)
