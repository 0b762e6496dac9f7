"""Axis-aligned BVH over triangles with batched ray queries.

Rays all start at a common origin (the layout domains are star-shaped around
it), so traversal is vectorized: nodes are visited depth-first, each against
the subset of rays whose slab test passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4


@dataclass
class Bvh:
    lo: np.ndarray  # (nodes, 3)
    hi: np.ndarray  # (nodes, 3)
    left: np.ndarray  # child index, -1 for leaves
    right: np.ndarray
    start: np.ndarray  # leaf range into order
    count: np.ndarray
    order: np.ndarray  # triangle permutation
    tris: np.ndarray  # (ntri, 3, 3), original order


def build_bvh(tris: np.ndarray) -> Bvh:
    """Median-split BVH over (n, 3, 3) triangles."""
    tris = np.asarray(tris, float)
    n = tris.shape[0]
    if n == 0:
        raise ValueError("no triangles")
    centroids = tris.mean(axis=1)
    tlo = tris.min(axis=1)
    thi = tris.max(axis=1)

    order = np.arange(n)
    lo, hi, left, right, start, count = [], [], [], [], [], []

    def build(a: int, b: int) -> int:
        node = len(lo)
        idx = order[a:b]
        lo.append(tlo[idx].min(axis=0))
        hi.append(thi[idx].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(a)
        count.append(b - a)
        if b - a > LEAF_SIZE:
            c = centroids[idx]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            mid = (b - a) // 2
            order[a:b] = idx[np.argpartition(c[:, axis], mid)]
            start[node] = -1
            count[node] = 0
            left[node] = build(a, a + mid)
            right[node] = build(a + mid, b)
        return node

    import sys

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 10_000))
    try:
        build(0, n)
    finally:
        sys.setrecursionlimit(old_limit)
    return Bvh(
        np.array(lo), np.array(hi), np.array(left), np.array(right),
        np.array(start), np.array(count), order, tris,
    )


def _ray_triangles(dirs: np.ndarray, tris: np.ndarray):
    """Moller-Trumbore for origin rays: (r, 3) dirs vs (m, 3, 3) tris.

    Returns (t, u, v, hit), each (r, m); barycentric coordinates follow the
    vertex order as (1-u-v, u, v).
    """
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    p = np.cross(dirs[:, None, :], e2[None])  # (r, m, 3)
    det = np.einsum("mk,rmk->rm", e1, p)
    ok = np.abs(det) > 1e-12
    inv = np.where(ok, 1.0, 0.0) / np.where(ok, det, 1.0)
    u = -np.einsum("mk,rmk->rm", v0, p) * inv  # tvec = origin - v0 = -v0
    q = np.cross(-v0, e1)  # (m, 3)
    v = np.einsum("rk,mk->rm", dirs, q) * inv
    t = np.einsum("mk,mk->m", e2, q)[None] * inv
    eps = 1e-10
    hit = ok & (u >= -eps) & (v >= -eps) & (u + v <= 1 + eps) & (t > 1e-12)
    return t, u, v, hit


def ray_hits(bvh: Bvh, dirs: np.ndarray):
    """Closest intersection of origin rays with the BVH triangles.

    Returns (face_idx, bary): face index (-1 on miss) and (r, 3) barycentric
    coordinates of the hit in the face's vertex order.
    """
    dirs = np.atleast_2d(np.asarray(dirs, float))
    r = dirs.shape[0]
    best_t = np.full(r, np.inf)
    best_face = np.full(r, -1, dtype=np.int64)
    best_uv = np.zeros((r, 2))

    with np.errstate(divide="ignore"):
        inv_dirs = 1.0 / dirs

    stack = [(0, np.arange(r))]
    while stack:
        node, active = stack.pop()
        inv = inv_dirs[active]
        t1 = bvh.lo[node][None] * inv
        t2 = bvh.hi[node][None] * inv
        tmin = np.fmin(t1, t2).max(axis=1)
        tmax = np.fmax(t1, t2).min(axis=1)
        keep = (tmax >= np.maximum(tmin, 0.0)) & (tmin < best_t[active])
        active = active[keep]
        if active.size == 0:
            continue
        if bvh.left[node] < 0:
            ids = bvh.order[bvh.start[node] : bvh.start[node] + bvh.count[node]]
            t, u, v, hit = _ray_triangles(dirs[active], bvh.tris[ids])
            t = np.where(hit, t, np.inf)
            k = np.argmin(t, axis=1)
            rows = np.arange(active.size)
            better = t[rows, k] < best_t[active]
            upd = active[better]
            best_t[upd] = t[rows, k][better]
            best_face[upd] = ids[k[better]]
            best_uv[upd, 0] = u[rows, k][better]
            best_uv[upd, 1] = v[rows, k][better]
        else:
            stack.append((int(bvh.right[node]), active))
            stack.append((int(bvh.left[node]), active))

    bary = np.stack([1.0 - best_uv[:, 0] - best_uv[:, 1], best_uv[:, 0], best_uv[:, 1]], axis=1)
    bary[best_face < 0] = 0.0
    return best_face, np.clip(bary, 0.0, 1.0)


def ray_hits_brute(tris: np.ndarray, dirs: np.ndarray):
    """Reference all-pairs intersector (test oracle for ray_hits)."""
    dirs = np.atleast_2d(np.asarray(dirs, float))
    t, u, v, hit = _ray_triangles(dirs, np.asarray(tris, float))
    t = np.where(hit, t, np.inf)
    k = np.argmin(t, axis=1)
    rows = np.arange(dirs.shape[0])
    face = np.where(np.isfinite(t[rows, k]), k, -1)
    bary = np.stack([1.0 - u[rows, k] - v[rows, k], u[rows, k], v[rows, k]], axis=1)
    bary[face < 0] = 0.0
    return face, np.clip(bary, 0.0, 1.0)
