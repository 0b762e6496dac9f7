"""Intrinsic triangle-mesh sampling.

A closed oriented mesh is embedded into a constant-curvature domain (globally
onto S^2 for genus 0, locally onto H^2 patches for genus >= 2 via conformal
factors from a hyperbolic Yamabe flow), sampled there with the sliced
transport optimizer, and the samples are pulled back through barycentric
coordinates with origin-ray face lookup.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.linalg import spsolve

from . import bvh as bvhlib
from . import manifold
from .measures import DiscreteMeasure
from .sampler import SamplerConfig, nesots_run


class MeshError(ValueError):
    pass


@dataclass
class TriMesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 3) int

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be (V, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be triangles")
        self._edges = None
        self._face_edges = None
        self._vertex_faces = None
        self._face_neighbors = None

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def edges(self) -> np.ndarray:
        """(E, 2) sorted vertex pairs."""
        if self._edges is None:
            self._build_edges()
        return self._edges

    @property
    def face_edges(self) -> np.ndarray:
        """(F, 3) edge index opposite each corner: [e(v1,v2), e(v2,v0), e(v0,v1)]."""
        if self._face_edges is None:
            self._build_edges()
        return self._face_edges

    def _build_edges(self):
        f = self.faces
        pairs = np.concatenate([f[:, [1, 2]], f[:, [2, 0]], f[:, [0, 1]]])
        pairs = np.sort(pairs, axis=1)
        uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
        self._edges = uniq
        self._face_edges = inv.reshape(3, -1).T

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.edges.shape[0] + self.n_faces

    @property
    def genus(self) -> int:
        chi = self.euler_characteristic
        if chi % 2 != 0:
            raise MeshError(f"odd Euler characteristic {chi}")
        return (2 - chi) // 2

    def validate(self) -> None:
        """Closed, manifold, consistently oriented triangle mesh."""
        if self.faces.min() < 0 or self.faces.max() >= self.n_vertices:
            raise MeshError("face index out of range")
        if np.any(
            (self.faces[:, 0] == self.faces[:, 1])
            | (self.faces[:, 1] == self.faces[:, 2])
            | (self.faces[:, 2] == self.faces[:, 0])
        ):
            raise MeshError("degenerate face (repeated vertex)")
        f = self.faces
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        key = directed[:, 0] * self.n_vertices + directed[:, 1]
        if np.unique(key).size != key.size:
            raise MeshError("non-manifold or inconsistently oriented edge")
        und = np.sort(directed, axis=1)
        ukey = und[:, 0] * self.n_vertices + und[:, 1]
        _, counts = np.unique(ukey, return_counts=True)
        if np.any(counts == 1):
            raise MeshError("open boundary edge")
        if np.any(counts != 2):
            raise MeshError("non-manifold edge (more than two incident faces)")

    def vertex_faces(self) -> list:
        if self._vertex_faces is None:
            vf = [[] for _ in range(self.n_vertices)]
            for fi, (a, b, c) in enumerate(self.faces):
                vf[a].append(fi)
                vf[b].append(fi)
                vf[c].append(fi)
            self._vertex_faces = vf
        return self._vertex_faces

    def face_neighbors(self) -> list:
        """Faces sharing an edge with each face."""
        if self._face_neighbors is None:
            edge_faces = {}
            for fi in range(self.n_faces):
                for e in self.face_edges[fi]:
                    edge_faces.setdefault(int(e), []).append(fi)
            nbrs = [[] for _ in range(self.n_faces)]
            for fs in edge_faces.values():
                for a in fs:
                    for b in fs:
                        if a != b:
                            nbrs[a].append(b)
            self._face_neighbors = nbrs
        return self._face_neighbors

    def edge_lengths(self) -> np.ndarray:
        ve = self.vertices[self.edges]
        return np.linalg.norm(ve[:, 0] - ve[:, 1], axis=1)

    def face_areas(self) -> np.ndarray:
        v = self.vertices[self.faces]
        return 0.5 * np.linalg.norm(
            np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1
        )

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.vertices).tobytes())
        h.update(np.ascontiguousarray(self.faces).tobytes())
        return h.hexdigest()


def load_mesh(path: str) -> TriMesh:
    """Read and validate an OBJ or ascii-PLY triangle mesh."""
    path = str(path)
    if path.lower().endswith(".obj"):
        mesh = _load_obj(path)
    elif path.lower().endswith(".ply"):
        mesh = _load_ply(path)
    else:
        raise MeshError(f"unsupported mesh format: {path}")
    mesh.validate()
    return mesh


def _load_obj(path: str) -> TriMesh:
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshError("non-triangular face in OBJ")
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    if not verts or not faces:
        raise MeshError("empty OBJ")
    return TriMesh(np.array(verts), np.array(faces))


def _load_ply(path: str) -> TriMesh:
    with open(path, "rb") as fh:
        header = []
        while True:
            line = fh.readline().decode("ascii").strip()
            header.append(line)
            if line == "end_header":
                break
        if not any("format ascii" in h for h in header):
            raise MeshError("only ascii PLY is supported")
        nv = nf = 0
        for h in header:
            if h.startswith("element vertex"):
                nv = int(h.split()[-1])
            elif h.startswith("element face"):
                nf = int(h.split()[-1])
        body = fh.read().decode("ascii").split("\n")
    verts = [[float(x) for x in body[i].split()[:3]] for i in range(nv)]
    faces = []
    for i in range(nv, nv + nf):
        parts = [int(x) for x in body[i].split()]
        if parts[0] != 3:
            raise MeshError("non-triangular face in PLY")
        faces.append(parts[1:4])
    return TriMesh(np.array(verts), np.array(faces))


def write_ply_points(path: str, points: np.ndarray) -> None:
    points = np.atleast_2d(np.asarray(points, float))
    with open(path, "w") as fh:
        fh.write(
            "ply\nformat ascii 1.0\n"
            f"element vertex {points.shape[0]}\n"
            "property double x\nproperty double y\nproperty double z\n"
            "end_header\n"
        )
        for p in points:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")


# ---------------------------------------------------------------------------
# surface samples


@dataclass
class MeshSamples:
    """Array-of-struct container for point samples on mesh faces."""

    face_ids: np.ndarray  # (k,)
    bary: np.ndarray  # (k, 3), nonnegative, rows sum to 1
    positions: np.ndarray  # (k, 3)

    def __post_init__(self):
        self.face_ids = np.asarray(self.face_ids, dtype=np.int64)
        self.bary = np.atleast_2d(np.asarray(self.bary, dtype=float))
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))

    def __len__(self) -> int:
        return self.face_ids.shape[0]

    @classmethod
    def from_bary(cls, mesh: TriMesh, face_ids, bary) -> "MeshSamples":
        face_ids = np.asarray(face_ids, dtype=np.int64)
        bary = np.atleast_2d(np.asarray(bary, float))
        pos = np.einsum("kj,kjd->kd", bary, mesh.vertices[mesh.faces[face_ids]])
        return cls(face_ids, bary, pos)

    def subset(self, idx) -> "MeshSamples":
        return MeshSamples(self.face_ids[idx], self.bary[idx], self.positions[idx])

    def copy(self) -> "MeshSamples":
        return MeshSamples(self.face_ids.copy(), self.bary.copy(), self.positions.copy())

    def validate(self, mesh: TriMesh, tol: float = 1e-9) -> None:
        if np.any(self.bary < -tol) or np.any(np.abs(self.bary.sum(axis=1) - 1) > tol):
            raise ValueError("invalid barycentric coordinates")
        pos = np.einsum("kj,kjd->kd", self.bary, mesh.vertices[mesh.faces[self.face_ids]])
        if np.max(np.linalg.norm(pos - self.positions, axis=1)) > tol:
            raise ValueError("positions inconsistent with barycentric coordinates")


def face_density(mesh: TriMesh, density: np.ndarray | None) -> np.ndarray:
    """Per-face density from None (uniform), per-vertex, or per-face input."""
    if density is None:
        return np.ones(mesh.n_faces)
    density = np.asarray(density, float)
    if density.shape == (mesh.n_vertices,):
        return density[mesh.faces].mean(axis=1)
    if density.shape == (mesh.n_faces,):
        return density.copy()
    raise ValueError(
        f"density must have one value per vertex ({mesh.n_vertices}) "
        f"or per face ({mesh.n_faces})"
    )


def sample_faces(
    mesh: TriMesh,
    density: np.ndarray | None,
    m: int,
    rng: np.random.Generator,
) -> MeshSamples:
    """m surface samples: faces by area x density, uniform within each face."""
    w = mesh.face_areas() * face_density(mesh, density)
    if np.any(w < 0):
        raise ValueError("negative density")
    total = w.sum()
    if total <= 0:
        raise ValueError("zero total sampling weight")
    if m == 0:
        return MeshSamples(np.empty(0, np.int64), np.empty((0, 3)), np.empty((0, 3)))
    fid = rng.choice(mesh.n_faces, size=m, p=w / total)
    r1 = np.sqrt(rng.random(m))
    r2 = rng.random(m)
    bary = np.stack([1.0 - r1, r1 * (1.0 - r2), r1 * r2], axis=1)
    return MeshSamples.from_bary(mesh, fid, bary)


# ---------------------------------------------------------------------------
# hyperbolic Yamabe flow


@dataclass
class ConformalFactors:
    u: np.ndarray  # (V,)

    def __post_init__(self):
        self.u = np.asarray(self.u, float)


def scaled_edge_lengths(mesh: TriMesh, u: np.ndarray) -> np.ndarray:
    """l'_ij = exp((u_i + u_j)/2) l_ij per edge."""
    e = mesh.edges
    return np.exp(0.5 * (u[e[:, 0]] + u[e[:, 1]])) * mesh.edge_lengths()


def _face_lengths(mesh: TriMesh, edge_lengths: np.ndarray) -> np.ndarray:
    """(F, 3): length of the edge opposite each corner."""
    return edge_lengths[mesh.face_edges]


def triangle_inequality_ok(face_l: np.ndarray) -> bool:
    a, b, c = face_l[:, 0], face_l[:, 1], face_l[:, 2]
    return bool(np.all((a < b + c) & (b < a + c) & (c < a + b)))


def hyperbolic_angle(opp, s1, s2):
    """Angle opposite `opp` in a hyperbolic triangle with sides (opp, s1, s2).

    Half-angle form of the law of cosines: stays accurate for tiny triangles,
    where the direct cosh-ratio cancels catastrophically.
    """
    s = 0.5 * (opp + s1 + s2)
    num = np.sinh(np.maximum(s - s1, 0.0)) * np.sinh(np.maximum(s - s2, 0.0))
    den = np.sinh(s) * np.sinh(np.maximum(s - opp, 0.0))
    return 2.0 * np.arctan2(np.sqrt(num), np.sqrt(den))


def corner_angles_hyperbolic(face_l: np.ndarray) -> np.ndarray:
    """Interior angles of hyperbolic triangles from their side lengths."""
    a, b, c = face_l[:, 0], face_l[:, 1], face_l[:, 2]
    return np.stack(
        [hyperbolic_angle(a, b, c), hyperbolic_angle(b, c, a), hyperbolic_angle(c, a, b)],
        axis=1,
    )


def corner_angles_euclidean(face_l: np.ndarray) -> np.ndarray:
    a, b, c = face_l[:, 0], face_l[:, 1], face_l[:, 2]

    def angle(opp, s1, s2):
        s = 0.5 * (opp + s1 + s2)
        num = np.maximum(s - s1, 0.0) * np.maximum(s - s2, 0.0)
        den = s * np.maximum(s - opp, 0.0)
        return 2.0 * np.arctan2(np.sqrt(num), np.sqrt(den))

    return np.stack([angle(a, b, c), angle(b, c, a), angle(c, a, b)], axis=1)


def _vertex_angle_sums(mesh: TriMesh, angles: np.ndarray) -> np.ndarray:
    theta = np.zeros(mesh.n_vertices)
    np.add.at(theta, mesh.faces.ravel(), angles.ravel())
    return theta


def hyperbolic_angle_sums(mesh: TriMesh, u: np.ndarray) -> np.ndarray:
    """Theta_i under the rescaled hyperbolic metric (the flow's target is 2pi)."""
    face_l = _face_lengths(mesh, scaled_edge_lengths(mesh, u))
    if not triangle_inequality_ok(face_l):
        raise MeshError("scaled lengths violate the triangle inequality")
    return _vertex_angle_sums(mesh, corner_angles_hyperbolic(face_l))


def euclidean_angle_defect_sum(mesh: TriMesh) -> float:
    """Sum of 2pi - Theta_i with raw Euclidean angles; equals 2 pi chi exactly."""
    face_l = _face_lengths(mesh, mesh.edge_lengths())
    theta = _vertex_angle_sums(mesh, corner_angles_euclidean(face_l))
    return float(np.sum(2 * np.pi - theta))


def hyperbolic_gauss_bonnet(mesh: TriMesh, u: np.ndarray) -> tuple[float, float]:
    """(vertex deficit sum, total hyperbolic area); deficit - area = 2 pi chi."""
    face_l = _face_lengths(mesh, scaled_edge_lengths(mesh, u))
    angles = corner_angles_hyperbolic(face_l)
    theta = _vertex_angle_sums(mesh, angles)
    area = float(np.sum(np.pi - angles.sum(axis=1)))
    return float(np.sum(2 * np.pi - theta)), area


def _angle_sum_jacobian(mesh: TriMesh, u: np.ndarray) -> csr_matrix:
    """d Theta_i / d u_j, assembled from per-face analytic derivatives."""
    le = scaled_edge_lengths(mesh, u)
    fl = _face_lengths(mesh, le)  # (F, 3) opposite-corner order
    a, b, c = fl[:, 0], fl[:, 1], fl[:, 2]
    angles = corner_angles_hyperbolic(fl)
    ch, sh = np.cosh, np.sinh

    def dalpha(opp, s1, s2, alpha):
        """(d/d opp, d/d s1, d/d s2) of the angle opposite `opp`."""
        m = sh(s1) * sh(s2)
        sin_a = np.maximum(np.sin(alpha), 1e-300)
        cos_a = np.cos(alpha)
        d_opp = sh(opp) / (m * sin_a)
        d_s1 = (cos_a * ch(s1) * sh(s2) - sh(s1) * ch(s2)) / (m * sin_a)
        d_s2 = (cos_a * ch(s2) * sh(s1) - sh(s2) * ch(s1)) / (m * sin_a)
        return d_opp, d_s1, d_s2

    # corner 0: opposite a, adjacent b (edge v0v2) and c (edge v0v1)
    da_a, da_b, da_c = dalpha(a, b, c, angles[:, 0])
    db_b, db_c, db_a = dalpha(b, c, a, angles[:, 1])
    dc_c, dc_a, dc_b = dalpha(c, a, b, angles[:, 2])

    # d l'_e / d u_v = l'_e / 2 for each endpoint v of e
    ha, hb, hc = a / 2, b / 2, c / 2
    v0, v1, v2 = mesh.faces[:, 0], mesh.faces[:, 1], mesh.faces[:, 2]
    rows, cols, vals = [], [], []

    def add(rv, cv, val):
        rows.append(rv)
        cols.append(cv)
        vals.append(val)

    # angle at v0 (alpha0): edges containing v0 are b, c; edge a contains v1, v2
    add(v0, v0, da_b * hb + da_c * hc)
    add(v0, v1, da_a * ha + da_c * hc)
    add(v0, v2, da_a * ha + da_b * hb)
    # angle at v1 (alpha1): opposite b; adjacent c, a
    add(v1, v1, db_c * hc + db_a * ha)
    add(v1, v2, db_b * hb + db_a * ha)
    add(v1, v0, db_b * hb + db_c * hc)
    # angle at v2 (alpha2): opposite c; adjacent a, b
    add(v2, v2, dc_a * ha + dc_b * hb)
    add(v2, v0, dc_c * hc + dc_b * hb)
    add(v2, v1, dc_c * hc + dc_a * ha)

    n = mesh.n_vertices
    jac = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return jac.tocsr()


def admissible_initial_factor(mesh: TriMesh) -> float:
    """Uniform u0 placing the metric near zero total curvature deficit.

    The total deficit is monotone in the scale (areas grow with length), so
    bisection on a uniform log-scale factor brackets the root.
    """
    l0 = mesh.edge_lengths()

    def total_deficit(u_const: float) -> float:
        fl = _face_lengths(mesh, np.exp(u_const) * l0)
        theta = _vertex_angle_sums(mesh, corner_angles_hyperbolic(fl))
        return float(np.sum(2 * np.pi - theta))

    lo, hi = -2.0, 2.0
    while total_deficit(lo) > 0:
        lo -= 2.0
        if lo < -60:
            raise MeshError("could not bracket an admissible starting metric")
    while total_deficit(hi) < 0:
        hi += 2.0
        if hi > 60:
            raise MeshError("could not bracket an admissible starting metric")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if total_deficit(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def yamabe_flow(
    mesh: TriMesh,
    tol: float = 1e-12,
    max_iter: int = 60,
    max_backtracks: int = 60,
) -> ConformalFactors:
    """Per-vertex conformal factors giving hyperbolic angle sums of 2pi.

    Newton iteration on the curvature deficit Theta(u) - 2pi with residual
    backtracking; steps violating a triangle inequality are rejected.
    """
    if mesh.genus < 2:
        raise MeshError(f"hyperbolic flow needs genus >= 2, got {mesh.genus}")
    u = np.full(mesh.n_vertices, admissible_initial_factor(mesh))

    def residual(uv: np.ndarray) -> np.ndarray | None:
        fl = _face_lengths(mesh, scaled_edge_lengths(mesh, uv))
        if not np.all(np.isfinite(fl)) or not triangle_inequality_ok(fl):
            return None
        return _vertex_angle_sums(mesh, corner_angles_hyperbolic(fl)) - 2 * np.pi

    r = residual(u)
    if r is None:
        raise MeshError("starting metric violates the triangle inequality")

    def backtrack(direction: np.ndarray) -> bool:
        nonlocal u, r
        t = 1.0
        norm0 = np.linalg.norm(r)
        for _ in range(max_backtracks):
            r_new = residual(u + t * direction)
            if r_new is not None and np.linalg.norm(r_new) < norm0:
                u = u + t * direction
                r = r_new
                return t > 1e-3
            t *= 0.5
        return False

    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return ConformalFactors(u)
        jac = _angle_sum_jacobian(mesh, u)
        step = spsolve(jac, -r)
        if not np.all(np.isfinite(step)):
            raise MeshError("singular Jacobian in Yamabe flow")
        # clamp wild steps far from the solution
        big = np.max(np.abs(step))
        if big > 2.0:
            step *= 2.0 / big
        if backtrack(step):
            continue
        # Newton made no real progress: take explicit curvature-flow steps
        # (u_dot = -deficit) until Newton's basin is reached again
        moved = False
        for _ in range(20):
            if backtrack(-r):
                moved = True
            else:
                break
        if not moved:
            raise MeshError("Yamabe flow stalled (Newton and explicit steps rejected)")
    if np.max(np.abs(r)) < tol:
        return ConformalFactors(u)
    raise MeshError(f"Yamabe flow did not converge (max deficit {np.max(np.abs(r)):.3e})")


# ---------------------------------------------------------------------------
# layouts


@dataclass
class Layout:
    space: str  # "sphere" | "hyperbolic"
    positions: np.ndarray  # (V, 3); NaN where unplaced
    placed_mask: np.ndarray  # (V,) bool
    placed_faces: np.ndarray  # face ids
    origin_vertex: int
    non_conformal: bool = False
    _face_lookup: np.ndarray = field(default=None, repr=False)

    def has_face(self, n_faces: int) -> np.ndarray:
        if self._face_lookup is None or self._face_lookup.shape[0] != n_faces:
            lut = np.zeros(n_faces, dtype=bool)
            lut[self.placed_faces] = True
            self._face_lookup = lut
        return self._face_lookup


def _tangent_frame_hyper(x: np.ndarray, t1: np.ndarray) -> np.ndarray:
    """Unit tangent at x orthogonal to t1 (Minkowski cross product, d=2)."""
    w = np.cross(x, t1)
    w[-1] = -w[-1]
    return w


def build_local_layout(
    mesh: TriMesh, factors: ConformalFactors, v0: int, eps: float
) -> Layout:
    """Greedy breadth-first isometric layout of a mesh patch onto H^2.

    v0 lands on the origin; triangles are laid down through the hyperbolic law
    of cosines while every vertex keeps time coordinate <= eps. Faces with any
    vertex beyond eps are skipped whole.
    """
    if eps <= 1.0:
        raise MeshError("eps must exceed 1 (the origin's time coordinate)")
    le = scaled_edge_lengths(mesh, factors.u)
    edge_index = {}
    for ei, (p, q) in enumerate(mesh.edges):
        edge_index[(int(p), int(q))] = ei
        edge_index[(int(q), int(p))] = ei

    def elen(p: int, q: int) -> float:
        return le[edge_index[(p, q)]]

    nv = mesh.n_vertices
    pos = np.full((nv, 3), np.nan)
    placed = np.zeros(nv, dtype=bool)
    pos[v0] = manifold.hyper_origin(2)
    placed[v0] = True

    nbr = sorted(
        {int(v) for f in mesh.vertex_faces()[v0] for v in mesh.faces[f] if v != v0}
    )[0]
    first = manifold.exp_hyper(
        manifold.hyper_origin(2), elen(v0, nbr) * np.array([1.0, 0.0, 0.0])
    )
    placed_faces: list[int] = []
    if first[-1] > eps:
        return Layout("hyperbolic", pos, placed, np.array([], dtype=np.int64), v0)
    pos[nbr] = first
    placed[nbr] = True

    visited = np.zeros(mesh.n_faces, dtype=bool)
    neighbors = mesh.face_neighbors()
    queue = deque(
        sorted(set(mesh.vertex_faces()[v0]) & set(mesh.vertex_faces()[nbr]))
    )
    visited[list(queue)] = True
    while queue:
        fi = queue.popleft()
        tri = mesh.faces[fi]
        missing = [v for v in tri if not placed[v]]
        if len(missing) > 1:
            # reached ahead of its supporting edge; retry when more is placed
            visited[fi] = False
            continue
        if len(missing) == 1:
            cva = int(missing[0])
            k = int(np.flatnonzero(tri == cva)[0])
            a, b = int(tri[(k + 1) % 3]), int(tri[(k + 2) % 3])
            l_ab, l_ac, l_bc = elen(a, b), elen(a, cva), elen(b, cva)
            ang = hyperbolic_angle(l_bc, l_ab, l_ac)
            t1 = manifold.log_hyper(pos[a], pos[b])
            t1 = t1 / np.sqrt(max(manifold.lorentz_dot(t1, t1), 1e-300))
            t2 = _tangent_frame_hyper(pos[a], t1)
            cand = manifold.exp_hyper(
                pos[a], l_ac * (np.cos(ang) * t1 + np.sin(ang) * t2)
            )
            # orient by the face's stored winding
            trial = pos[tri].copy()
            trial[k] = cand
            if np.linalg.det(trial) < 0:
                cand = manifold.exp_hyper(
                    pos[a], l_ac * (np.cos(ang) * t1 - np.sin(ang) * t2)
                )
            if cand[-1] > eps:
                continue  # face skipped whole; the vertex stays unplaced
            pos[cva] = cand
            placed[cva] = True
        if np.any(pos[tri][:, -1] > eps):
            continue
        placed_faces.append(fi)
        for nb in neighbors[fi]:
            if not visited[nb]:
                visited[nb] = True
                queue.append(nb)

    # drop vertices not used by any accepted face (except the seed)
    used = np.zeros(nv, dtype=bool)
    used[v0] = True
    if placed_faces:
        used[mesh.faces[np.array(placed_faces)].ravel()] = True
    pos[~used] = np.nan
    return Layout(
        "hyperbolic",
        pos,
        placed & used,
        np.array(sorted(placed_faces), dtype=np.int64),
        v0,
    )


def layout_edge_errors(mesh: TriMesh, factors: ConformalFactors, layout: Layout) -> np.ndarray:
    """|d_H(placed edge) - l'| over all edges of placed faces (certificate)."""
    if layout.placed_faces.size == 0:
        return np.zeros(0)
    le = scaled_edge_lengths(mesh, factors.u)
    eids = np.unique(mesh.face_edges[layout.placed_faces].ravel())
    e = mesh.edges[eids]
    d = manifold.dist_hyper(layout.positions[e[:, 0]], layout.positions[e[:, 1]])
    return np.abs(d - le[eids])


def restrict_to_layout(
    samples: MeshSamples, layout: Layout, mesh: TriMesh
) -> tuple[np.ndarray, np.ndarray]:
    """Map on-patch samples into the layout domain.

    Returns (points, indices): barycentric combinations of placed vertex
    positions, re-normalized onto the manifold, plus back-references into
    `samples`. Off-patch samples are excluded.
    """
    on = layout.has_face(mesh.n_faces)[samples.face_ids]
    idx = np.flatnonzero(on)
    if idx.size == 0:
        return np.empty((0, 3)), idx
    tri = mesh.faces[samples.face_ids[idx]]
    pts = np.einsum("kj,kjd->kd", samples.bary[idx], layout.positions[tri])
    if layout.space == "sphere":
        pts = manifold.to_sphere(pts)
    else:
        pts = manifold.to_hyperboloid(pts)
    return pts, idx


def map_to_mesh(
    points: np.ndarray, mesh: TriMesh, layout: Layout
) -> tuple[MeshSamples, np.ndarray]:
    """Pull layout-domain points back onto the mesh via origin rays.

    A BVH over the layout triangles of the placed faces finds the face each
    point sits above; Euclidean barycentric coordinates of the hit transfer it
    to the corresponding mesh face. Returns (samples, hit_mask); missed points
    (outside the patch) get no sample and the caller keeps their previous
    state.
    """
    points = np.atleast_2d(np.asarray(points, float))
    if layout.placed_faces.size == 0:
        return (
            MeshSamples(np.empty(0, np.int64), np.empty((0, 3)), np.empty((0, 3))),
            np.zeros(points.shape[0], dtype=bool),
        )
    tris = layout.positions[mesh.faces[layout.placed_faces]]
    tree = bvhlib.build_bvh(tris)
    local, bary = bvhlib.ray_hits(tree, points)
    hit = local >= 0
    bary = bary[hit]
    bary = bary / bary.sum(axis=1, keepdims=True)
    face_ids = layout.placed_faces[local[hit]]
    return MeshSamples.from_bary(mesh, face_ids, bary), hit


# ---------------------------------------------------------------------------
# spherical pipeline


def load_layout(path: str, mesh: TriMesh) -> Layout:
    """Companion spherical layout: same connectivity, vertices on S^2."""
    lay = load_mesh(path)
    if lay.n_vertices != mesh.n_vertices or not np.array_equal(lay.faces, mesh.faces):
        raise MeshError("layout connectivity does not match the mesh")
    manifold.check_sphere(lay.vertices, tol=1e-6)
    return Layout(
        "sphere",
        manifold.to_sphere(lay.vertices),
        np.ones(mesh.n_vertices, dtype=bool),
        np.arange(mesh.n_faces, dtype=np.int64),
        0,
    )


def _oriented_dets(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    tri = positions[faces]
    return np.linalg.det(tri)


def count_face_flips(positions: np.ndarray, faces: np.ndarray) -> int:
    """Faces whose spherical orientation disagrees with the global majority."""
    dets = _oriented_dets(positions, faces)
    majority = 1.0 if np.sum(np.sign(dets)) >= 0 else -1.0
    return int(np.sum(dets * majority <= 0))


def embed_sphere_fallback(
    mesh: TriMesh, smoothing_iters: int = 50, step: float = 0.5
) -> tuple[Layout, list[int]]:
    """Non-conformal spherical layout: centroid-normalize, then tangential
    Laplacian smoothing with re-projection.

    Returns the layout and the per-iteration flip counts; raises if flipped
    faces remain at the end (an external conformal map is then required).
    """
    if mesh.genus != 0:
        raise MeshError("spherical embedding needs a genus-0 mesh")
    pos = manifold.to_sphere(mesh.vertices - mesh.vertices.mean(axis=0))
    e = mesh.edges
    adj = coo_matrix(
        (
            np.ones(2 * e.shape[0]),
            (
                np.concatenate([e[:, 0], e[:, 1]]),
                np.concatenate([e[:, 1], e[:, 0]]),
            ),
        ),
        shape=(mesh.n_vertices, mesh.n_vertices),
    ).tocsr()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    flips = [count_face_flips(pos, mesh.faces)]
    for _ in range(smoothing_iters):
        mean = adj @ pos / deg[:, None]
        delta = mean - pos
        delta -= np.sum(delta * pos, axis=1, keepdims=True) * pos
        pos = manifold.to_sphere(pos + step * delta)
        flips.append(count_face_flips(pos, mesh.faces))
    if flips[-1] > 0:
        raise MeshError(
            f"{flips[-1]} flipped faces remain after smoothing; "
            "supply an externally computed conformal layout instead"
        )
    return (
        Layout(
            "sphere",
            pos,
            np.ones(mesh.n_vertices, dtype=bool),
            np.arange(mesh.n_faces, dtype=np.int64),
            0,
            non_conformal=True,
        ),
        flips,
    )


def sample_mesh_spherical(
    mesh: TriMesh,
    layout: Layout,
    density: np.ndarray | None,
    cfg: SamplerConfig,
    m: int | None = None,
) -> tuple[MeshSamples, object]:
    """Global genus-0 pipeline: sample the mesh, push onto S^2, optimize,
    pull back."""
    if mesh.genus != 0:
        raise MeshError("spherical pipeline requires genus 0")
    if layout.space != "sphere" or layout.positions.shape[0] != mesh.n_vertices:
        raise MeshError("layout does not match the mesh")
    m = m if m is not None else max(4 * cfg.n, cfg.n)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0xFACE, 0)))
    nu_mesh = sample_faces(mesh, density, m, rng)
    nu_pts, _ = restrict_to_layout(nu_mesh, layout, mesh)
    nu = DiscreteMeasure(nu_pts, "sphere")

    init_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0, 0)))
    init_idx = init_rng.choice(m, size=cfg.n, replace=False)
    mu0_mesh = nu_mesh.subset(init_idx)

    out, trace = nesots_run(nu, cfg, mu0=nu_pts[init_idx])
    mapped, hit = map_to_mesh(out.atoms, mesh, layout)
    result = mu0_mesh.copy()
    hit_idx = np.flatnonzero(hit)
    result.face_ids[hit_idx] = mapped.face_ids
    result.bary[hit_idx] = mapped.bary
    result.positions[hit_idx] = mapped.positions
    return result, trace


# ---------------------------------------------------------------------------
# hyperbolic pipeline


@dataclass
class HyperbolicRunStats:
    round_energy: list = field(default_factory=list)
    patch_mu_sizes: list = field(default_factory=list)
    popped_vertices: list = field(default_factory=list)
    skipped_rounds: int = 0
    missed_displacements: int = 0
    visit_counts: np.ndarray | None = None


def sample_mesh_hyperbolic(
    mesh: TriMesh,
    density: np.ndarray | None,
    cfg: SamplerConfig,
    n_rounds: int = 500,
    eps: float = 1.5,
    m: int | None = None,
    factors: ConformalFactors | None = None,
) -> tuple[MeshSamples, HyperbolicRunStats]:
    """Local genus >= 2 pipeline (patch rounds over least-visited vertices).

    Each round lays out a patch around the least-visited vertex, restricts the
    current samples and the target to it, runs the optimizer there, and maps
    the results back; displacements leaving the patch are dropped.
    """
    if mesh.genus < 2:
        raise MeshError("hyperbolic pipeline requires genus >= 2")
    if factors is None:
        factors = yamabe_flow(mesh)
    m = m if m is not None else max(4 * cfg.n, cfg.n)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0xFACE, 1)))
    nu_mesh = sample_faces(mesh, density, m, rng)

    init_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0, 0)))
    mu = nu_mesh.subset(init_rng.choice(m, size=cfg.n, replace=False)).copy()

    visits = np.zeros(mesh.n_vertices, dtype=np.int64)
    stats = HyperbolicRunStats()
    for round_id in range(n_rounds):
        v0 = int(np.argmin(visits))  # ties fall to the lowest vertex id
        stats.popped_vertices.append(v0)
        layout = build_local_layout(mesh, factors, v0, eps)
        placed_ids = np.flatnonzero(layout.placed_mask)
        visits[placed_ids] += 1

        mu_pts, mu_idx = restrict_to_layout(mu, layout, mesh)
        nu_pts, _ = restrict_to_layout(nu_mesh, layout, mesh)
        stats.patch_mu_sizes.append(int(mu_idx.size))
        if mu_idx.size == 0 or nu_pts.shape[0] < mu_idx.size:
            stats.skipped_rounds += 1
            continue

        inner = SamplerConfig(
            n=int(mu_idx.size),
            K=cfg.K,
            L=cfg.L,
            gamma0=cfg.gamma0,
            decay=cfg.decay,
            tau=cfg.tau,
            p=cfg.p,
            seed=int(np.random.SeedSequence((cfg.seed, 0xB0, round_id)).generate_state(1)[0]),
            pooling=cfg.pooling,
        )
        out, trace = nesots_run(
            DiscreteMeasure(nu_pts, "hyperbolic"), inner, mu0=mu_pts
        )
        stats.round_energy.append(float(np.mean(trace.energy)))

        mapped, hit = map_to_mesh(out.atoms, mesh, layout)
        stats.missed_displacements += int(np.sum(~hit))
        upd = mu_idx[hit]
        mu.face_ids[upd] = mapped.face_ids
        mu.bary[upd] = mapped.bary
        mu.positions[upd] = mapped.positions
    stats.visit_counts = visits
    return mu, stats


# ---------------------------------------------------------------------------
# conformal-factor cache

def save_factors(path: str, mesh: TriMesh, factors: ConformalFactors) -> None:
    np.savez(path, u=factors.u, mesh_hash=mesh.content_hash())


def load_factors(path: str, mesh: TriMesh) -> ConformalFactors | None:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError):
        return None
    if str(data["mesh_hash"]) != mesh.content_hash():
        return None
    u = np.asarray(data["u"], float)
    if u.shape != (mesh.n_vertices,):
        return None
    return ConformalFactors(u)
