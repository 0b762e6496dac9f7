"""Point-set quality diagnostics.

Sliced transport energy (Monte Carlo over probe slices), spherical-harmonic
angular power spectra normalized to the white-noise expectation, pair
correlation functions against a Monte Carlo uniform reference, and a
graph-Dijkstra approximation of mesh geodesic distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from . import ot1d, slicing
from .measures import DiscreteMeasure, subsample

PROBE_STREAM = 0x9E3779B9  # keeps probe slices disjoint from optimizer streams


@dataclass
class SpectrumReport:
    power: np.ndarray  # (lmax+1,), white noise ~ 1 for l >= 1

    def __post_init__(self):
        self.power = np.asarray(self.power, float)
        if np.any(self.power < 0):
            raise ValueError("negative spectral power")


@dataclass
class PcfReport:
    r: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, float)
        self.g = np.asarray(self.g, float)
        if np.any(self.g < -1e-12):
            raise ValueError("negative pcf value")


def sw_energy(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    n_probe_slices: int = 256,
    p: int = 2,
    seed: int = 0,
) -> float:
    """Monte Carlo sliced transport energy between mu and nu.

    Averages the optimal 1D cost (circular on the sphere, linear on the
    hyperboloid) over independent probe slices; nu is subsampled to |mu| per
    slice when larger.
    """
    if len(mu) == 0 or len(nu) == 0:
        raise ValueError("empty measure")
    if len(nu) < len(mu):
        raise ValueError("target must have at least as many atoms as mu")
    if mu.space != nu.space:
        raise ValueError("measures live on different spaces")
    spherical = mu.space in ("sphere", "projective")
    d = mu.dim
    total = 0.0
    for k in range(n_probe_slices):
        rng = np.random.default_rng(np.random.SeedSequence((seed, PROBE_STREAM, k)))
        tilde = subsample(nu, len(mu), rng).atoms if len(nu) > len(mu) else nu.atoms
        for _ in range(16):
            try:
                if spherical:
                    sl = slicing.sample_slice_sphere(rng, d)
                    _, t_mu = slicing.slice_coords_sphere(sl, mu.atoms)
                    _, t_nu = slicing.slice_coords_sphere(sl, tilde)
                    perm = ot1d.solve_circle(t_mu, t_nu, p=p)
                    cost = np.mean(ot1d.circle_dist(t_mu, t_nu[perm]) ** p)
                else:
                    sl = slicing.sample_slice_hyper(rng, d)
                    _, t_mu = slicing.slice_coords_hyper(sl, mu.atoms)
                    _, t_nu = slicing.slice_coords_hyper(sl, tilde)
                    perm = ot1d.solve_line(t_mu, t_nu)
                    cost = np.mean(np.abs(t_mu - t_nu[perm]) ** p)
                break
            except slicing.OrthogonalToSliceError:
                continue
        else:
            raise RuntimeError("could not draw a non-degenerate probe slice")
        total += float(cost)
    return total / n_probe_slices


def semidiscrete_w2_uniform_circle(t: np.ndarray) -> float:
    """Exact W_2^2 between atoms at t in [0,1) (uniform weights) and the
    uniform measure on the circle; the optimal rotation is folded in."""
    t = np.asarray(t, float).ravel()
    n = t.shape[0]
    if n < 1:
        raise ValueError("empty coordinate list")
    x = np.sort(t % 1.0)
    i = np.arange(n)
    mean = x.mean()
    return float(
        np.mean(x * x) - mean * mean + np.mean(x * (1.0 - 1.0 / n - 2.0 * i / n)) + 1.0 / 12.0
    )


def sw_energy_uniform(
    points: np.ndarray, n_probe_slices: int = 256, seed: int = 0
) -> float:
    """Sliced W_2^2 of a sphere point set to the *continuous* uniform measure.

    Per probe slice the projected coordinates are compared to the uniform
    circle density in closed form, so the estimate carries no reference-set
    noise (unlike sw_energy against a finite target, whose subsample noise
    floors the ratio between optimized and white-noise sets around 0.5).
    """
    points = np.atleast_2d(np.asarray(points, float))
    d = points.shape[1] - 1
    total = 0.0
    for k in range(n_probe_slices):
        rng = np.random.default_rng(np.random.SeedSequence((seed, PROBE_STREAM, k)))
        for _ in range(16):
            try:
                sl = slicing.sample_slice_sphere(rng, d)
                _, t = slicing.slice_coords_sphere(sl, points)
                break
            except slicing.OrthogonalToSliceError:
                continue
        else:
            raise RuntimeError("could not draw a non-degenerate probe slice")
        total += semidiscrete_w2_uniform_circle(t)
    return total / n_probe_slices


def sphere_power_spectrum(points: np.ndarray, lmax: int = 64) -> SpectrumReport:
    """Angular power spectrum of a point set on S^2.

    power[l] = (4pi / (n (2l+1))) sum_m |sum_i Y_lm(x_i)|^2, which by the
    addition theorem equals (1/n) sum_ij P_l(x_i . x_j). Normalization makes
    uniform random points average to 1 for every l >= 1.
    """
    points = np.atleast_2d(np.asarray(points, float))
    if points.shape[0] < 1:
        raise ValueError("empty point set")
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    n = points.shape[0]
    gram = np.clip(points @ points.T, -1.0, 1.0)
    power = np.empty(lmax + 1)
    p_prev = np.ones_like(gram)  # P_0
    power[0] = p_prev.sum() / n
    if lmax >= 1:
        p_cur = gram.copy()  # P_1
        power[1] = p_cur.sum() / n
        for ell in range(1, lmax):
            # (l+1) P_{l+1} = (2l+1) x P_l - l P_{l-1}
            p_next = ((2 * ell + 1) * gram * p_cur - ell * p_prev) / (ell + 1)
            power[ell + 1] = p_next.sum() / n
            p_prev, p_cur = p_cur, p_next
    return SpectrumReport(np.maximum(power, 0.0))


def pair_correlation(
    dists: np.ndarray,
    reference_dists: np.ndarray,
    rmax: float,
    bins: int = 25,
) -> PcfReport:
    """Pair correlation from pairwise sample distances.

    Both inputs are condensed upper-triangle distance vectors. The reference
    comes from a large uniform (binomial) set on the same domain; g(r) is the
    ratio of per-bin pair fractions, so uniform inputs give g ~ 1.
    """
    if rmax <= 0:
        raise ValueError("rmax must be positive")
    dists = np.asarray(dists, float).ravel()
    reference_dists = np.asarray(reference_dists, float).ravel()
    if dists.size < 1 or reference_dists.size < 1:
        raise ValueError("need at least one pair")
    edges = np.linspace(0.0, rmax, bins + 1)
    h, _ = np.histogram(dists, bins=edges)
    href, _ = np.histogram(reference_dists, bins=edges)
    f = h / dists.size
    fref = href / reference_dists.size
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(fref > 0, f / fref, 0.0)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return PcfReport(centers, g)


def condensed_pairwise(points: np.ndarray, dist_fn) -> np.ndarray:
    """Upper-triangle pairwise distances under a vectorized metric."""
    points = np.atleast_2d(np.asarray(points, float))
    n = points.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    iu, ju = np.triu_indices(n, k=1)
    return dist_fn(points[iu], points[ju])


def mesh_geodesic_distances(mesh, sources, targets) -> np.ndarray:
    """Graph-shortest-path distances between mesh samples.

    Samples connect to their face's vertices with in-face Euclidean lengths;
    paths then follow mesh edges (Dijkstra). A consistent overestimate of the
    exact polyhedral geodesic, adequate for sampler-vs-sampler comparisons.
    """
    nv = mesh.vertices.shape[0]
    ns, nt = len(sources), len(targets)
    rows, cols, vals = [], [], []

    ve = mesh.vertices[mesh.edges]
    elen = np.linalg.norm(ve[:, 0] - ve[:, 1], axis=1)
    rows.append(mesh.edges[:, 0])
    cols.append(mesh.edges[:, 1])
    vals.append(elen)

    for offset, samples in ((nv, sources), (nv + ns, targets)):
        fv = mesh.faces[samples.face_ids]  # (k, 3)
        w = np.linalg.norm(
            samples.positions[:, None, :] - mesh.vertices[fv], axis=2
        )  # (k, 3)
        k = len(samples)
        rows.append(np.repeat(np.arange(k) + offset, 3))
        cols.append(fv.ravel())
        vals.append(w.ravel())

    n_total = nv + ns + nt
    graph = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_total, n_total),
    )
    ncomp, _ = connected_components(graph, directed=False)
    if ncomp > 1:
        raise ValueError("mesh graph is disconnected")
    dmat = dijkstra(
        graph,
        directed=False,
        indices=np.arange(nv, nv + ns),
    )
    return dmat[:, nv + ns : n_total]
