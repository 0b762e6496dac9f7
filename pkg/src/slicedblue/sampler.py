"""Stochastic Riemannian descent of sliced transport energy.

Each iteration draws L independent slices; every slice subsamples the target,
projects both point sets onto the slice, solves the balanced 1D assignment,
and turns the per-point displacement into a tangent direction via the slice
group action and the Log map. Directions are pooled (mean or geometric
median) and applied with an exponentially decaying step through the Exp map.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import manifold, ot1d, slicing
from .measures import DiscreteMeasure, subsample

MAX_SLICE_RETRIES = 16

POOLINGS = ("mean", "geometric-median")


@dataclass
class SamplerConfig:
    n: int
    K: int = 300
    L: int = 32
    gamma0: float = 1.0
    decay: float | None = None  # default: final step = 5% of gamma0
    tau: float = 1e-7
    p: int = 2
    seed: int = 0
    pooling: str = "geometric-median"

    def resolved_decay(self) -> float:
        if self.decay is not None:
            return self.decay
        return 0.05 ** (1.0 / max(self.K, 1))

    def validate(self, m: int, projective: bool = False) -> None:
        if self.n < 1 or self.K < 1 or self.L < 1:
            raise ValueError("n, K, L must be >= 1")
        if projective:
            if 2 * self.n > m:
                raise ValueError(f"projective mode needs 2n <= m (n={self.n}, m={m})")
        elif self.n > m:
            raise ValueError(f"need n <= m (n={self.n}, m={m})")
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        d = self.resolved_decay()
        if not 0.0 < d <= 1.0:
            raise ValueError("decay must lie in (0, 1]")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.p not in (1, 2):
            raise ValueError("p must be 1 or 2")
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}")


@dataclass
class RunTrace:
    energy: list = field(default_factory=list)
    seconds: list = field(default_factory=list)


def _rng_for(seed: int, iteration: int, slice_index: int) -> np.random.Generator:
    # (seed, j, l) -> independent stream; reproducible regardless of execution order
    return np.random.default_rng(np.random.SeedSequence((seed, iteration, slice_index)))


def geometric_median_batch(vecs: np.ndarray, tau: float, max_iter: int = 10_000) -> np.ndarray:
    """Row-wise geometric medians of (n, L, D) stacks via damped Weiszfeld.

    Starts from zero; each distance is smoothed by tau; a row freezes once its
    iterate moves less than tau.
    """
    vecs = np.asarray(vecs, float)
    n, L, D = vecs.shape
    y = np.zeros((n, D))
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        v = vecs[active]
        d = np.linalg.norm(v - y[active][:, None, :], axis=-1) + tau
        w = 1.0 / d
        y_new = np.einsum("nl,nld->nd", w, v) / w.sum(axis=1)[:, None]
        move = np.linalg.norm(y_new - y[active], axis=-1)
        y[active] = y_new
        still = move > tau
        if not still.any():
            break
        idx = np.flatnonzero(active)
        active[idx[~still]] = False
    return y


def geometric_median(vecs: np.ndarray, tau: float = 1e-7) -> np.ndarray:
    """Geometric median of a point list, minimizing sum of Euclidean distances."""
    vecs = np.atleast_2d(np.asarray(vecs, float))
    if vecs.shape[0] == 0:
        raise ValueError("empty input")
    if tau <= 0:
        raise ValueError("tau must be positive")
    return geometric_median_batch(vecs[None], tau)[0]


def _pool(dirs: np.ndarray, cfg: SamplerConfig) -> np.ndarray:
    """Pool (L, n, D) per-slice directions to (n, D)."""
    if cfg.pooling == "mean":
        return dirs.mean(axis=0)
    return geometric_median_batch(np.swapaxes(dirs, 0, 1), cfg.tau)


def _slice_pass_sphere(sl, X, nu_atoms, p):
    proj_mu, t_mu = slicing.slice_coords_sphere(sl, X)
    proj_nu, t_nu = slicing.slice_coords_sphere(sl, nu_atoms)
    perm = ot1d.solve_circle(t_mu, t_nu, p=p)
    targets = proj_nu[perm]
    moved = manifold.rotate_along_slice_sphere(proj_mu, targets, X)
    dirs = manifold.log_sphere(X, moved)
    energy = float(np.mean(ot1d.circle_dist(t_mu, t_nu[perm]) ** p))
    return dirs, energy


def _slice_pass_hyper(sl, X, nu_atoms, p):
    proj_mu, t_mu = slicing.slice_coords_hyper(sl, X)
    proj_nu, t_nu = slicing.slice_coords_hyper(sl, nu_atoms)
    perm = ot1d.solve_line(t_mu, t_nu)
    targets = proj_nu[perm]
    moved = manifold.rotate_along_slice_hyper(proj_mu, targets, X)
    dirs = manifold.log_hyper(X, moved)
    energy = float(np.mean(np.abs(t_mu - t_nu[perm]) ** p))
    return dirs, energy


def nesots_run(
    nu: DiscreteMeasure,
    cfg: SamplerConfig,
    mu0: np.ndarray | None = None,
    slice_sampler=None,
) -> tuple[DiscreteMeasure, RunTrace]:
    """Optimize n samples toward the discrete target nu on S^d or H^d.

    mu0 overrides the default initialization (a uniform subsample of nu);
    slice_sampler overrides the slice draw (testing seam, e.g. rotated
    frames). Returns the final measure and the per-iteration energy trace.
    """
    if nu.space not in ("sphere", "hyperbolic"):
        raise ValueError("nesots_run handles sphere/hyperbolic targets; "
                         "use projective_run for projective ones")
    cfg.validate(len(nu))
    spherical = nu.space == "sphere"
    d = nu.dim
    if slice_sampler is None:
        slice_sampler = slicing.sample_slice_sphere if spherical else slicing.sample_slice_hyper
    slice_pass = _slice_pass_sphere if spherical else _slice_pass_hyper
    renorm = manifold.to_sphere if spherical else manifold.to_hyperboloid
    exp_map = manifold.exp_sphere if spherical else manifold.exp_hyper

    if mu0 is None:
        X = subsample(nu, cfg.n, _rng_for(cfg.seed, 0, 0)).atoms.copy()
    else:
        X = np.array(mu0, dtype=float)
        if X.shape != (cfg.n, d + 1):
            raise ValueError(f"mu0 must have shape ({cfg.n}, {d + 1})")

    decay = cfg.resolved_decay()
    trace = RunTrace()
    dirs = np.empty((cfg.L, cfg.n, d + 1))
    for j in range(cfg.K):
        t0 = time.perf_counter()
        energies = np.empty(cfg.L)
        for l in range(cfg.L):
            rng = _rng_for(cfg.seed, j + 1, l)
            tilde = subsample(nu, cfg.n, rng).atoms
            for _ in range(MAX_SLICE_RETRIES):
                sl = slice_sampler(rng, d)
                try:
                    dirs[l], energies[l] = slice_pass(sl, X, tilde, cfg.p)
                    break
                except slicing.OrthogonalToSliceError:
                    continue
            else:
                raise RuntimeError("could not draw a non-degenerate slice")
        step = cfg.gamma0 * decay**j
        X = renorm(exp_map(X, step * _pool(dirs, cfg)))
        trace.energy.append(float(energies.mean()))
        trace.seconds.append(time.perf_counter() - t0)
    return DiscreteMeasure(X, nu.space), trace


def projective_run(
    nu: DiscreteMeasure,
    cfg: SamplerConfig,
    mu0: np.ndarray | None = None,
    slice_sampler=None,
) -> tuple[DiscreteMeasure, RunTrace]:
    """Blue-noise sampling of an antipodally symmetric density on P^d.

    Keeps n sphere representatives; every slice projects the representatives
    together with their antipodes (projection commutes with negation), matches
    the 2n projections to a 2n target subsample, and pools each
    representative's direction with its antipode's (negated) one.
    """
    if nu.space != "projective":
        raise ValueError("projective_run needs a projective-space target")
    cfg.validate(len(nu), projective=True)
    mean_norm = float(np.linalg.norm(nu.atoms.mean(axis=0)))
    if mean_norm > 1e-9:
        raise ValueError(
            "target is not antipodally symmetric; build it with symmetrize_antipodal"
        )
    d = nu.dim
    n = cfg.n
    if slice_sampler is None:
        slice_sampler = slicing.sample_slice_sphere

    if mu0 is None:
        X = subsample(nu, n, _rng_for(cfg.seed, 0, 0)).atoms.copy()
    else:
        X = np.array(mu0, dtype=float)

    decay = cfg.resolved_decay()
    trace = RunTrace()
    dirs = np.empty((2 * cfg.L, n, d + 1))
    for j in range(cfg.K):
        t0 = time.perf_counter()
        energies = np.empty(cfg.L)
        W = np.concatenate([X, -X], axis=0)
        for l in range(cfg.L):
            rng = _rng_for(cfg.seed, j + 1, l)
            tilde = subsample(nu, 2 * n, rng).atoms
            for _ in range(MAX_SLICE_RETRIES):
                sl = slice_sampler(rng, d)
                try:
                    proj_w, t_w = slicing.slice_coords_sphere(sl, W)
                    proj_nu, t_nu = slicing.slice_coords_sphere(sl, tilde)
                    break
                except slicing.OrthogonalToSliceError:
                    continue
            else:
                raise RuntimeError("could not draw a non-degenerate slice")
            perm = ot1d.solve_circle(t_w, t_nu, p=cfg.p)
            targets = proj_nu[perm]
            moved = manifold.rotate_along_slice_sphere(proj_w, targets, W)
            full = manifold.log_sphere(W, moved)
            dirs[l] = full[:n]
            dirs[cfg.L + l] = -full[n:]  # antipodal directions transport by negation
            energies[l] = float(np.mean(ot1d.circle_dist(t_w, t_nu[perm]) ** cfg.p))
        step = cfg.gamma0 * decay**j
        X = manifold.to_sphere(manifold.exp_sphere(X, step * _pool(dirs, cfg)))
        trace.energy.append(float(energies.mean()))
        trace.seconds.append(time.perf_counter() - t0)
    return DiscreteMeasure(X, "projective"), trace


def make_affine_line_measure(lines: np.ndarray) -> DiscreteMeasure:
    """Map affine-line coefficient triples (a, b, c) to projective atoms on S^2.

    The line a x + b y + c = 0 is scale-invariant, so each triple is
    normalized onto the unit sphere; the original line is recovered up to
    scale by reading the coefficients back.
    """
    lines = np.atleast_2d(np.asarray(lines, float))
    if lines.shape[1] != 3:
        raise ValueError("expected (a, b, c) triples")
    if np.any(np.linalg.norm(lines[:, :2], axis=1) == 0.0):
        raise ValueError("degenerate line: (a, b) = (0, 0)")
    return DiscreteMeasure(manifold.to_sphere(lines), "projective")


def line_signed_distance(coeffs: np.ndarray, xy: np.ndarray) -> np.ndarray:
    """Signed distance of 2D points to the line a x + b y + c = 0."""
    a, b, c = np.asarray(coeffs, float)
    xy = np.atleast_2d(np.asarray(xy, float))
    return (a * xy[:, 0] + b * xy[:, 1] + c) / np.hypot(a, b)


def quaternions_to_matrices(q: np.ndarray) -> np.ndarray:
    """Rotation matrices of unit quaternions (x, y, z, w); q and -q agree."""
    q = np.atleast_2d(np.asarray(q, float))
    x, y, z, w = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((q.shape[0], 3, 3))
    out[:, 0, 0] = 1 - 2 * (y * y + z * z)
    out[:, 0, 1] = 2 * (x * y - z * w)
    out[:, 0, 2] = 2 * (x * z + y * w)
    out[:, 1, 0] = 2 * (x * y + z * w)
    out[:, 1, 1] = 1 - 2 * (x * x + z * z)
    out[:, 1, 2] = 2 * (y * z - x * w)
    out[:, 2, 0] = 2 * (x * z - y * w)
    out[:, 2, 1] = 2 * (y * z + x * w)
    out[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def rotate_by_quaternion(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply the rotation action of unit quaternions to a single vector."""
    return quaternions_to_matrices(q) @ np.asarray(v, float)
