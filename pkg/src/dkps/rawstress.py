"""Raw-stress MDS: Torgerson start, Guttman-transform majorization, seeded restarts."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import Configuration, DissimilarityMatrix, pairwise_distances, raw_stress

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverSettings:
    """Knobs for :func:`mds`.

    ``restarts`` counts the Gaussian random starts tried in addition to the
    classical-MDS start. Iteration stops once the relative stress decrease
    falls below ``rel_tol`` or after ``max_iters`` Guttman steps.
    """

    dim: int = 2
    max_iters: int = 2000
    rel_tol: float = 1e-10
    restarts: int = 4
    seed: int = 0

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError(f"embedding dimension must be >= 1, got {self.dim}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.restarts) < 0:
            raise ValueError(f"restarts must be >= 0, got {self.restarts}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def _target_values(target) -> np.ndarray:
    delta = target.values if isinstance(target, DissimilarityMatrix) else np.asarray(target, dtype=float)
    if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
        raise ValueError(f"target must be square, got {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise ValueError("target has non-finite entries")
    return delta


def _labels(target, n):
    return target.labels if isinstance(target, DissimilarityMatrix) else tuple(str(i) for i in range(n))


def _center(z: np.ndarray) -> np.ndarray:
    return z - z.mean(axis=0)


def _orient(vecs: np.ndarray) -> np.ndarray:
    """Flip each column so that its first non-negligible entry is positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        tol = 1e-12 * max(np.max(np.abs(col)), 1e-300)
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size and col[nz[0]] < 0:
            out[:, k] = -col
    return out


def torgerson(delta: np.ndarray, d: int) -> np.ndarray:
    n = delta.shape[0]
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ (delta * delta) @ j
    b = 0.5 * (b + b.T)
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1][:d]
    evals = np.clip(evals[order], 0.0, None)
    evecs = _orient(evecs[:, order])
    z = np.zeros((n, d))
    z[:, : len(order)] = evecs * np.sqrt(evals)
    return _center(z)


def classical_mds_init(target, d: int) -> Configuration:
    """Classical (Torgerson) MDS of `target` into `d` dimensions.

    Negative eigenvalues of the double-centred squared dissimilarities are
    clamped to zero; when ``d`` exceeds the available eigenpairs the extra
    columns are zero.
    """
    delta = _target_values(target)
    n = delta.shape[0]
    if n < 2:
        raise ValueError("classical MDS needs at least two objects")
    if d < 1:
        raise ValueError(f"embedding dimension must be >= 1, got {d}")
    z = torgerson(delta, d)
    return Configuration(_labels(target, n), z, raw_stress(z, delta), {"start": "classical"})


def guttman_transform(z: np.ndarray, delta: np.ndarray) -> np.ndarray:
    n = z.shape[0]
    dist = pairwise_distances(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(dist > 0, -delta / dist, 0.0)
    np.fill_diagonal(b, 0.0)
    np.fill_diagonal(b, -b.sum(axis=1))
    return _center(b @ z / n)


def guttman_step(current: Configuration, target) -> Configuration:
    """One SMACOF update ``Z+ = B(Z) Z / n``, centred, with its stress recomputed."""
    delta = _target_values(target)
    z = current.points
    if delta.shape != (z.shape[0], z.shape[0]):
        raise ValueError(f"configuration with {z.shape[0]} points does not match target {delta.shape}")
    new = guttman_transform(z, delta)
    return Configuration(current.labels, new, raw_stress(new, delta), dict(current.meta))


def _descend(z, delta, max_iters, rel_tol, history):
    stress = raw_stress(z, delta)
    trace = [stress] if history else None
    converged = False
    it = 0
    while it < max_iters:
        z_new = guttman_transform(z, delta)
        new_stress = raw_stress(z_new, delta)
        it += 1
        if trace is not None:
            trace.append(new_stress)
        decrease = (stress - new_stress) / max(stress, 1e-300)
        z, stress = z_new, new_stress
        if decrease < rel_tol:
            converged = True
            break
    return z, stress, it, converged, trace


def _random_start(rng: np.random.Generator, n: int, d: int, delta: np.ndarray) -> np.ndarray:
    # scale so that the expected squared inter-point distance matches mean(delta^2)
    mean_sq = float(np.sum(delta * delta)) / max(n * (n - 1), 1)
    scale = np.sqrt(mean_sq / (2 * d)) if mean_sq > 0 else 1.0
    return _center(rng.standard_normal((n, d)) * scale)


def mds(target, settings: SolverSettings | None = None, history: bool = False) -> Configuration:
    """Minimize raw stress against `target`; returns one member of the minimizer set.

    Runs Guttman iterations from the classical-MDS configuration and from
    ``settings.restarts`` seeded Gaussian configurations, then keeps the run
    with the lowest final stress (ties go to the earlier start). The result is
    column-centred. ``meta`` records the winning start, its iteration count,
    whether the stopping rule fired, and, with ``history=True``, the stress
    after every step of every run.
    """
    settings = settings or SolverSettings()
    delta = _target_values(target)
    n = delta.shape[0]
    if n < 2:
        raise ValueError("MDS needs at least two objects")
    d = int(settings.dim)
    seq = np.random.SeedSequence(int(settings.seed))
    starts = [torgerson(delta, d)]
    for child in seq.spawn(int(settings.restarts)):
        starts.append(_random_start(np.random.Generator(np.random.Philox(child)), n, d, delta))

    best = None
    traces = []
    for idx, z0 in enumerate(starts):
        z, stress, iters, converged, trace = _descend(z0, delta, int(settings.max_iters), settings.rel_tol, history)
        traces.append(trace)
        if best is None or stress < best[1]:
            best = (z, stress, iters, converged, idx)
    z, stress, iters, converged, idx = best
    if not converged:
        log.debug("mds: best start %d hit max_iters=%d (stress %.3g)", idx, settings.max_iters, stress)
    meta = {
        "start": idx,
        "iterations": iters,
        "converged": converged,
        "restarts": int(settings.restarts),
        "seed": int(settings.seed),
    }
    if history:
        meta["stress_history"] = traces
    return Configuration(_labels(target, n), z, stress, meta)
