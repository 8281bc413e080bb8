"""Synthetic model collections whose limiting discrepancy is known exactly.

Each model i has a latent vector phi_i. Query j carries an s x q map R_j with
orthonormal columns and an offset c_j, and the population mean response of
model i to query j is ``sqrt(m) * R_j @ phi_i + c_j``. With that scaling the
(1/m)-normalized Frobenius discrepancy between population means equals
``||phi_i - phi_k||`` for every m, not just in the limit. Replicates are
Gaussian around the mean with isotropic covariance whose trace is gamma_ij.

Random draws come from Philox streams keyed by (seed, purpose, indices), so
replicate k of pair (i, j) depends only on (seed, i, j, k): never on the
iteration order, the number of models or queries, or how many replicates
follow it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import POPULATION_MEAN, DissimilarityMatrix, ModelMatrix, ResponseBatch, pairwise_distances
from .discrepancy import CollectionTable

MANIFOLDS = ("unit_sphere", "unit_cube")
_QUERY_STREAM = 0
_NOISE_STREAM = 1


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the given integer key path under `seed`."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


@dataclass(frozen=True)
class LatentSpec:
    q: int = 2
    manifold: str = "unit_cube"
    seed: int = 0

    def __post_init__(self):
        if int(self.q) < 1:
            raise ValueError(f"latent dimension must be >= 1, got {self.q}")
        if self.manifold not in MANIFOLDS:
            raise ValueError(f"unknown manifold {self.manifold!r}; choose from {MANIFOLDS}")


@dataclass(frozen=True)
class GammaSchedule:
    """Covariance-trace schedule: ``c`` (constant) or ``c * r**alpha`` (power)."""

    kind: str = "constant"
    c: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "power"):
            raise ValueError(f"unknown gamma schedule kind {self.kind!r}")
        # c = 0 is allowed: it gives the noiseless collection
        if not self.c >= 0:
            raise ValueError(f"gamma schedule needs c >= 0, got {self.c}")

    def value(self, r: int) -> float:
        if self.kind == "constant":
            return float(self.c)
        return float(self.c) * float(r) ** float(self.alpha)


def sample_latents(spec: LatentSpec, n: int) -> np.ndarray:
    """n i.i.d. latent vectors, uniform on the unit sphere S^(q-1) or the cube [0, 1]^q."""
    if n < 2:
        raise ValueError(f"need at least two latents, got n={n}")
    rng = substream(spec.seed, 2)
    if spec.manifold == "unit_cube":
        return rng.random((n, spec.q))
    x = rng.standard_normal((n, spec.q))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    while np.any(norms == 0):  # measure-zero, but keep the rows on the sphere
        bad = norms[:, 0] == 0
        x[bad] = rng.standard_normal((int(bad.sum()), spec.q))
        norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / norms


def query_maps(seed: int, m: int, s: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-query orthonormal maps (m, s, q) and offsets (m, s)."""
    if s < q:
        raise ValueError(f"embedding dimension s={s} must be at least the latent dimension q={q}")
    maps = np.empty((m, s, q))
    offsets = np.empty((m, s))
    for j in range(m):
        rng = substream(seed, _QUERY_STREAM, j)
        qmat, _ = np.linalg.qr(rng.standard_normal((s, q)))
        maps[j] = qmat
        offsets[j] = rng.standard_normal(s)
    return maps, offsets


def replicate_noise(seed: int, model_idx, query_idx, r: int, s: int) -> np.ndarray:
    """Standard-normal replicate draws, shape (len(model_idx), len(query_idx), r, s)."""
    model_idx, query_idx = list(model_idx), list(query_idx)
    out = np.empty((len(model_idx), len(query_idx), r, s))
    for a, i in enumerate(model_idx):
        for b, j in enumerate(query_idx):
            out[a, b] = substream(seed, _NOISE_STREAM, i, j).standard_normal((r, s))
    return out


@dataclass(frozen=True)
class SyntheticCollection:
    """Ground-truth generator for n models, m queries, r replicates per pair."""

    latents: np.ndarray
    maps: np.ndarray
    offsets: np.ndarray
    gamma: np.ndarray
    r: int
    seed: int = 0

    def __post_init__(self):
        m, s, q = self.maps.shape
        if self.latents.shape[1] != q:
            raise ValueError("latent dimension does not match the query maps")
        if self.offsets.shape != (m, s):
            raise ValueError("offsets must be m x s")
        if self.gamma.shape != (self.latents.shape[0], m):
            raise ValueError("gamma must be n x m")
        if np.any(self.gamma < 0):
            raise ValueError("covariance traces must be nonnegative")
        if int(self.r) < 1:
            raise ValueError("need at least one replicate")
        for arr in (self.latents, self.maps, self.offsets, self.gamma):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.latents.shape[0]

    @property
    def m(self) -> int:
        return self.maps.shape[0]

    @property
    def s(self) -> int:
        return self.maps.shape[1]

    @property
    def q(self) -> int:
        return self.maps.shape[2]

    @property
    def model_ids(self) -> tuple:
        return tuple(f"model{i}" for i in range(self.n))

    @property
    def query_ids(self) -> tuple:
        return tuple(f"query{j}" for j in range(self.m))


def make_collection(n: int, m: int, r: int, s: int, latent: LatentSpec,
                    gamma: GammaSchedule, seed: int = 0) -> SyntheticCollection:
    latents = sample_latents(latent, n)
    maps, offsets = query_maps(seed, m, s, latent.q)
    gam = np.full((n, m), gamma.value(r))
    return SyntheticCollection(latents, maps, offsets, gam, int(r), int(seed))


def mean_tensor(coll: SyntheticCollection, model_idx=None, query_idx=None) -> np.ndarray:
    """Population means for the selected models and queries, shape (n', m', s).

    The sqrt scaling uses the number of *selected* queries, so any selection
    (including one with repeats) keeps the discrepancy equal to the latent
    distance.
    """
    model_idx = np.arange(coll.n) if model_idx is None else np.asarray(model_idx)
    query_idx = np.arange(coll.m) if query_idx is None else np.asarray(query_idx)
    maps = coll.maps[query_idx]
    proj = np.einsum("jsq,iq->ijs", maps, coll.latents[model_idx])
    return np.sqrt(len(query_idx)) * proj + coll.offsets[query_idx][None, :, :]


def population_means(coll: SyntheticCollection, i: int) -> ModelMatrix:
    """Population mean-response matrix of model `i`."""
    if not 0 <= i < coll.n:
        raise IndexError(f"model index {i} out of range for {coll.n} models")
    return ModelMatrix(coll.model_ids[i], mean_tensor(coll, [i])[0], POPULATION_MEAN)


def exact_limit_matrix(coll: SyntheticCollection) -> DissimilarityMatrix:
    """Latent Euclidean distances ``||phi_i - phi_k||``, the limit of the discrepancy."""
    if coll.n < 2:
        raise ValueError("need at least two models")
    return DissimilarityMatrix(coll.model_ids, pairwise_distances(coll.latents))


def sample_collection(coll: SyntheticCollection) -> CollectionTable:
    """Draw ``coll.r`` Gaussian replicates for every (model, query) pair.

    Replicates of pair (i, j) have mean ``(mu_i)_j`` and covariance
    ``(gamma_ij / s) I_s``.
    """
    mu = mean_tensor(coll)
    noise = replicate_noise(coll.seed, range(coll.n), range(coll.m), coll.r, coll.s)
    scale = np.sqrt(coll.gamma / coll.s)[:, :, None, None]
    draws = mu[:, :, None, :] + scale * noise
    mids, qids = coll.model_ids, coll.query_ids
    batches = {
        (mids[i], qids[j]): ResponseBatch(mids[i], qids[j], draws[i, j])
        for i in range(coll.n)
        for j in range(coll.m)
    }
    return CollectionTable(mids, qids, batches)


@dataclass(frozen=True)
class CollectionSpec:
    """Everything needed to build a collection except the replicate count."""

    n: int
    m: int
    s: int = 4
    latent: LatentSpec = LatentSpec()
    gamma: GammaSchedule = GammaSchedule()
    seed: int = 0

    def build(self, r: int) -> SyntheticCollection:
        return make_collection(self.n, self.m, r, self.s, self.latent, self.gamma, self.seed)
