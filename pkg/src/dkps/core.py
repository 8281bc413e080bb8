"""Shared domain types, the raw-stress objective, and the row-wise error norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SAMPLE_MEAN = "sample_mean"
POPULATION_MEAN = "population_mean"


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ResponseBatch:
    """Embedded replicate responses of one model to one query (r x s)."""

    model_id: str
    query_id: str
    vectors: np.ndarray

    def __post_init__(self):
        v = _frozen(self.vectors)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(
                f"batch ({self.model_id}, {self.query_id}) needs an r x s array "
                f"with r, s >= 1, got shape {v.shape}"
            )
        object.__setattr__(self, "vectors", v)

    @property
    def r(self) -> int:
        return self.vectors.shape[0]

    @property
    def s(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class ModelMatrix:
    """An m x s mean-response matrix, either replicate means or population means."""

    model_id: str
    rows: np.ndarray
    role_tag: str = SAMPLE_MEAN

    def __post_init__(self):
        rows = _frozen(self.rows)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"model matrix {self.model_id!r} must be m x s, got {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError(f"model matrix {self.model_id!r} has non-finite entries")
        if self.role_tag not in (SAMPLE_MEAN, POPULATION_MEAN):
            raise ValueError(f"unknown role_tag {self.role_tag!r}")
        object.__setattr__(self, "rows", rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric, hollow, nonnegative n x n matrix with model labels.

    Construction validates the invariants; use :meth:`from_array` to
    symmetrize an almost-symmetric array first.
    """

    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        labels = tuple(str(x) for x in self.labels)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError(f"dissimilarity matrix must be square, got {vals.shape}")
        if len(labels) != vals.shape[0]:
            raise ValueError(f"{len(labels)} labels for a {vals.shape[0]} x {vals.shape[0]} matrix")
        if not np.all(np.isfinite(vals)):
            raise ValueError("dissimilarity matrix has non-finite entries")
        if np.any(np.diag(vals) != 0):
            raise ValueError("dissimilarity matrix must be hollow (zero diagonal)")
        if np.any(vals < 0):
            raise ValueError("dissimilarity matrix must be nonnegative")
        if not np.array_equal(vals, vals.T):
            raise ValueError("dissimilarity matrix must be symmetric")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_array(cls, values, labels: Sequence | None = None, atol: float = 1e-9):
        """Symmetrize and zero the diagonal of `values`, refusing gross asymmetry."""
        v = np.asarray(values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"dissimilarity matrix must be square, got {v.shape}")
        scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
        if np.max(np.abs(v - v.T), initial=0.0) > atol * scale:
            raise ValueError("dissimilarity matrix is not symmetric")
        if np.max(np.abs(np.diag(v)), initial=0.0) > atol * scale:
            raise ValueError("dissimilarity matrix is not hollow")
        v = 0.5 * (v + v.T)
        np.fill_diagonal(v, 0.0)
        if labels is None:
            labels = [str(i) for i in range(v.shape[0])]
        return cls(tuple(labels), v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Configuration:
    """n points in R^d, the raw stress they attain, and solver provenance."""

    labels: tuple
    points: np.ndarray
    stress: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError(f"configuration points must be n x d with d >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("configuration has non-finite coordinates")
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != pts.shape[0]:
            raise ValueError(f"{len(labels)} labels for {pts.shape[0]} points")
        if self.stress < 0:
            raise ValueError("stress must be nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "stress", float(self.stress))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _points(x) -> np.ndarray:
    return x.points if isinstance(x, Configuration) else np.asarray(x, dtype=float)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, DissimilarityMatrix) else np.asarray(x, dtype=float)


def pairwise_distances(points) -> np.ndarray:
    """Euclidean distance matrix between the rows of `points` (exact zeros on the diagonal)."""
    z = _points(points)
    diff = z[:, None, :] - z[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def raw_stress(config, target) -> float:
    """Raw stress of a configuration against a target dissimilarity matrix.

    Sums ``(||z_i - z_j|| - target[i, j])**2`` over all *ordered* pairs, so each
    unordered pair is counted twice and the diagonal contributes nothing.

    Parameters
    ----------
    config : Configuration or (n, d) array
    target : DissimilarityMatrix or (n, n) array
    """
    z = _points(config)
    delta = _values(target)
    if z.ndim != 2 or delta.shape != (z.shape[0], z.shape[0]):
        raise ValueError(
            f"configuration with {z.shape[0] if z.ndim == 2 else '?'} points "
            f"does not match target of shape {delta.shape}"
        )
    resid = pairwise_distances(z) - delta
    return float(np.sum(resid * resid))


def match_shapes(a, b):
    pa, pb = _points(a), _points(b)
    if pa.shape != pb.shape:
        raise ValueError(f"shape mismatch: {pa.shape} vs {pb.shape}")
    if isinstance(a, Configuration) and isinstance(b, Configuration) and a.labels != b.labels:
        raise ValueError("label order mismatch between configurations")
    return pa, pb


def avg_l2(a, b) -> float:
    """Mean over rows of the Euclidean distance between matching rows of `a` and `b`."""
    pa, pb = match_shapes(a, b)
    if pa.shape[0] == 0:
        raise ValueError("empty configuration")
    return float(np.mean(np.linalg.norm(pa - pb, axis=1)))


def two_to_infinity(m) -> float:
    """Largest row Euclidean norm of `m`."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.size == 0:
        raise ValueError("two-to-infinity norm of an empty matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return float(np.max(np.linalg.norm(arr, axis=1)))

