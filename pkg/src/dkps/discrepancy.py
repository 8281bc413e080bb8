"""Replicate-mean matrices and the (1/m)-scaled Frobenius discrepancy between models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import SAMPLE_MEAN, DissimilarityMatrix, ModelMatrix, ResponseBatch


@dataclass(frozen=True)
class CollectionTable:
    """Every model's replicate batch for every query.

    ``batches`` maps ``(model_id, query_id)`` to a :class:`ResponseBatch`. The
    table must be complete and share one embedding dimension; replicate counts
    may differ between pairs (``r`` is then ``None``).
    """

    model_ids: tuple
    query_ids: tuple
    batches: Mapping

    def __post_init__(self):
        model_ids = tuple(str(x) for x in self.model_ids)
        query_ids = tuple(str(x) for x in self.query_ids)
        if len(set(model_ids)) != len(model_ids) or len(set(query_ids)) != len(query_ids):
            raise ValueError("model and query ids must be unique")
        if not model_ids or not query_ids:
            raise ValueError("a collection needs at least one model and one query")
        missing = [(i, j) for i in model_ids for j in query_ids if (i, j) not in self.batches]
        if missing:
            raise ValueError(f"incomplete collection: {len(missing)} missing (model, query) pairs, e.g. {missing[0]}")
        dims = {b.s for b in self.batches.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent embedding dimensions {sorted(dims)}")
        object.__setattr__(self, "model_ids", model_ids)
        object.__setattr__(self, "query_ids", query_ids)
        object.__setattr__(self, "batches", dict(self.batches))

    @property
    def n(self) -> int:
        return len(self.model_ids)

    @property
    def m(self) -> int:
        return len(self.query_ids)

    @property
    def s(self) -> int:
        return next(iter(self.batches.values())).s

    @property
    def r(self) -> int | None:
        counts = {self.batches[(i, j)].r for i in self.model_ids for j in self.query_ids}
        return counts.pop() if len(counts) == 1 else None

    def batch(self, model_id: str, query_id: str) -> ResponseBatch:
        return self.batches[(model_id, query_id)]


def mean_response_matrix(table: CollectionTable, model_id: str) -> ModelMatrix:
    """Row j is the average of the model's replicate vectors for query j."""
    if model_id not in table.model_ids:
        raise KeyError(f"unknown model id {model_id!r}")
    rows = [table.batch(model_id, q).vectors.mean(axis=0) for q in table.query_ids]
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise ValueError(f"inconsistent vector dimensions for model {model_id!r}")
    return ModelMatrix(model_id, np.vstack(rows), SAMPLE_MEAN)


def mean_response_matrices(table: CollectionTable) -> list[ModelMatrix]:
    return [mean_response_matrix(table, i) for i in table.model_ids]


def scaled_frobenius_distances(stack: np.ndarray) -> np.ndarray:
    """Pairwise ``(1/m)||A_i - A_j||_F`` for a stack of n matrices of shape (m, s).

    The result is exactly symmetric with an exactly zero diagonal.
    """
    stack = np.asarray(stack, dtype=float)
    n, m = stack.shape[:2]
    flat = stack.reshape(n, -1)
    out = np.zeros((n, n))
    for i in range(n - 1):
        diff = flat[i + 1:] - flat[i]
        out[i, i + 1:] = np.sqrt(np.einsum("ij,ij->i", diff, diff)) / m
    return out + out.T


def discrepancy_matrix(mats: Sequence[ModelMatrix]) -> DissimilarityMatrix:
    """Pairwise discrepancy ``(1/m)||X_i - X_j||_F`` between model matrices.

    Applied to population means this is the model mean discrepancy matrix;
    applied to replicate means it is its sample estimate.
    """
    mats = list(mats)
    if len(mats) < 2:
        raise ValueError("need at least two models for a discrepancy matrix")
    shapes = {mat.shape for mat in mats}
    if len(shapes) != 1:
        raise ValueError(f"model matrices differ in shape: {sorted(shapes)}")
    roles = {mat.role_tag for mat in mats}
    if len(roles) != 1:
        raise ValueError("cannot mix sample-mean and population-mean matrices")
    values = scaled_frobenius_distances(np.stack([mat.rows for mat in mats]))
    return DissimilarityMatrix(tuple(mat.model_id for mat in mats), values)


def table_discrepancy(table: CollectionTable) -> DissimilarityMatrix:
    return discrepancy_matrix(mean_response_matrices(table))

