"""Perspective-space (DKPS) embeddings of generative-model collections.

Models are represented by their replicate-mean embedded responses to a shared
query set; the (1/m)-scaled Frobenius discrepancies between those matrices
are embedded in R^d by raw-stress multidimensional scaling.
"""

from .alignment import Alignment, aligned_error, procrustes
from .core import (
    Configuration,
    DissimilarityMatrix,
    ModelMatrix,
    ResponseBatch,
    avg_l2,
    raw_stress,
    two_to_infinity,
)
from .discrepancy import CollectionTable, discrepancy_matrix, mean_response_matrix
from .rawstress import SolverSettings, classical_mds_init, guttman_step, mds

__all__ = [
    "Alignment",
    "CollectionTable",
    "Configuration",
    "DissimilarityMatrix",
    "ModelMatrix",
    "ResponseBatch",
    "SolverSettings",
    "aligned_error",
    "avg_l2",
    "classical_mds_init",
    "discrepancy_matrix",
    "guttman_step",
    "mds",
    "mean_response_matrix",
    "procrustes",
    "raw_stress",
    "two_to_infinity",
]

__version__ = "0.1.0"
