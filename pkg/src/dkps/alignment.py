"""Orthogonal Procrustes alignment of one configuration onto another."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Configuration, match_shapes, avg_l2, two_to_infinity

METRICS = ("avg_l2", "two_to_infinity")


@dataclass(frozen=True)
class Alignment:
    """``target ~= source @ rotation + translation``; ``rotation`` may be a reflection."""

    rotation: np.ndarray
    translation: np.ndarray
    residual: float

    def apply(self, points) -> np.ndarray:
        pts = points.points if isinstance(points, Configuration) else np.asarray(points, dtype=float)
        return pts @ self.rotation + self.translation


def _orient_svd(u, vt):
    # make the largest-magnitude entry of each left singular vector positive;
    # flipping u_k together with v_k leaves U V^T unchanged on distinct spectra
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def procrustes(source, target_cfg, with_translation: bool = True) -> Alignment:
    """Best orthogonal map (plus optional shift) taking `source` onto `target_cfg`.

    Minimizes ``||target - source @ W - 1 a^T||_F`` over ``W`` in O(d) and, when
    `with_translation` is set, ``a`` in R^d.
    """
    src, tgt = match_shapes(source, target_cfg)
    if src.ndim != 2 or src.shape[0] < 1:
        raise ValueError("procrustes needs at least one point")
    d = src.shape[1]
    if with_translation:
        mu_s, mu_t = src.mean(axis=0), tgt.mean(axis=0)
    else:
        mu_s = mu_t = np.zeros(d)
    u, _, vt = np.linalg.svd((src - mu_s).T @ (tgt - mu_t))
    u, vt = _orient_svd(u, vt)
    w = u @ vt
    a = mu_t - mu_s @ w if with_translation else np.zeros(d)
    residual = float(np.linalg.norm(tgt - (src @ w + a)))
    return Alignment(w, a, residual)


def aligned_error(estimate, reference, metric: str = "avg_l2", with_translation: bool = True) -> float:
    """Error between `reference` and `estimate` after Procrustes-aligning the estimate to it.

    `metric` is ``"avg_l2"`` (mean row distance) or ``"two_to_infinity"``
    (largest row distance).
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    fit = procrustes(estimate, reference, with_translation)
    ref = reference.points if isinstance(reference, Configuration) else np.asarray(reference, dtype=float)
    aligned = fit.apply(estimate)
    if metric == "avg_l2":
        return avg_l2(ref, aligned)
    return two_to_infinity(ref - aligned)
