"""Mutual cross-attention fusion of the DE and PSD cubes.

Each frequency band is fused independently: the channels x frames slices of
the two cubes attend to each other in both directions and the results are
added. There are no learned parameters anywhere in this stage.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ShapeMismatchError
from .features import FeatureCube
from .tensor import matmul, softmax_rows, tensor, transpose2d


def attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Scaled dot-product attention: softmax(Q K^T / sqrt(d_k)) V.

    d_k is the last-dimension size of the query. Every output row is a convex
    combination of the rows of V.
    """
    q, k, v = tensor(q), tensor(k), tensor(v)
    if not (q.shape == k.shape == v.shape) or q.ndim != 2:
        raise ShapeMismatchError(
            f"attention operands must share one rank-2 shape, got {q.shape}, {k.shape}, {v.shape}"
        )
    d_k = q.shape[-1]
    scores = matmul(q, transpose2d(k)) / math.sqrt(d_k)
    return matmul(softmax_rows(scores), v)


def mca(f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
    """Symmetric two-direction fusion: Atten(f1, f2, f2) + Atten(f2, f1, f1)."""
    f1, f2 = tensor(f1), tensor(f2)
    if f1.shape != f2.shape:
        raise ShapeMismatchError(f"mca operands must share a shape, got {f1.shape} and {f2.shape}")
    return attention(f1, f2, f2) + attention(f2, f1, f1)


def fuse_cubes(de: FeatureCube, psd: FeatureCube) -> FeatureCube:
    """Band-by-band MCA of the DE and PSD cubes into one fused cube."""
    if de.kind != "DE" or psd.kind != "PSD":
        raise ValueError(f"fuse_cubes expects (DE, PSD) cubes, got ({de.kind}, {psd.kind})")
    if de.values.shape != psd.values.shape:
        raise ShapeMismatchError(
            f"cube shapes disagree: {de.values.shape} vs {psd.values.shape}"
        )
    fused = np.empty_like(de.values)
    for b in range(de.values.shape[1]):
        fused[:, b, :] = mca(de.values[:, b, :], psd.values[:, b, :])
    return FeatureCube("FUSED", fused)
