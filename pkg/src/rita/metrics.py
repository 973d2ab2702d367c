"""Embedding-vector similarity primitives shared by the matching pipeline.

The central quantity is the similarity distance: a normalized L1 divergence
where each component difference is scaled by the larger magnitude of the two
components (guarded by ``eps`` so zero vectors compare cleanly). It is
symmetric, non-negative, and exactly zero for component-wise equal inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_EPS = 1e-8


class DimensionMismatch(ValueError):
    """Two vectors (or a vector and an index) disagree on dimensionality."""

    def __init__(self, expected: int, got: int):
        super().__init__(f"dimension mismatch: expected N={expected}, got N={got}")
        self.expected = expected
        self.got = got


@dataclass(frozen=True)
class MetricConfig:
    """Similarity-distance settings.

    ``eps`` keeps the per-component denominator positive when both compared
    components are zero (or vanishingly small). ``n_dims``, when set, pins
    the dimensionality every compared vector must have.
    """

    eps: float = DEFAULT_EPS
    n_dims: int | None = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.n_dims is not None and self.n_dims < 1:
            raise ValueError(f"n_dims must be >= 1, got {self.n_dims}")


DEFAULT_METRIC = MetricConfig()


def as_vector(values, n_dims: int | None = None) -> np.ndarray:
    """Validate and coerce one embedding vector to a float64 array.

    Rejects empty, non-1-D, and non-finite input; raises DimensionMismatch
    when ``n_dims`` is given and the length differs.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if v.size < 1:
        raise ValueError("vector must have at least one component")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    if n_dims is not None and v.size != n_dims:
        raise DimensionMismatch(n_dims, v.size)
    return v


def similarity_distance(a, b, cfg: MetricConfig = DEFAULT_METRIC) -> float:
    """sum_n |a_n - b_n| / max(|a_n|, |b_n|, eps), accumulated in float64."""
    va = as_vector(a, cfg.n_dims)
    vb = as_vector(b, cfg.n_dims)
    if va.size != vb.size:
        raise DimensionMismatch(va.size, vb.size)
    num = np.abs(va - vb)
    den = np.maximum(np.maximum(np.abs(va), np.abs(vb)), cfg.eps)
    return float((num / den).sum())


def similarity_distance_to_rows(v: np.ndarray, rows: np.ndarray,
                                eps: float = DEFAULT_EPS) -> np.ndarray:
    """Similarity distance from one query vector to every row of a (K, N) matrix.

    Hot path for matching: no validation, callers pass pre-checked arrays.
    """
    num = np.abs(rows - v)
    den = np.maximum(np.maximum(np.abs(rows), np.abs(v)), eps)
    return (num / den).sum(axis=1)


def l1_distance(a, b) -> float:
    """Plain L1 distance; the candidate-generation proxy for the approximate index."""
    va = as_vector(a)
    vb = as_vector(b)
    if va.size != vb.size:
        raise DimensionMismatch(va.size, vb.size)
    return float(np.abs(va - vb).sum())
