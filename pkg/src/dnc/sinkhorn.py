"""Balanced within-class cluster assignment by Sinkhorn-Knopp iterations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import DTYPE, as_matrix, similarity_matrix


@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float = 0.05
    iterations: int = 3

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigError(f"iterations must be an integer >= 1, got {self.iterations}")


def _logsumexp(a: np.ndarray, axis=None) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    s = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return s if axis is not None else s.reshape(())


def sinkhorn_log_assign(scores, cfg: SinkhornConfig) -> np.ndarray:
    """Log of the soft assignment returned by :func:`sinkhorn_soft_assign`."""
    scores = as_matrix(scores, "scores")
    k, n = scores.shape
    if k < 1 or n < 1:
        raise ShapeError(f"scores must be non-empty, got {scores.shape}")
    if not np.all(np.isfinite(scores)):
        raise ShapeError("scores must be finite")
    log_q = scores / cfg.epsilon
    log_q = log_q - _logsumexp(log_q)
    log_k, log_n = np.log(k), np.log(n)
    for _ in range(cfg.iterations):
        # rows to mass 1/K each, then columns to mass 1/N each
        log_q = log_q - _logsumexp(log_q, axis=1) - log_k
        log_q = log_q - _logsumexp(log_q, axis=0) - log_n
    return log_q + log_n


def sinkhorn_soft_assign(scores, cfg: SinkhornConfig = SinkhornConfig()) -> np.ndarray:
    """Soft K x N assignment for a K x N score matrix.

    The exponentiated scores are normalized to total mass 1, then ``R`` rounds
    of row normalization (each row to 1/K) and column normalization (each
    column to 1/N) are applied, and the result is scaled by N so each column
    sums to 1. Row sums approach N/K as the number of rounds grows.

    The computation runs in the log domain, so arbitrarily large scores or
    tiny ``epsilon`` cannot overflow.
    """
    return np.exp(sinkhorn_log_assign(scores, cfg)).astype(DTYPE)


def harden(q) -> np.ndarray:
    """Per-column argmax of ``q``; ties go to the smallest cluster index."""
    q = as_matrix(q, "assignment")
    return np.argmax(q, axis=0).astype(np.int64)


def cluster_class(features, centroids, cfg: SinkhornConfig = SinkhornConfig()) -> np.ndarray:
    """Assign each row of ``features`` (N x d) to one of the K ``centroids`` rows."""
    scores = similarity_matrix(centroids, features)
    # argmax of the log assignment equals argmax of its exponential but avoids
    # ties manufactured by underflow
    return harden(sinkhorn_log_assign(scores, cfg))
