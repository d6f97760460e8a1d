"""Dense vector/matrix kernel.

Every reduction over the feature axis is accumulated strictly left to right
(index 0 first), vectorised over the other axes. Results for a given row are
therefore independent of how many rows are in the batch and of the BLAS
build, which is what makes checkpoints bit-reproducible.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, ShapeError

DTYPE = np.float64

# Inputs whose norm is already this close to 1 are returned untouched, which
# makes normalization idempotent bit for bit.
_UNIT_SLACK = 4 * np.finfo(DTYPE).eps


def as_matrix(a, name: str = "array") -> np.ndarray:
    arr = np.asarray(a, dtype=DTYPE)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def ordered_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a @ b`` with the inner dimension summed left to right."""
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=DTYPE)
    for j in range(a.shape[1]):
        out += a[:, j, None] * b[None, j, :]
    return out


def row_sq_norms(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    acc = np.zeros(x.shape[:-1], dtype=DTYPE)
    for j in range(x.shape[-1]):
        acc += x[..., j] * x[..., j]
    return acc


def l2_normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=DTYPE)
    if v.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DegenerateInputError("vector has non-finite entries")
    norm = float(np.sqrt(row_sq_norms(v)))
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize a zero vector")
    if abs(norm - 1.0) <= _UNIT_SLACK:
        return v.copy()
    return v / norm


def l2_normalize_rows(x) -> np.ndarray:
    """Normalize every row of ``x``; a zero row raises ``DegenerateInputError``."""
    x = as_matrix(x, "features")
    if not np.all(np.isfinite(x)):
        raise DegenerateInputError("feature matrix has non-finite entries")
    norms = np.sqrt(row_sq_norms(x))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateInputError(f"zero-norm rows at indices {zero.tolist()}")
    scale = np.where(np.abs(norms - 1.0) <= _UNIT_SLACK, 1.0, norms)
    return x / scale[:, None]


def similarity_matrix(x, p) -> np.ndarray:
    """Dot products of every row of ``x`` (N x d) with every row of ``p`` (M x d).

    For row-normalized inputs this is the cosine similarity, i.e. the negated
    cosine distance.
    """
    x = as_matrix(x, "x")
    p = as_matrix(p, "p")
    if x.shape[1] != p.shape[1]:
        raise ShapeError(f"dimension mismatch: {x.shape[1]} vs {p.shape[1]}")
    return ordered_matmul(x, p.T)


def cosine_distance(u, v) -> float:
    """``-u.v / (|u| |v|)``: -1 for parallel vectors, +1 for antiparallel."""
    u = np.asarray(u, dtype=DTYPE)
    v = np.asarray(v, dtype=DTYPE)
    if u.shape != v.shape:
        raise ShapeError(f"dimension mismatch: {u.shape} vs {v.shape}")
    un = l2_normalize(u)
    vn = l2_normalize(v)
    return -float(similarity_matrix(un[None, :], vn[None, :])[0, 0])
