"""Parametric softmax classifier on top of the same encoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .head import _check_labels, softmax_xent
from .numerics import DTYPE, as_matrix, ordered_matmul


@dataclass
class LinearClassifier:
    W: np.ndarray  # d x C
    b: np.ndarray  # C

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=DTYPE)
        self.b = np.asarray(self.b, dtype=DTYPE)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise ShapeError(f"W must be d x C and b length C, got {self.W.shape}, {self.b.shape}")

    @property
    def num_classes(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "LinearClassifier":
        return LinearClassifier(self.W.copy(), self.b.copy())


def init_linear(dim: int, num_classes: int, seed: int) -> LinearClassifier:
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(dim)
    return LinearClassifier(rng.uniform(-bound, bound, size=(dim, num_classes)), np.zeros(num_classes))


def linear_logits(x, clf: LinearClassifier) -> np.ndarray:
    x = as_matrix(x, "features")
    if x.shape[1] != clf.W.shape[0]:
        raise ShapeError(f"features have dim {x.shape[1]}, classifier expects {clf.W.shape[0]}")
    return ordered_matmul(x, clf.W) + clf.b[None, :]


def softmax_ce_loss(x, labels, clf: LinearClassifier):
    """Returns ``(loss, grad_x, grad_W, grad_b)`` for mean softmax cross-entropy."""
    x = as_matrix(x, "features")
    labels = _check_labels(labels, x.shape[0], clf.num_classes)
    loss, g = softmax_xent(linear_logits(x, clf), labels)
    grad_x = ordered_matmul(g, clf.W.T)
    grad_w = ordered_matmul(x.T, g)
    grad_b = np.sum(g, axis=0)
    return loss, grad_x, grad_w, grad_b
