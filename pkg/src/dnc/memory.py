"""Bounded FIFO of past-batch embeddings used to widen the clustering population."""

from __future__ import annotations

import numpy as np

from .errors import LabelError, ShapeError
from .numerics import DTYPE


class FeatureMemory:
    """Holds at most ``capacity_batches * batch_size`` (embedding, label) pairs.

    Eviction is oldest-first across all classes. Embeddings are stored as
    given and never re-encoded.
    """

    def __init__(self, capacity_batches: int, batch_size: int, num_classes: int, dim: int):
        if capacity_batches < 0 or batch_size < 1:
            raise ShapeError("capacity_batches must be >= 0 and batch_size >= 1")
        self.capacity_batches = capacity_batches
        self.batch_size = batch_size
        self.num_classes = num_classes
        self.dim = dim
        self._feats = np.zeros((0, dim), dtype=DTYPE)
        self._labels = np.zeros(0, dtype=np.int64)
        self._ages = np.zeros(0, dtype=np.int64)
        self._age = 0

    @property
    def capacity(self) -> int:
        return self.capacity_batches * self.batch_size

    def __len__(self) -> int:
        return len(self._labels)

    def push_batch(self, features, labels) -> "FeatureMemory":
        features = np.asarray(features, dtype=DTYPE)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[1] != self.dim or len(labels) != len(features):
            raise ShapeError(f"expected N x {self.dim} features with N labels")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise LabelError(f"labels must lie in [0, {self.num_classes})")
        self._age += 1
        if self.capacity == 0:
            return self
        cap = self.capacity
        self._feats = np.concatenate([self._feats, features])[-cap:]
        self._labels = np.concatenate([self._labels, labels])[-cap:]
        self._ages = np.concatenate([self._ages, np.full(len(labels), self._age)])[-cap:]
        return self

    def entries(self):
        """(features, labels, ages) arrays, oldest first."""
        return self._feats.copy(), self._labels.copy(), self._ages.copy()

    def gather_class(self, current_features, current_labels, c: int) -> np.ndarray:
        """Class-``c`` rows of the current batch followed by class-``c`` memory rows
        (oldest to newest). May be empty."""
        current_features = np.asarray(current_features, dtype=DTYPE)
        current_labels = np.asarray(current_labels, dtype=np.int64)
        current = current_features[current_labels == c].reshape(-1, self.dim)
        return np.concatenate([current, self._feats[self._labels == c]], axis=0)
