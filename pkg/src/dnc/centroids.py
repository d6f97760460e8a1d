"""The C x K sub-centroid bank and its momentum / anchoring updates."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DataError, DegenerateInputError, ShapeError
from .numerics import DTYPE, l2_normalize, l2_normalize_rows, row_sq_norms, similarity_matrix


class DegenerateUpdateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MomentumConfig:
    mu: float = 0.999

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigError(f"mu must lie in [0, 1], got {self.mu}")


@dataclass
class SubCentroidBank:
    """Unit-norm class sub-centroids, ``centroids[c, k]`` is the k-th of class c.

    ``per_class`` holds the number of active sub-centroids of each class when
    classes use different K; slots ``k >= per_class[c]`` are padding and never
    take part in scoring. ``anchor_ids[c, k]`` is the training-row index the
    sub-centroid is pinned to, or ``None`` before anchoring.
    """

    centroids: np.ndarray
    per_class: np.ndarray = None
    anchor_ids: np.ndarray | None = None

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=DTYPE)
        if self.centroids.ndim != 3 or min(self.centroids.shape) < 1:
            raise ShapeError(f"bank must be C x K x d with all sizes >= 1, got {self.centroids.shape}")
        c, k, _ = self.centroids.shape
        if self.per_class is None:
            self.per_class = np.full(c, k, dtype=np.int64)
        self.per_class = np.asarray(self.per_class, dtype=np.int64)
        if self.per_class.shape != (c,) or self.per_class.min() < 1 or self.per_class.max() > k:
            raise ShapeError(f"per_class must be {c} values in [1, {k}]")
        if self.anchor_ids is not None:
            self.anchor_ids = np.asarray(self.anchor_ids, dtype=np.int64)
            if self.anchor_ids.shape != (c, k):
                raise ShapeError(f"anchor_ids must have shape {(c, k)}")

    @property
    def num_classes(self) -> int:
        return self.centroids.shape[0]

    @property
    def max_k(self) -> int:
        return self.centroids.shape[1]

    @property
    def dim(self) -> int:
        return self.centroids.shape[2]

    @property
    def mask(self) -> np.ndarray:
        """Boolean C x K mask of active sub-centroids."""
        return np.arange(self.max_k)[None, :] < self.per_class[:, None]

    def copy(self) -> "SubCentroidBank":
        return SubCentroidBank(
            self.centroids.copy(),
            self.per_class.copy(),
            None if self.anchor_ids is None else self.anchor_ids.copy(),
        )


def init_bank(num_classes: int, k, dim: int, seed: int) -> SubCentroidBank:
    """Random unit-vector bank. ``k`` is an int or a per-class sequence."""
    per_class = np.full(num_classes, k, dtype=np.int64) if np.isscalar(k) else np.asarray(k, dtype=np.int64)
    if num_classes < 1 or dim < 1 or per_class.size != num_classes or per_class.min() < 1:
        raise ConfigError("bank dimensions must all be >= 1")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((num_classes, int(per_class.max()), dim))
    while np.any(row_sq_norms(raw) == 0.0):  # pragma: no cover - probability zero
        raw = rng.standard_normal(raw.shape)
    flat = l2_normalize_rows(raw.reshape(-1, dim))
    return SubCentroidBank(flat.reshape(raw.shape), per_class)


def cluster_means(features: np.ndarray, assignment: np.ndarray, k: int):
    """Normalized per-cluster means and member counts.

    Rows of clusters without members (or whose members cancel out) are zero
    and their count is zero.
    """
    features = np.asarray(features, dtype=DTYPE)
    means = np.zeros((k, features.shape[1]), dtype=DTYPE)
    counts = np.zeros(k, dtype=np.int64)
    for j in range(k):
        members = features[assignment == j]
        if len(members) == 0:
            continue
        total = np.zeros(features.shape[1], dtype=DTYPE)
        for row in members:
            total += row
        try:
            means[j] = l2_normalize(total / len(members))
        except DegenerateInputError:
            continue
        counts[j] = len(members)
    return means, counts


def momentum_update(bank: SubCentroidBank, c: int, means, counts, cfg: MomentumConfig) -> SubCentroidBank:
    """Blend ``mu * old + (1 - mu) * mean`` for every sub-centroid of class ``c``
    with a nonzero count, renormalize, and return the updated bank.

    The input bank is not modified. A blend that cancels to the zero vector
    keeps the old centroid and emits ``DegenerateUpdateWarning``.
    """
    if not isinstance(cfg, MomentumConfig):
        cfg = MomentumConfig(float(cfg))
    means = np.asarray(means, dtype=DTYPE)
    counts = np.asarray(counts)
    kc = int(bank.per_class[c])
    if means.shape != (kc, bank.dim) or counts.shape != (kc,):
        raise ShapeError(f"class {c} expects means {(kc, bank.dim)} and counts {(kc,)}")
    out = bank.copy()
    for k in np.flatnonzero(counts > 0):
        old = bank.centroids[c, k]
        blend = cfg.mu * old + (1.0 - cfg.mu) * means[k]
        try:
            out.centroids[c, k] = l2_normalize(blend)
        except DegenerateInputError:
            warnings.warn(f"zero-norm blend for sub-centroid ({c}, {k}); kept old value", DegenerateUpdateWarning)
    return out


def anchor_to_observations(bank: SubCentroidBank, train_features, train_labels) -> SubCentroidBank:
    """Replace every sub-centroid by the most similar training embedding of its class.

    Ties go to the lowest row index. Two sub-centroids of one class may end up
    on the same sample.
    """
    feats = np.asarray(train_features, dtype=DTYPE)
    labels = np.asarray(train_labels, dtype=np.int64)
    if feats.ndim != 2 or feats.shape[1] != bank.dim or len(labels) != len(feats):
        raise ShapeError("train features must be N x d with one label per row")
    counts = np.bincount(labels, minlength=bank.num_classes)[: bank.num_classes]
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise DataError(f"classes without training samples: {empty.tolist()}")
    out = bank.copy()
    ids = np.zeros((bank.num_classes, bank.max_k), dtype=np.int64)
    for c in range(bank.num_classes):
        rows = np.flatnonzero(labels == c)
        sims = similarity_matrix(bank.centroids[c], feats[rows])
        best = np.argmax(sims, axis=1)
        ids[c] = rows[best]
        # padding slots mirror slot 0 so the bank stays unit-norm
        ids[c, bank.per_class[c]:] = ids[c, 0]
        out.centroids[c] = feats[ids[c]]
    out.anchor_ids = ids
    return out


def refresh_anchored(bank: SubCentroidBank, encoder, inputs) -> SubCentroidBank:
    """Re-embed every anchor sample with ``encoder`` (a callable mapping raw
    rows to normalized features) and write the embeddings into the bank."""
    if bank.anchor_ids is None:
        raise ConfigError("bank is not anchored")
    inputs = np.asarray(inputs, dtype=DTYPE)
    ids = bank.anchor_ids
    if ids.min() < 0 or ids.max() >= len(inputs):
        raise DataError(f"anchor ids outside the dataset of {len(inputs)} samples")
    flat = ids.reshape(-1)
    feats = l2_normalize_rows(encoder(inputs[flat]))
    return replace(bank.copy(), centroids=feats.reshape(bank.centroids.shape))
