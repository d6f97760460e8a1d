"""Nearest-sub-centroid decision rule and its cross-entropy loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centroids import SubCentroidBank
from .errors import ConfigError, DegenerateInputError, LabelError, ShapeError
from .numerics import as_matrix, similarity_matrix


@dataclass(frozen=True)
class LossConfig:
    temperature: float = 1.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")


@dataclass(frozen=True)
class Prediction:
    class_id: int
    winning_sub: tuple[int, int]
    class_scores: np.ndarray


def sub_scores(x, bank: SubCentroidBank) -> np.ndarray:
    """N x C x K similarities; padding slots of classes with smaller K are -inf."""
    x = as_matrix(x, "features")
    if x.shape[1] != bank.dim:
        raise ShapeError(f"features have dim {x.shape[1]}, bank has {bank.dim}")
    c, k, d = bank.centroids.shape
    sims = similarity_matrix(x, bank.centroids.reshape(c * k, d)).reshape(-1, c, k)
    return np.where(bank.mask[None], sims, -np.inf)


def class_scores(x, bank: SubCentroidBank, return_winners: bool = False):
    """Per-class best sub-centroid similarity, N x C.

    With ``return_winners`` also returns the N x C index of the winning
    sub-centroid (first maximum on ties).
    """
    sims = sub_scores(x, bank)
    winners = np.argmax(sims, axis=2)
    scores = np.take_along_axis(sims, winners[..., None], axis=2)[..., 0]
    return (scores, winners) if return_winners else scores


def predict(x, bank: SubCentroidBank) -> list[Prediction]:
    """Winner-takes-all: the class owning the most similar sub-centroid."""
    scores, winners = class_scores(x, bank, return_winners=True)
    out = []
    for n in range(scores.shape[0]):
        c = int(np.argmax(scores[n]))
        out.append(Prediction(c, (c, int(winners[n, c])), scores[n].copy()))
    return out


def predict_labels(x, bank: SubCentroidBank) -> np.ndarray:
    return np.argmax(class_scores(x, bank), axis=1)


def _check_labels(labels, n: int, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,) or not np.issubdtype(labels.dtype, np.integer):
        raise LabelError(f"expected {n} integer labels")
    if n == 0:
        raise ShapeError("loss needs at least one sample")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise LabelError(f"labels must lie in [0, {num_classes})")
    return labels.astype(np.int64)


def softmax_xent(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. ``logits``."""
    n = logits.shape[0]
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    log_z = np.log(np.sum(np.exp(shifted), axis=1))
    log_p = shifted - log_z[:, None]
    loss = -float(np.mean(log_p[np.arange(n), labels]))
    grad = np.exp(log_p)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def dnc_loss(x, labels, bank: SubCentroidBank, cfg: LossConfig = LossConfig()):
    """Mean cross-entropy of ``softmax(temperature * class_scores)``.

    Returns ``(loss, grad_x)``. The bank is treated as a constant; the max over
    sub-centroids routes each class's gradient through its winning row only.
    """
    x = as_matrix(x, "features")
    if not np.all(np.isfinite(x)):
        raise DegenerateInputError("features contain NaN or Inf")
    labels = _check_labels(labels, x.shape[0], bank.num_classes)
    scores, winners = class_scores(x, bank, return_winners=True)
    loss, g_logits = softmax_xent(cfg.temperature * scores, labels)
    g_scores = cfg.temperature * g_logits
    # winning sub-centroid per (n, c): N x C x d
    win_rows = bank.centroids[np.arange(bank.num_classes)[None, :], winners]
    grad_x = np.zeros_like(x)
    for c in range(bank.num_classes):
        grad_x += g_scores[:, c, None] * win_rows[:, c, :]
    return loss, grad_x
