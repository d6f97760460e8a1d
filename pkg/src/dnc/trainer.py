"""Training loop, evaluation and the coarse-to-fine 1-NN induction protocol."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .baseline import LinearClassifier, init_linear, linear_logits, softmax_ce_loss
from .centroids import (
    MomentumConfig,
    SubCentroidBank,
    anchor_to_observations,
    cluster_means,
    init_bank,
    momentum_update,
    refresh_anchored,
)
from .data import LabeledDataset
from .errors import ConfigError, DataError, ShapeError
from .head import LossConfig, class_scores, dnc_loss
from .memory import FeatureMemory
from .net import EncoderParams, SgdConfig, backward, encode, forward, init_encoder, sgd_step
from .numerics import DTYPE, row_sq_norms, similarity_matrix
from .sinkhorn import SinkhornConfig, cluster_class

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    classifier_kind: str = "dnc"  # "dnc" | "softmax"
    k: int = 4
    k_map: list | None = None  # per-class K, overrides ``k``
    mu: float = 0.999
    epsilon: float = 0.05
    sinkhorn_iters: int = 3
    memory_batches: int = 0
    temperature: float = 1.0
    learning_rate: float = 0.1
    lr_schedule: str = "constant"  # "constant" | "poly"
    seed: int = 0
    anchor_after_epoch: int | None = None
    hidden: tuple = (64, 64)
    dim: int = 16
    clusterer: str = "sinkhorn"  # "sinkhorn" | "kmeans"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.classifier_kind not in ("dnc", "softmax"):
            raise ConfigError(f"unknown classifier kind {self.classifier_kind!r}")
        if self.clusterer not in ("sinkhorn", "kmeans"):
            raise ConfigError(f"unknown clusterer {self.clusterer!r}")
        if self.lr_schedule not in ("constant", "poly"):
            raise ConfigError(f"unknown lr schedule {self.lr_schedule!r}")
        for name in ("epochs", "batch_size", "k", "sinkhorn_iters", "dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.memory_batches < 0:
            raise ConfigError("memory_batches must be >= 0")
        if self.k_map is not None:
            self.k_map = [int(v) for v in self.k_map]
            if min(self.k_map) < 1:
                raise ConfigError("every per-class K must be >= 1")
        if self.anchor_after_epoch is not None and not 0 <= self.anchor_after_epoch < self.epochs:
            raise ConfigError("anchor_after_epoch must lie in [0, epochs)")
        # validated through their own constructors
        MomentumConfig(self.mu)
        SinkhornConfig(self.epsilon, self.sinkhorn_iters)
        LossConfig(self.temperature)
        SgdConfig(self.learning_rate)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class TrainState:
    config: TrainConfig
    encoder: EncoderParams
    bank: SubCentroidBank | None
    linear: LinearClassifier | None
    memory: FeatureMemory | None
    rng: np.random.Generator
    step: int = 0
    epoch: int = 0
    last_loss: float = float("nan")
    loss_curve: list = field(default_factory=list)

    @property
    def anchored(self) -> bool:
        return self.bank is not None and self.bank.anchor_ids is not None


@dataclass
class Metrics:
    top1: float
    top5: float
    top5_defined: bool
    loss_curve: list = field(default_factory=list)


def init_state(cfg: TrainConfig, input_dim: int, num_classes: int) -> TrainState:
    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    enc_seed, head_seed = (int(s.generate_state(1)[0]) for s in seeds[:2])
    encoder = init_encoder([input_dim, *cfg.hidden, cfg.dim], enc_seed)
    bank = linear = memory = None
    if cfg.classifier_kind == "dnc":
        if cfg.k_map is not None and len(cfg.k_map) != num_classes:
            raise ConfigError(f"k_map has {len(cfg.k_map)} entries for {num_classes} classes")
        bank = init_bank(num_classes, cfg.k_map if cfg.k_map is not None else cfg.k, cfg.dim, head_seed)
        memory = FeatureMemory(cfg.memory_batches, cfg.batch_size, num_classes, cfg.dim)
    else:
        linear = init_linear(cfg.dim, num_classes, head_seed)
    return TrainState(cfg, encoder, bank, linear, memory, np.random.default_rng(seeds[2]))


def kmeans_baseline_cluster(features, k: int, seed: int, max_iter: int = 100) -> np.ndarray:
    """Lloyd's k-means (squared Euclidean) from ``k`` distinct random points.

    Stops at an assignment fixpoint or after ``max_iter`` rounds. Ties go to
    the smallest cluster index; an emptied cluster keeps its previous center.
    """
    x = np.asarray(features, dtype=DTYPE)
    if x.ndim != 2:
        raise ShapeError("features must be N x d")
    if len(x) < k or k < 1:
        raise ShapeError(f"need at least k={k} samples, got {len(x)}")
    rng = np.random.default_rng(seed)
    centers = x[np.sort(rng.choice(len(x), size=k, replace=False))].copy()
    assign = None
    for _ in range(max_iter):
        d2 = row_sq_norms(x)[:, None] - 2.0 * similarity_matrix(x, centers) + row_sq_norms(centers)[None, :]
        new = np.argmin(d2, axis=1)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for j in range(k):
            members = x[assign == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    return assign


def _match_to_bank(features, assign, k_found: int, centroids) -> np.ndarray:
    """Relabel free k-means clusters onto bank slots by maximum-similarity matching."""
    means = np.zeros((k_found, centroids.shape[1]))
    for j in range(k_found):
        if np.any(assign == j):
            means[j] = features[assign == j].mean(axis=0)
    rows, cols = linear_sum_assignment(-similarity_matrix(means, centroids))
    relabel = np.empty(k_found, dtype=np.int64)
    relabel[rows] = cols
    return relabel[assign]


def _assign_class(state: TrainState, feats: np.ndarray, c: int) -> np.ndarray:
    cfg = state.config
    kc = int(state.bank.per_class[c])
    centroids = state.bank.centroids[c, :kc]
    if cfg.clusterer == "sinkhorn":
        return cluster_class(feats, centroids, SinkhornConfig(cfg.epsilon, cfg.sinkhorn_iters))
    if len(feats) < kc:
        return np.argmax(similarity_matrix(feats, centroids), axis=1)
    seed = int(state.rng.integers(2**31))
    return _match_to_bank(feats, kmeans_baseline_cluster(feats, kc, seed), kc, centroids)


def learning_rate(cfg: TrainConfig, step: int, total_steps: int) -> float:
    if cfg.lr_schedule == "poly":
        return cfg.learning_rate * (1.0 - step / total_steps) ** 0.9
    return cfg.learning_rate


def train_step(state: TrainState, inputs, labels, lr: float | None = None) -> TrainState:
    """One alternation: predict + loss, class-wise clustering and momentum
    update of the bank, memory push, then an SGD step on the encoder.

    The state is updated in place and returned.
    """
    cfg = state.config
    lr = cfg.learning_rate if lr is None else lr
    labels = np.asarray(labels, dtype=np.int64)
    feats, tape = forward(state.encoder, inputs)
    if cfg.classifier_kind == "softmax":
        loss, grad_x, grad_w, grad_b = softmax_ce_loss(feats, labels, state.linear)
        state.linear = LinearClassifier(state.linear.W - lr * grad_w, state.linear.b - lr * grad_b)
    else:
        loss, grad_x = dnc_loss(feats, labels, state.bank, LossConfig(cfg.temperature))
        if not state.anchored:
            momentum = MomentumConfig(cfg.mu)
            for c in np.unique(labels):
                pool = state.memory.gather_class(feats, labels, c)
                assign = _assign_class(state, pool, c)
                n_batch = int(np.sum(labels == c))
                means, counts = cluster_means(pool[:n_batch], assign[:n_batch], int(state.bank.per_class[c]))
                state.bank = momentum_update(state.bank, int(c), means, counts, momentum)
            state.memory.push_batch(feats, labels)
    grads = backward(state.encoder, tape, grad_x)
    state.encoder = sgd_step(state.encoder, grads, SgdConfig(lr))
    state.step += 1
    state.last_loss = loss
    return state


def run_epoch(state: TrainState, data: LabeledDataset, total_steps: int) -> float:
    cfg = state.config
    if state.anchored is False and cfg.anchor_after_epoch is not None and state.epoch >= cfg.anchor_after_epoch:
        state.bank = anchor_to_observations(state.bank, encode(state.encoder, data.inputs), data.labels)
    order = state.rng.permutation(len(data))
    losses = []
    for start in range(0, len(data), cfg.batch_size):
        idx = order[start : start + cfg.batch_size]
        train_step(state, data.inputs[idx], data.labels[idx], learning_rate(cfg, state.step, total_steps))
        losses.append(state.last_loss)
        if state.anchored:
            state.bank = refresh_anchored(state.bank, lambda x: encode(state.encoder, x), data.inputs)
    state.epoch += 1
    return float(np.mean(losses))


def train(data: LabeledDataset, cfg: TrainConfig, num_classes: int | None = None) -> TrainState:
    if len(data) == 0:
        raise DataError("empty training set")
    num_classes = data.num_classes if num_classes is None else num_classes
    state = init_state(cfg, data.input_dim, num_classes)
    steps_per_epoch = -(-len(data) // cfg.batch_size)
    total = steps_per_epoch * cfg.epochs
    for _ in range(cfg.epochs):
        loss = run_epoch(state, data, total)
        state.loss_curve.append(loss)
        log.debug("epoch %d loss %.6f", state.epoch, loss)
    return state


def head_scores(state: TrainState, feats: np.ndarray) -> np.ndarray:
    if state.config.classifier_kind == "softmax":
        return linear_logits(feats, state.linear)
    return class_scores(feats, state.bank)


def evaluate(state: TrainState, data: LabeledDataset) -> Metrics:
    """Top-1 / top-5 accuracy. With fewer than 5 classes top-5 is 1.0 and
    ``top5_defined`` is False."""
    if len(data) == 0:
        raise DataError("empty evaluation set")
    scores = head_scores(state, encode(state.encoder, data.inputs))
    n, num_classes = scores.shape
    top1 = float(np.mean(np.argmax(scores, axis=1) == data.labels))
    if num_classes < 5:
        return Metrics(top1, 1.0, False, list(state.loss_curve))
    # rank of the true class = number of classes scoring strictly higher
    true = scores[np.arange(n), data.labels]
    rank = np.sum(scores > true[:, None], axis=1)
    return Metrics(top1, float(np.mean(rank < 5)), True, list(state.loss_curve))


def nearest_neighbor_labels(train_feats, train_labels, query_feats) -> np.ndarray:
    """Label of the most cosine-similar training row (lowest index on ties)."""
    sims = similarity_matrix(query_feats, train_feats)
    return np.asarray(train_labels)[np.argmax(sims, axis=1)]


def knn_induction_eval(encoder: EncoderParams, train_set: LabeledDataset, test_set: LabeledDataset) -> float:
    """1-NN accuracy on fine labels in the encoder's feature space."""
    if len(train_set) == 0:
        raise DataError("empty training set")
    if train_set.fine_labels is None or test_set.fine_labels is None:
        raise DataError("induction evaluation needs fine labels")
    pred = nearest_neighbor_labels(encode(encoder, train_set.inputs), train_set.fine_labels, encode(encoder, test_set.inputs))
    return float(np.mean(pred == test_set.fine_labels))
