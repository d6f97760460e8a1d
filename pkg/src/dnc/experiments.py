"""Desk-scale ablation harness shared by ``scripts/`` and the acceptance tests.

One recipe is fixed here and used for every arm; arms differ only in the
overrides they pass. Each arm is trained over ``SEEDS`` and summarized by
the median test accuracy.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .data import LabeledDataset, gen_synthetic, train_test_split
from .net import encode
from .trainer import TrainConfig, evaluate, knn_induction_eval, train

DATASET = dict(classes=4, subclusters=4, dim=16, per_cluster=200, sigma=0.08, seed=0)
TEST_FRAC = 0.2
SEEDS = (0, 1, 2, 3, 4)
RECIPE = TrainConfig(
    epochs=20,
    batch_size=64,
    k=4,
    mu=0.999,
    epsilon=0.05,
    sinkhorn_iters=3,
    memory_batches=10,
    temperature=1.0,
    learning_rate=0.1,
    hidden=(64, 64),
    dim=16,
)
TEMPERATURE_GRID = (1.0, 5.0, 10.0, 20.0)


def standard_split() -> tuple[LabeledDataset, LabeledDataset]:
    return train_test_split(gen_synthetic(**DATASET), TEST_FRAC, DATASET["seed"])


def run_arm(train_set, test_set, seed: int, **overrides) -> dict:
    cfg = replace(RECIPE, seed=seed, **overrides)
    state = train(train_set, cfg, num_classes=DATASET["classes"])
    return {
        "top1": evaluate(state, test_set).top1,
        "knn_fine": knn_induction_eval(state.encoder, train_set, test_set),
        "state": state,
    }


def median_arm(train_set, test_set, key: str = "top1", seeds=SEEDS, **overrides) -> tuple[float, list[float]]:
    values = [run_arm(train_set, test_set, s, **overrides)[key] for s in seeds]
    return float(np.median(values)), values


def tune_temperature(train_set, seed: int = 0, grid=TEMPERATURE_GRID, **overrides) -> float:
    """Pick the DNC temperature with the best accuracy on a validation split
    carved out of ``train_set`` (the test set is never consulted)."""
    fit, val = train_test_split(train_set, TEST_FRAC, seed + 1000)
    best, best_acc = grid[0], -1.0
    for tau in grid:
        acc = run_arm(fit, val, seed, temperature=tau, **overrides)["top1"]
        if acc > best_acc:
            best, best_acc = tau, acc
    return best


def anchored_embeddings_match(state, train_set) -> bool:
    """True when every sub-centroid is bitwise equal to the current embedding
    of some training sample."""
    feats = encode(state.encoder, train_set.inputs)
    rows = state.bank.centroids.reshape(-1, state.bank.dim)
    return all(np.any(np.all(feats == r, axis=1)) for r in rows)
