"""Small fully-connected encoder with hand-written backprop.

Layout: affine -> ReLU -> ... -> affine -> row L2 normalization. Every
matrix product goes through ``ordered_matmul`` so a row's embedding does not
depend on which other rows share its batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count

import numpy as np

from .errors import ConfigError, ContractError, DegenerateInputError, ShapeError
from .numerics import _UNIT_SLACK, DTYPE, as_matrix, ordered_matmul, row_sq_norms

_versions = count()


@dataclass
class EncoderParams:
    weights: list  # each in x out
    biases: list  # each out
    version: int = field(default_factory=lambda: next(_versions), compare=False)

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=DTYPE) for w in self.weights]
        self.biases = [np.asarray(b, dtype=DTYPE) for b in self.biases]
        if not self.weights or len(self.weights) != len(self.biases):
            raise ShapeError("need one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {i}: weight {w.shape} does not match bias {b.shape}")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeError(f"layer {i} input {w.shape[0]} != previous output {self.weights[i - 1].shape[1]}")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim] + [w.shape[1] for w in self.weights]

    def arrays(self) -> list[np.ndarray]:
        """Flat parameter list, ``[W0, b0, W1, b1, ...]``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "EncoderParams":
        return EncoderParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class Tape:
    version: int
    activations: list  # inputs to each affine layer
    pre_acts: list  # affine outputs
    norms: np.ndarray
    features: np.ndarray


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")


def init_encoder(sizes, seed: int) -> EncoderParams:
    """Glorot-uniform weights, zero biases. ``sizes`` = [input, hidden..., d]."""
    if len(sizes) < 2 or min(sizes) < 1:
        raise ConfigError(f"bad layer sizes {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return EncoderParams(weights, biases)


def forward(params: EncoderParams, inputs):
    """Returns ``(features, tape)`` with unit-norm feature rows."""
    h = as_matrix(inputs, "inputs")
    if h.shape[1] != params.input_dim:
        raise ShapeError(f"inputs have width {h.shape[1]}, encoder expects {params.input_dim}")
    acts, pres = [], []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        acts.append(h)
        z = ordered_matmul(h, w) + b[None, :]
        pres.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    norms = np.sqrt(row_sq_norms(h))
    zero = np.flatnonzero(~(norms > 0.0))
    if zero.size:
        raise DegenerateInputError(f"encoder produced zero or non-finite features for rows {zero.tolist()}")
    feats = h / np.where(np.abs(norms - 1.0) <= _UNIT_SLACK, 1.0, norms)[:, None]
    return feats, Tape(params.version, acts, pres, norms, feats)


def encode(params: EncoderParams, inputs) -> np.ndarray:
    return forward(params, inputs)[0]


def normalize_backward(features: np.ndarray, norms: np.ndarray, grad_features: np.ndarray) -> np.ndarray:
    """Apply the transposed Jacobian ``(I - x x^T) / |h|`` of ``h -> h / |h|`` row-wise."""
    radial = np.sum(grad_features * features, axis=1, keepdims=True)
    return (grad_features - radial * features) / norms[:, None]


def backward(params: EncoderParams, tape: Tape, grad_features) -> list[np.ndarray]:
    """Gradients in the order of ``params.arrays()``."""
    if tape.version != params.version:
        raise ContractError("tape was recorded with different parameters")
    g = np.asarray(grad_features, dtype=DTYPE)
    if g.shape != tape.features.shape:
        raise ShapeError(f"grad has shape {g.shape}, features have {tape.features.shape}")
    g = normalize_backward(tape.features, tape.norms, g)
    grads = [None] * (2 * len(params.weights))
    for i in reversed(range(len(params.weights))):
        if i != len(params.weights) - 1:
            g = g * (tape.pre_acts[i] > 0.0)
        grads[2 * i] = ordered_matmul(tape.activations[i].T, g)
        grads[2 * i + 1] = np.sum(g, axis=0)
        if i:
            g = ordered_matmul(g, params.weights[i].T)
    return grads


def sgd_step(params: EncoderParams, grads, cfg: SgdConfig) -> EncoderParams:
    """``p <- p - lr * g``; returns fresh params (old tapes become stale)."""
    arrays = [p - cfg.learning_rate * np.asarray(g, dtype=DTYPE) for p, g in zip(params.arrays(), grads)]
    return EncoderParams(arrays[0::2], arrays[1::2])
