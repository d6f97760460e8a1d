"""Single-file checkpoints.

Layout::

    DNC-CHECKPOINT\\n
    <manifest: one line of JSON>\\n
    <payload: raw little-endian arrays, in manifest order>

The manifest records the format version, classifier kind, config snapshot,
RNG state and, for every array, its name, dtype and shape. The feature
memory is transient and not stored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baseline import LinearClassifier
from .centroids import SubCentroidBank
from .errors import DataError
from .net import EncoderParams

MAGIC = b"DNC-CHECKPOINT\n"
FORMAT_VERSION = 1
_DTYPES = {"f8": "<f8", "f4": "<f4", "i8": "<i8"}


@dataclass
class Checkpoint:
    config: dict
    encoder: EncoderParams
    bank: SubCentroidBank | None = None
    linear: LinearClassifier | None = None
    rng_state: dict | None = None
    extra: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def kind(self) -> str:
        return "dnc" if self.bank is not None else "softmax"


def _arrays(ckpt: Checkpoint, float_code: str):
    out = []
    for i, (w, b) in enumerate(zip(ckpt.encoder.weights, ckpt.encoder.biases)):
        out += [(f"encoder.W{i}", w, float_code), (f"encoder.b{i}", b, float_code)]
    if ckpt.bank is not None:
        out += [("bank.centroids", ckpt.bank.centroids, float_code), ("bank.per_class", ckpt.bank.per_class, "i8")]
        if ckpt.bank.anchor_ids is not None:
            out.append(("bank.anchor_ids", ckpt.bank.anchor_ids, "i8"))
    if ckpt.linear is not None:
        out += [("linear.W", ckpt.linear.W, float_code), ("linear.b", ckpt.linear.b, float_code)]
    return out


def save_checkpoint(path, ckpt: Checkpoint, precision: str = "f8") -> None:
    """``precision="f4"`` down-casts float arrays to 32 bits."""
    if precision not in ("f8", "f4"):
        raise ValueError("precision must be 'f8' or 'f4'")
    arrays = _arrays(ckpt, precision)
    blobs = [np.ascontiguousarray(a, dtype=_DTYPES[code]).tobytes() for _, a, code in arrays]
    manifest = {
        "format_version": ckpt.format_version,
        "kind": ckpt.kind,
        "config": ckpt.config,
        "rng_state": ckpt.rng_state,
        "extra": ckpt.extra,
        "arrays": [{"name": n, "dtype": code, "shape": list(np.shape(a))} for n, a, code in arrays],
        "payload_bytes": sum(len(b) for b in blobs),
    }
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(manifest, sort_keys=True).encode() + b"\n")
        for b in blobs:
            fh.write(b)


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise DataError(f"{path}: not a checkpoint file")
    end = raw.find(b"\n", len(MAGIC))
    if end < 0:
        raise DataError(f"{path}: manifest is not terminated")
    try:
        manifest = json.loads(raw[len(MAGIC) : end])
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: unreadable manifest: {exc}") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {manifest.get('format_version')!r}")
    payload = raw[end + 1 :]
    expected = 0
    for entry in manifest["arrays"]:
        expected += int(np.prod(entry["shape"], dtype=np.int64)) * 8 // (2 if entry["dtype"] == "f4" else 1)
    if expected != manifest["payload_bytes"]:
        raise DataError(f"{path}: manifest shapes disagree with declared payload size")
    if len(payload) != expected:
        raise DataError(f"{path}: payload has {len(payload)} bytes, manifest expects {expected}")
    arrays, offset = {}, 0
    for entry in manifest["arrays"]:
        dt = np.dtype(_DTYPES[entry["dtype"]])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(payload, dtype=dt, count=count, offset=offset).reshape(entry["shape"])
        arrays[entry["name"]] = arr.astype(np.int64 if dt.kind == "i" else np.float64)
        offset += count * dt.itemsize
    n_layers = sum(1 for name in arrays if name.startswith("encoder.W"))
    encoder = EncoderParams(
        [arrays[f"encoder.W{i}"] for i in range(n_layers)], [arrays[f"encoder.b{i}"] for i in range(n_layers)]
    )
    bank = linear = None
    if manifest["kind"] == "dnc":
        bank = SubCentroidBank(arrays["bank.centroids"], arrays["bank.per_class"], arrays.get("bank.anchor_ids"))
    else:
        linear = LinearClassifier(arrays["linear.W"], arrays["linear.b"])
    return Checkpoint(manifest["config"], encoder, bank, linear, manifest["rng_state"], manifest.get("extra", {}))


def from_state(state, extra: dict | None = None) -> Checkpoint:
    """Snapshot a ``trainer.TrainState`` (memory excluded)."""
    info = {"epoch": state.epoch, "step": state.step, "loss_curve": list(state.loss_curve)}
    info.update(extra or {})
    return Checkpoint(
        state.config.to_dict(),
        state.encoder,
        state.bank,
        state.linear,
        state.rng.bit_generator.state,
        info,
    )


def to_state(ckpt: Checkpoint):
    """Rebuild a ``trainer.TrainState`` from a checkpoint, with an empty memory."""
    from .memory import FeatureMemory
    from .trainer import TrainConfig, TrainState

    cfg = TrainConfig(**ckpt.config)
    rng = np.random.default_rng()
    if ckpt.rng_state is not None:
        rng.bit_generator.state = ckpt.rng_state
    memory = None
    if ckpt.bank is not None:
        memory = FeatureMemory(cfg.memory_batches, cfg.batch_size, ckpt.bank.num_classes, ckpt.bank.dim)
    return TrainState(
        cfg,
        ckpt.encoder,
        ckpt.bank,
        ckpt.linear,
        memory,
        rng,
        step=int(ckpt.extra.get("step", 0)),
        epoch=int(ckpt.extra.get("epoch", 0)),
        loss_curve=list(ckpt.extra.get("loss_curve", [])),
    )
