"""Labeled datasets: CSV ingestion and synthetic multimodal blobs."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .numerics import DTYPE, l2_normalize_rows


@dataclass
class LabeledDataset:
    inputs: np.ndarray  # N x m
    labels: np.ndarray  # N coarse class ids
    fine_labels: np.ndarray | None = None
    label_names: list[str] | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=DTYPE)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 or self.labels.shape != (len(self.inputs),):
            raise DataError(f"inputs {self.inputs.shape} and labels {self.labels.shape} disagree")
        if self.labels.size and self.labels.min() < 0:
            raise DataError("labels must be non-negative")
        if self.fine_labels is not None:
            self.fine_labels = np.asarray(self.fine_labels, dtype=np.int64)
            if self.fine_labels.shape != self.labels.shape:
                raise DataError("fine labels must have one entry per sample")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def num_classes(self) -> int:
        if self.label_names:
            return len(self.label_names)
        return int(self.labels.max()) + 1 if len(self) else 0

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        fine = None if self.fine_labels is None else self.fine_labels[idx]
        return LabeledDataset(self.inputs[idx], self.labels[idx], fine, self.label_names)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path) -> LabeledDataset:
    """Read ``label[,fine_label],x0,x1,...`` rows.

    A header row is optional; a ``fine_label`` column is recognised only
    through the header, so headerless files are read as label + features.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    has_fine = False
    if not all(_is_number(c) for c in rows[0][1]):
        header = [c.strip().lower() for c in rows[0][1]]
        has_fine = len(header) > 1 and header[1] == "fine_label"
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")
    n_meta = 2 if has_fine else 1
    width = len(rows[0][1])
    if width <= n_meta:
        raise DataError(f"{path}: line {rows[0][0]} has no feature columns")
    labels, fine, feats = [], [], []
    for lineno, row in rows:
        if len(row) != width:
            raise DataError(f"{path}: line {lineno} has {len(row)} columns, expected {width}")
        try:
            values = [float(c) for c in row]
        except ValueError:
            raise DataError(f"{path}: line {lineno} has a non-numeric cell") from None
        meta = values[:n_meta]
        if any(v != int(v) or v < 0 for v in meta):
            raise DataError(f"{path}: line {lineno} has an invalid label")
        if not all(np.isfinite(values[n_meta:])):
            raise DataError(f"{path}: line {lineno} has a non-finite feature")
        labels.append(int(meta[0]))
        if has_fine:
            fine.append(int(meta[1]))
        feats.append(values[n_meta:])
    return LabeledDataset(np.array(feats), np.array(labels), np.array(fine) if has_fine else None)


def save_csv(path, data: LabeledDataset) -> None:
    """Write with a header; floats use ``repr`` so a round trip is exact."""
    has_fine = data.fine_labels is not None
    header = ["label"] + (["fine_label"] if has_fine else []) + [f"x{j}" for j in range(data.input_dim)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for n in range(len(data)):
            meta = [int(data.labels[n])] + ([int(data.fine_labels[n])] if has_fine else [])
            w.writerow(meta + [repr(float(v)) for v in data.inputs[n]])


def gen_synthetic(classes: int, subclusters: int, dim: int, per_cluster: int, sigma: float, seed: int) -> LabeledDataset:
    """Gaussian blobs around random unit directions, ``subclusters`` per class.

    Fine label of a point is ``class * subclusters + subcluster``.
    """
    if min(classes, subclusters, dim, per_cluster) < 1 or sigma < 0:
        raise DataError("all sizes must be >= 1 and sigma >= 0")
    rng = np.random.default_rng(seed)
    centers = l2_normalize_rows(rng.standard_normal((classes * subclusters, dim)))
    fine = np.repeat(np.arange(classes * subclusters), per_cluster)
    noise = rng.standard_normal((len(fine), dim))
    inputs = centers[fine] + sigma * noise
    return LabeledDataset(inputs, fine // subclusters, fine)


def train_test_split(data: LabeledDataset, test_frac: float, seed: int):
    """Stratified by fine label when present, else by label."""
    strata = data.fine_labels if data.fine_labels is not None else data.labels
    rng = np.random.default_rng(seed)
    train, test = [], []
    for s in np.unique(strata):
        idx = np.flatnonzero(strata == s)
        idx = idx[rng.permutation(len(idx))]
        n_test = int(round(test_frac * len(idx)))
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    train_idx = np.sort(np.concatenate(train))
    test_idx = np.sort(np.concatenate(test))
    return data.subset(train_idx), data.subset(test_idx)
