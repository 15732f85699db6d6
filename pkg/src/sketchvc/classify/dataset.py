"""Labeled feature datasets, stratified splitting, stratified folds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ClassTooSmall, EmptyInput, InvalidSpec, SchemaViolation
from ..features import N_FEATURES, feature_matrix
from ..strokes import TRAINING_CLASSES, stroke_content_id

CLASS_TO_INDEX = {label: i for i, label in enumerate(TRAINING_CLASSES)}


@dataclass(eq=False)
class Dataset:
    X: np.ndarray
    labels: list[str]
    ids: list[str]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[1] != N_FEATURES:
            raise SchemaViolation(f"feature matrix must be (n, {N_FEATURES})")
        if len(self.labels) != self.X.shape[0] or len(self.ids) != self.X.shape[0]:
            raise SchemaViolation("labels/ids length must match matrix rows")
        for label in self.labels:
            if label not in CLASS_TO_INDEX:
                raise SchemaViolation(f"unknown training label {label!r}", field="labels")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def y(self) -> np.ndarray:
        return np.asarray([CLASS_TO_INDEX[lbl] for lbl in self.labels], dtype=np.int64)

    def classes_present(self) -> list[str]:
        present = set(self.labels)
        return [c for c in TRAINING_CLASSES if c in present]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            X=self.X[indices],
            labels=[self.labels[i] for i in indices],
            ids=[self.ids[i] for i in indices],
        )

    @classmethod
    def from_labeled_records(cls, labeled, sampling_rate_hz: float = 60.0) -> "Dataset":
        if not labeled:
            raise EmptyInput("no labeled records")
        records = [record for record, _ in labeled]
        return cls(
            X=feature_matrix(records, sampling_rate_hz),
            labels=[label for _, label in labeled],
            ids=[stroke_content_id(record) for record in records],
        )


def _per_class_indices(labels) -> dict[str, np.ndarray]:
    out = {}
    arr = np.asarray(labels)
    for cls in TRAINING_CLASSES:
        idx = np.nonzero(arr == cls)[0]
        if idx.size:
            out[cls] = idx
    return out


def split_stratified(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive split preserving class proportions within one sample."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidSpec("train_fraction must lie strictly between 0 and 1", field="train_fraction")
    if len(dataset) == 0:
        raise EmptyInput("cannot split an empty dataset")
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0x59117]))
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls, idx in _per_class_indices(dataset.labels).items():
        n_train = int(train_fraction * idx.size + 0.5)
        if n_train == 0 or n_train == idx.size:
            raise ClassTooSmall(f"class {cls} cannot span both sides of the split")
        perm = rng.permutation(idx)
        train_idx.extend(sorted(perm[:n_train].tolist()))
        test_idx.extend(sorted(perm[n_train:].tolist()))
    return dataset.subset(sorted(train_idx)), dataset.subset(sorted(test_idx))


def stratified_folds(labels, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """k stratified folds; overall fold sizes differ by at most one."""
    if k < 2:
        raise InvalidSpec("k must be >= 2", field="k")
    per_class = _per_class_indices(labels)
    if not per_class:
        raise EmptyInput("no labels to fold")
    for cls, idx in per_class.items():
        if idx.size < k:
            raise ClassTooSmall(f"class {cls} has {idx.size} samples, needs >= {k}")
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0xF01D5]))
    folds: list[list[int]] = [[] for _ in range(k)]
    cursor = 0  # continues across classes so totals stay balanced
    for cls in TRAINING_CLASSES:
        if cls not in per_class:
            continue
        for row in rng.permutation(per_class[cls]):
            folds[cursor % k].append(int(row))
            cursor += 1
    out = []
    all_rows = np.arange(len(labels))
    for members in folds:
        val = np.asarray(sorted(members), dtype=np.int64)
        mask = np.ones(len(labels), dtype=bool)
        mask[val] = False
        out.append((all_rows[mask], val))
    return out
