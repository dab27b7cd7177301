"""Shared domain types: labeled pools, partitions, and selection traces.

A pool holds N feature vectors with ground-truth labels that stay hidden
until annotation.  Labels are length-K binary vectors: arbitrary bit
patterns for multi-label tasks, canonical one-hot vectors for multi-class.
The partition tracks which example ids are labeled so far plus running
per-class counts of collected labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class TaskKind(Enum):
    """Label structure of a classification task."""

    MULTILABEL = "multilabel"
    MULTICLASS = "multiclass"


class LabelAccessError(RuntimeError):
    """Raised when code reads a label that has not been annotated yet.

    This is a programming-error guard, not a recoverable condition:
    selection policies and candidate algorithms must never observe the
    label of an example outside the labeled set.
    """


class PoolFormatError(ValueError):
    """Raised when a pool file violates the JSON-lines pool schema."""


def validate_label(y: np.ndarray, num_classes: int, task: TaskKind) -> None:
    """Check that ``y`` is a valid label vector for the task."""
    y = np.asarray(y)
    if y.shape != (num_classes,):
        raise ValueError(f"label has shape {y.shape}, expected ({num_classes},)")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("label entries must be 0 or 1")
    if task is TaskKind.MULTICLASS and int(y.sum()) != 1:
        raise ValueError("multi-class label must be one-hot")


@dataclass
class Example:
    """A single pool member: stable id, feature vector, hidden label."""

    example_id: int
    features: np.ndarray
    label: np.ndarray


class Pool:
    """Immutable pool of N examples with access-gated labels.

    ``features`` is public.  Ground-truth labels are reachable three ways:

    * :meth:`observed_label` - gated on a partition's labeled set; the
      accessor for anything on the selection path.
    * :meth:`training_data` - labeled rows only, for model fitting.
    * :meth:`ground_truth` - the full matrix, for evaluation metrics that
      score the entire pool.  Never hand this to a policy or candidate.
    """

    def __init__(self, task: TaskKind, features: np.ndarray, labels: np.ndarray) -> None:
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2 or labels.ndim != 2:
            raise ValueError("features and labels must be 2-D arrays")
        if features.shape[0] != labels.shape[0]:
            raise ValueError("features and labels disagree on pool size")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("label entries must be 0 or 1")
        if task is TaskKind.MULTICLASS and not (labels.sum(axis=1) == 1).all():
            raise ValueError("multi-class labels must be one-hot")
        self.task = task
        self.features = features
        self._labels = labels

    @property
    def num_examples(self) -> int:
        return self.features.shape[0]

    @property
    def num_classes(self) -> int:
        return self._labels.shape[1]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @classmethod
    def from_examples(cls, task: TaskKind, examples: Sequence[Example]) -> "Pool":
        """Build a pool from records; ids must be dense 0..N-1 in order."""
        for position, ex in enumerate(examples):
            if ex.example_id != position:
                raise ValueError(f"example id {ex.example_id} at position {position}; ids must be dense and ordered")
        features = np.stack([ex.features for ex in examples])
        labels = np.stack([ex.label for ex in examples])
        return cls(task, features, labels)

    def observed_label(self, example_id: int, partition: "PoolPartition") -> np.ndarray:
        """Label of ``example_id``, allowed only once it has been annotated."""
        if not partition.is_labeled(example_id):
            raise LabelAccessError(f"label of example {example_id} read before annotation")
        return self._labels[example_id].copy()

    def training_data(self, partition: "PoolPartition") -> tuple[np.ndarray, np.ndarray]:
        """(features, labels) of the labeled set, in annotation order."""
        ids = list(partition.labeled)
        return self.features[ids], self._labels[ids].copy()

    def ground_truth(self) -> np.ndarray:
        """Full N x K label matrix.  Evaluation only."""
        return self._labels


class PoolPartition:
    """Labeled/unlabeled split of a pool plus per-class label counts.

    Id order is preserved on both sides so selection traces replay
    exactly; counts are maintained incrementally (O(K) per annotation)
    with :func:`recount_class_counts` as the from-scratch oracle.
    """

    def __init__(self, labeled: Iterable[int], unlabeled: Iterable[int], class_counts: np.ndarray) -> None:
        self.labeled = list(labeled)
        self.unlabeled = list(unlabeled)
        self.class_counts = np.asarray(class_counts, dtype=np.int64)
        self._labeled_set = set(self.labeled)
        self._unlabeled_set = set(self.unlabeled)
        if self._labeled_set & self._unlabeled_set:
            raise ValueError("labeled and unlabeled sets overlap")
        if len(self._labeled_set) != len(self.labeled) or len(self._unlabeled_set) != len(self.unlabeled):
            raise ValueError("duplicate ids within a partition side")

    @classmethod
    def initial(cls, pool: Pool, seed_ids: Sequence[int]) -> "PoolPartition":
        """Partition with ``seed_ids`` annotated, everything else unlabeled."""
        seed_ids = list(seed_ids)
        seed_set = set(seed_ids)
        unlabeled = [i for i in range(pool.num_examples) if i not in seed_set]
        counts = pool._labels[seed_ids].sum(axis=0, dtype=np.int64)
        return cls(seed_ids, unlabeled, counts)

    @property
    def num_labeled(self) -> int:
        return len(self.labeled)

    @property
    def num_unlabeled(self) -> int:
        return len(self.unlabeled)

    def is_labeled(self, example_id: int) -> bool:
        return example_id in self._labeled_set

    def is_unlabeled(self, example_id: int) -> bool:
        return example_id in self._unlabeled_set


def annotate_batch(
    partition: PoolPartition, ids: Sequence[int], pool: Pool
) -> tuple[PoolPartition, list[np.ndarray]]:
    """Annotate ``ids``, returning the grown partition and their labels.

    Ids must be distinct and currently unlabeled.  Class counts grow by
    the element-wise sum of the revealed labels, which covers both the
    one-hot and the per-class-bit counting rule.
    """
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids in annotation batch")
    for example_id in ids:
        if not partition.is_unlabeled(example_id):
            raise ValueError(f"example {example_id} is not in the unlabeled set")
    labels = pool._labels[ids]
    counts = partition.class_counts + labels.sum(axis=0, dtype=np.int64)
    removed = set(ids)
    updated = PoolPartition(
        partition.labeled + ids,
        [i for i in partition.unlabeled if i not in removed],
        counts,
    )
    return updated, [row.copy() for row in labels]


def recount_class_counts(pool: Pool, labeled_ids: Sequence[int]) -> np.ndarray:
    """From-scratch count oracle over the labeled ids."""
    if not labeled_ids:
        return np.zeros(pool.num_classes, dtype=np.int64)
    return pool._labels[list(labeled_ids)].sum(axis=0, dtype=np.int64)


@dataclass
class RoundRecord:
    """Everything observed in one round: arms, picks, labels, rewards, weights.

    ``example_ids`` is None in pure-bandit runs, where arms emit labels
    directly instead of selecting pool examples.
    """

    arms: list[int]
    example_ids: list[int] | None
    labels: np.ndarray  # (B, K) int
    rewards: list[float]
    weights: np.ndarray  # (K,) float


@dataclass
class SelectionTrace:
    """Chronological per-round records for one trial."""

    num_arms: int
    rounds: list[RoundRecord] = field(default_factory=list)


def arm_history(trace: SelectionTrace, arm: int) -> list[np.ndarray]:
    """All labels collected through ``arm``, in chronological order."""
    if not 0 <= arm < trace.num_arms:
        raise ValueError(f"arm {arm} out of range for {trace.num_arms} arms")
    history = []
    for record in trace.rounds:
        for slot, chosen in enumerate(record.arms):
            if chosen == arm:
                history.append(np.asarray(record.labels[slot]))
    return history


def save_pool(pool: Pool, path: str | Path) -> None:
    """Write the JSON-lines pool format: metadata line, then one example per line."""
    path = Path(path)
    meta = {
        "task": pool.task.value,
        "K": pool.num_classes,
        "d": pool.num_features,
        "N": pool.num_examples,
    }
    with path.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps(meta) + "\n")
        labels = pool.ground_truth()
        for i in range(pool.num_examples):
            record = {"id": i, "x": pool.features[i].tolist(), "y": labels[i].tolist()}
            handle.write(json.dumps(record) + "\n")


def load_pool(path: str | Path) -> Pool:
    """Read a pool file, enforcing the id-order and shape contracts."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        header = handle.readline()
        if not header:
            raise PoolFormatError("empty pool file")
        try:
            meta = json.loads(header)
        except json.JSONDecodeError as err:
            raise PoolFormatError(f"bad metadata line: {err}") from err
        for key in ("task", "K", "d", "N"):
            if key not in meta:
                raise PoolFormatError(f"metadata missing '{key}'")
        try:
            task = TaskKind(meta["task"])
        except ValueError as err:
            raise PoolFormatError(f"unknown task '{meta['task']}'") from err
        num_classes, num_features, num_examples = int(meta["K"]), int(meta["d"]), int(meta["N"])
        features = np.empty((num_examples, num_features), dtype=np.float64)
        labels = np.empty((num_examples, num_classes), dtype=np.int64)
        for i in range(num_examples):
            line = handle.readline()
            if not line:
                raise PoolFormatError(f"expected {num_examples} examples, file ends at {i}")
            record = json.loads(line)
            if record.get("id") != i:
                raise PoolFormatError(f"line {i + 2}: id {record.get('id')} out of order")
            x = np.asarray(record["x"], dtype=np.float64)
            y = np.asarray(record["y"], dtype=np.int64)
            if x.shape != (num_features,) or y.shape != (num_classes,):
                raise PoolFormatError(f"line {i + 2}: wrong feature or label length")
            validate_label(y, num_classes, task)
            features[i] = x
            labels[i] = y
        if handle.readline():
            raise PoolFormatError(f"trailing data after {num_examples} examples")
    return Pool(task, features, labels)
