"""Per-round weight vectors and scalar label rewards.

Every reward here is an inner product between a weight vector v in
[-1/K, 1/K]^K and the observed binary label, so rewards always land in
[-1, 1].  Three weightings are provided: inverse-count class diversity,
the constant positive-search weighting 1/K, and caller-supplied
domain weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import TaskKind

# Slack for |v_i| <= 1/K checks on ingested weight vectors.
WEIGHT_TOLERANCE = 1e-12


class RewardKind(Enum):
    CLASS_DIVERSITY = "diversity"
    MULTILABEL_SEARCH = "search"
    DOMAIN_SPECIFIC = "domain"


@dataclass(frozen=True)
class RewardSpec:
    """Which weighting to apply each round, plus its options.

    ``domain_weights`` is required exactly when kind is DOMAIN_SPECIFIC;
    ``negative_weighting`` only makes sense for multi-label tasks, where
    a class with mostly-positive associations gets its weight flipped.
    """

    kind: RewardKind
    domain_weights: tuple[float, ...] | None = None
    negative_weighting: bool = False

    def __post_init__(self) -> None:
        if self.kind is RewardKind.DOMAIN_SPECIFIC:
            if self.domain_weights is None:
                raise ValueError("domain reward requires domain_weights")
            check_weight_vector(np.asarray(self.domain_weights))
        elif self.domain_weights is not None:
            raise ValueError("domain_weights given but reward kind is not domain")

    def validate_for_task(self, task: TaskKind, num_classes: int) -> None:
        if self.domain_weights is not None and len(self.domain_weights) != num_classes:
            raise ValueError(
                f"domain_weights has length {len(self.domain_weights)}, expected {num_classes}"
            )
        if self.negative_weighting and task is not TaskKind.MULTILABEL:
            raise ValueError("negative_weighting is only valid for multi-label tasks")


def check_weight_vector(values: np.ndarray) -> None:
    """Enforce the [-1/K, 1/K] box, with floating-point slack."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("weight vector must be a non-empty 1-D array")
    bound = 1.0 / values.size + WEIGHT_TOLERANCE
    if np.abs(values).max() > bound:
        raise ValueError(f"weight entries must lie in [-1/K, 1/K]; max |v_i| = {np.abs(values).max()}")


def diversity_weights(
    class_counts: np.ndarray, labeled_size: int, negative_weighting: bool = False
) -> np.ndarray:
    """Inverse-count weights: entry i is 1 / (K * max(1, count_i)).

    With ``negative_weighting``, any class whose positive count exceeds
    half the labeled set (strictly) has its entry negated, so chasing an
    already-common class is penalized instead of merely discounted.
    """
    counts = np.asarray(class_counts)
    if (counts < 0).any():
        raise ValueError("class counts must be non-negative")
    num_classes = counts.size
    weights = 1.0 / (num_classes * np.maximum(1, counts))
    if negative_weighting:
        weights = np.where(counts > labeled_size / 2, -weights, weights)
    return weights


def search_weights(num_classes: int) -> np.ndarray:
    """Constant weighting 1/K that rewards every positive label equally."""
    if num_classes <= 0:
        raise ValueError(f"number of classes must be positive, got {num_classes}")
    return np.full(num_classes, 1.0 / num_classes)


def reward(weights: np.ndarray, label: np.ndarray) -> float:
    """Scalar reward <v, y> of a label under the round's weighting."""
    weights = np.asarray(weights, dtype=np.float64)
    label = np.asarray(label)
    if weights.shape != label.shape:
        raise ValueError(f"weights shape {weights.shape} != label shape {label.shape}")
    return float(weights @ label)


def round_weights(spec: RewardSpec, class_counts: np.ndarray, labeled_size: int) -> np.ndarray:
    """Weight vector for the upcoming round given the counts so far."""
    counts = np.asarray(class_counts)
    if spec.kind is RewardKind.CLASS_DIVERSITY:
        return diversity_weights(counts, labeled_size, spec.negative_weighting)
    if spec.kind is RewardKind.MULTILABEL_SEARCH:
        return search_weights(counts.size)
    assert spec.domain_weights is not None
    return np.asarray(spec.domain_weights, dtype=np.float64)
