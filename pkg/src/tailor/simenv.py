"""Simulation environments: known-parameter bandits and synthetic pools.

The bandit environment draws labels directly from per-arm distributions
with known means, so regret can be computed exactly.  The pool generator
builds Gaussian-cluster classification problems with controllable class
imbalance, small enough that a full experiment finishes in minutes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Pool, TaskKind

_SIMPLEX_TOL = 1e-9


@dataclass
class BanditInstance:
    """Known mean label vector per arm: rows of ``thetas`` are the arms."""

    thetas: np.ndarray  # (M, K)
    task: TaskKind

    def __post_init__(self) -> None:
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        if self.thetas.ndim != 2:
            raise ValueError("thetas must be an (M, K) matrix")
        if (self.thetas < 0).any() or (self.thetas > 1).any():
            raise ValueError("theta entries must lie in [0, 1]")
        if self.task is TaskKind.MULTICLASS:
            if np.abs(self.thetas.sum(axis=1) - 1.0).max() > _SIMPLEX_TOL:
                raise ValueError("multi-class thetas must lie on the probability simplex")

    @property
    def num_arms(self) -> int:
        return self.thetas.shape[0]

    @property
    def num_classes(self) -> int:
        return self.thetas.shape[1]


def sample_instance(
    num_arms: int, num_classes: int, task: TaskKind, rng: np.random.Generator
) -> BanditInstance:
    """Draw arm means from the uniform prior over their support."""
    if task is TaskKind.MULTILABEL:
        thetas = rng.random((num_arms, num_classes))
    else:
        thetas = rng.dirichlet(np.ones(num_classes), size=num_arms)
    return BanditInstance(thetas, task)


def sample_label(instance: BanditInstance, arm: int, rng: np.random.Generator) -> np.ndarray:
    """One label draw from the chosen arm's distribution."""
    if not 0 <= arm < instance.num_arms:
        raise ValueError(f"arm {arm} out of range for {instance.num_arms} arms")
    theta = instance.thetas[arm]
    if instance.task is TaskKind.MULTILABEL:
        return (rng.random(theta.size) < theta).astype(np.int64)
    label = np.zeros(theta.size, dtype=np.int64)
    label[int(rng.choice(theta.size, p=theta))] = 1
    return label


def exact_regret(instance: BanditInstance, weights: np.ndarray, chosen: list[int]) -> float:
    """Sum over slots of (best achievable expected reward - chosen arm's).

    Always non-negative; zero exactly when every chosen arm attains the
    maximum of <v, theta_i>.
    """
    weights = np.asarray(weights, dtype=np.float64)
    scores = instance.thetas @ weights
    best = float(scores.max())
    total = 0.0
    for arm in chosen:
        if not 0 <= arm < instance.num_arms:
            raise ValueError(f"arm {arm} out of range for {instance.num_arms} arms")
        total += best - float(scores[arm])
    return total


@dataclass
class SyntheticPoolSpec:
    """Recipe for a Gaussian-cluster pool.

    Multi-class pools need ``class_proportions`` (positive, summing to
    1); multi-label pools need per-class ``positive_rate`` Bernoulli
    probabilities instead.  ``cluster_separation`` scales the centroid
    layout against unit-variance noise.
    """

    task: TaskKind
    num_classes: int
    num_features: int
    num_examples: int
    class_proportions: tuple[float, ...] | None = None
    cluster_separation: float = 1.0
    positive_rate: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.num_classes < 1 or self.num_features < 1 or self.num_examples < 1:
            raise ValueError("K, d, and N must all be positive")
        if self.cluster_separation <= 0:
            raise ValueError("cluster_separation must be positive")
        if self.task is TaskKind.MULTICLASS:
            if self.class_proportions is None:
                raise ValueError("multi-class pool spec needs class_proportions")
            props = np.asarray(self.class_proportions, dtype=np.float64)
            if props.size != self.num_classes or (props <= 0).any():
                raise ValueError("class_proportions must be K positive numbers")
            if abs(props.sum() - 1.0) > _SIMPLEX_TOL:
                raise ValueError("class_proportions must sum to 1")
        else:
            if self.positive_rate is None:
                raise ValueError("multi-label pool spec needs positive_rate")
            rates = np.asarray(self.positive_rate, dtype=np.float64)
            if rates.size != self.num_classes or (rates <= 0).any() or (rates > 1).any():
                raise ValueError("positive_rate must be K probabilities in (0, 1]")


def _centroids(num_classes: int, num_features: int, separation: float) -> np.ndarray:
    """Class centers: scaled canonical vertices when they fit, else a
    circle in the first two feature dimensions, else a 1-D lattice."""
    centers = np.zeros((num_classes, num_features))
    if num_features >= num_classes:
        for k in range(num_classes):
            centers[k, k] = separation
    elif num_features >= 2:
        angles = 2.0 * np.pi * np.arange(num_classes) / num_classes
        centers[:, 0] = separation * np.cos(angles)
        centers[:, 1] = separation * np.sin(angles)
    else:
        centers[:, 0] = separation * np.arange(num_classes)
    return centers


def _multiclass_sizes(spec: SyntheticPoolSpec) -> np.ndarray:
    props = np.asarray(spec.class_proportions, dtype=np.float64)
    sizes = np.round(spec.num_examples * props).astype(np.int64)
    if spec.num_examples >= spec.num_classes and (sizes == 0).any():
        raise ValueError("a class with positive proportion rounded to zero examples")
    sizes[int(np.argmax(props))] += spec.num_examples - sizes.sum()
    if (sizes < 0).any():
        raise ValueError("class proportions are infeasible for this pool size")
    return sizes


def generate_pool(spec: SyntheticPoolSpec, rng: np.random.Generator) -> Pool:
    """Sample a pool: labels first, then unit-variance Gaussian features
    around the centroid mix implied by each example's label."""
    centers = _centroids(spec.num_classes, spec.num_features, spec.cluster_separation)
    n = spec.num_examples
    if spec.task is TaskKind.MULTICLASS:
        sizes = _multiclass_sizes(spec)
        assignment = rng.permutation(np.repeat(np.arange(spec.num_classes), sizes))
        labels = np.zeros((n, spec.num_classes), dtype=np.int64)
        labels[np.arange(n), assignment] = 1
    else:
        rates = np.asarray(spec.positive_rate, dtype=np.float64)
        labels = (rng.random((n, spec.num_classes)) < rates).astype(np.int64)
        if (labels.sum(axis=0) == 0).any():
            raise ValueError(
                "a class drew zero positive examples; increase N or positive_rate"
            )
    features = labels @ centers + rng.standard_normal((n, spec.num_features))
    return Pool(spec.task, features, labels)


def derive_imbalanced(pool: Pool, num_classes: int) -> Pool:
    """Collapse a multi-class pool to ``num_classes`` by keeping the first
    K-1 classes and merging everything else into one large final class.

    Features and pool size are untouched, so the merged class inherits
    the (typically dominant) mass of all remaining classes.
    """
    if pool.task is not TaskKind.MULTICLASS:
        raise ValueError("only multi-class pools can be collapsed")
    original = pool.num_classes
    if not 2 <= num_classes <= original:
        raise ValueError(f"target class count must be in [2, {original}], got {num_classes}")
    old_class = pool.ground_truth().argmax(axis=1)
    new_class = np.where(old_class < num_classes - 1, old_class, num_classes - 1)
    labels = np.zeros((pool.num_examples, num_classes), dtype=np.int64)
    labels[np.arange(pool.num_examples), new_class] = 1
    return Pool(TaskKind.MULTICLASS, pool.features.copy(), labels)
