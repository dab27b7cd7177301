"""Linear probabilistic classifier retrained from scratch each round.

Multi-class heads produce a softmax over K logits; multi-label heads
produce K independent sigmoids.  Training is deterministic full-batch
gradient descent from zero weights, so the same labeled set always
yields bit-identical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TaskKind

# Logits are clipped here before exponentiation, keeping probabilities
# strictly inside (0, 1).  Tests of gradient accuracy should stay off
# this saturated region.
LOGIT_CLAMP = 30.0


class NotTrainedError(RuntimeError):
    """Raised when predictions are requested from an untrained model."""


@dataclass
class TrainConfig:
    lr: float = 0.1
    epochs: int = 500
    grad_tol: float = 1e-6
    l2: float = 0.0


def _augment(features: np.ndarray) -> np.ndarray:
    """Append the constant bias feature."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return np.hstack([features, np.ones((features.shape[0], 1))])


class LinearClassifier:
    """Linear scorer with weights of shape (K, d+1); last column is the bias."""

    def __init__(self, weights: np.ndarray, task: TaskKind, l2: float = 0.0, trained: bool = False) -> None:
        self.weights = np.asarray(weights, dtype=np.float64)
        self.task = task
        self.l2 = l2
        self.trained = trained

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    def _probabilities(self, augmented: np.ndarray) -> np.ndarray:
        logits = augmented @ self.weights.T
        if self.task is TaskKind.MULTICLASS:
            # Clamp the centered logits: softmax only sees differences, and
            # a -30 floor keeps every probability strictly inside (0, 1).
            centered = np.clip(logits - logits.max(axis=1, keepdims=True), -LOGIT_CLAMP, LOGIT_CLAMP)
            exps = np.exp(centered)
            return exps / exps.sum(axis=1, keepdims=True)
        return 1.0 / (1.0 + np.exp(-np.clip(logits, -LOGIT_CLAMP, LOGIT_CLAMP)))

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Probability vector for a single feature vector."""
        if not self.trained:
            raise NotTrainedError("model has not been trained")
        return self._probabilities(_augment(x))[0]

    def predict_matrix(self, features: np.ndarray) -> np.ndarray:
        """Probability rows for a whole feature matrix."""
        if not self.trained:
            raise NotTrainedError("model has not been trained")
        return self._probabilities(_augment(features))


def loss(model: LinearClassifier, features: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy (multi-class) or summed-per-class binary
    cross-entropy averaged over examples (multi-label), plus any L2 term."""
    features = np.atleast_2d(features)
    labels = np.atleast_2d(labels)
    if features.shape[0] == 0:
        raise ValueError("empty batch")
    probs = model._probabilities(_augment(features))
    if model.task is TaskKind.MULTICLASS:
        per_example = -np.log((probs * labels).sum(axis=1))
    else:
        per_example = -(labels * np.log(probs) + (1 - labels) * np.log(1 - probs)).sum(axis=1)
    value = float(per_example.mean())
    if model.l2:
        value += 0.5 * model.l2 * float((model.weights**2).sum())
    return value


def loss_gradient(model: LinearClassifier, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Exact gradient of :func:`loss` with respect to the weight matrix.

    Both heads share the residual form (1/n) * (p - y)^T x_aug, which is
    also what the gradient-embedding candidate builds on.
    """
    features = np.atleast_2d(features)
    labels = np.atleast_2d(labels)
    if features.shape[0] == 0:
        raise ValueError("empty batch")
    augmented = _augment(features)
    probs = model._probabilities(augmented)
    grad = (probs - labels).T @ augmented / features.shape[0]
    if model.l2:
        grad = grad + model.l2 * model.weights
    return grad


def train(
    features: np.ndarray,
    labels: np.ndarray,
    task: TaskKind,
    config: TrainConfig | None = None,
) -> LinearClassifier:
    """Fit from zero initialization by full-batch gradient descent.

    Stops after ``config.epochs`` steps or as soon as the gradient
    infinity-norm drops below ``config.grad_tol``.
    """
    config = config or TrainConfig()
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels))
    if features.shape[0] == 0:
        raise ValueError("cannot train on an empty labeled set")
    if features.shape[0] != labels.shape[0]:
        raise ValueError("features and labels disagree on batch size")
    num_classes = labels.shape[1]
    model = LinearClassifier(np.zeros((num_classes, features.shape[1] + 1)), task, l2=config.l2)
    for _ in range(config.epochs):
        grad = loss_gradient(model, features, labels)
        if np.abs(grad).max() < config.grad_tol:
            break
        model.weights = model.weights - config.lr * grad
    model.trained = True
    return model
