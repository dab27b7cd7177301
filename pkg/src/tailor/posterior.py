"""Conjugate posteriors over each arm's mean label vector.

Multi-label arms keep an element-wise Beta posterior (one (a_k, b_k)
pseudo-count pair per class); multi-class arms keep a single Dirichlet.
Both start from the uniform prior a = b = 1.  Updates add observed label
counts; the discounted variant first decays the pseudo-counts, which
lets the posterior track drifting arm behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import TaskKind

# Pseudo-count floor: repeated discounting of an unselected arm would
# otherwise drive its parameters to zero and leave the Beta/Dirichlet
# undefined.
PARAMETER_FLOOR = 1e-3


@dataclass
class ArmPosterior:
    """Posterior pseudo-counts for one arm.  ``b`` is None for multi-class."""

    a: np.ndarray
    b: np.ndarray | None
    task: TaskKind

    @classmethod
    def uniform(cls, num_classes: int, task: TaskKind) -> "ArmPosterior":
        a = np.ones(num_classes)
        b = np.ones(num_classes) if task is TaskKind.MULTILABEL else None
        return cls(a, b, task)

    def mean(self) -> np.ndarray:
        """Analytic posterior mean: a/(a+b) element-wise, or a/sum(a)."""
        if self.task is TaskKind.MULTILABEL:
            assert self.b is not None
            return self.a / (self.a + self.b)
        return self.a / self.a.sum()


@dataclass
class RewardDiagnostics:
    """Empirical reward summary for one arm's observation history."""

    empirical_mean: float
    confidence_width: float
    ucb: float
    sample_count: int


def _check_positive(post: ArmPosterior) -> None:
    if (post.a <= 0).any() or (post.b is not None and (post.b <= 0).any()):
        raise ValueError("posterior parameters must be strictly positive")


def sample(post: ArmPosterior, rng: np.random.Generator) -> np.ndarray:
    """Draw one mean-vector sample from the posterior.

    Sampling is exact (gamma-variate based), never a normal
    approximation: behavior at small pseudo-counts is what makes the
    exploration work.
    """
    _check_positive(post)
    if post.task is TaskKind.MULTILABEL:
        assert post.b is not None
        return rng.beta(post.a, post.b)
    return rng.dirichlet(post.a)


def _summed(observations: Sequence[np.ndarray], num_classes: int) -> tuple[np.ndarray, int]:
    if len(observations) == 0:
        return np.zeros(num_classes), 0
    stacked = np.asarray(observations, dtype=np.float64)
    if stacked.ndim != 2 or stacked.shape[1] != num_classes:
        raise ValueError(f"observations must be length-{num_classes} label vectors")
    return stacked.sum(axis=0), stacked.shape[0]


def update(post: ArmPosterior, observations: Sequence[np.ndarray]) -> ArmPosterior:
    """Conjugate update: a += sum(y), and b += sum(1 - y) for multi-label."""
    positives, count = _summed(observations, post.a.size)
    a = post.a + positives
    b = post.b + (count - positives) if post.b is not None else None
    return ArmPosterior(a, b, post.task)


def discounted_update(
    post: ArmPosterior, observations: Sequence[np.ndarray], gamma: float
) -> ArmPosterior:
    """Decay pseudo-counts by ``gamma`` before adding the new observations.

    Applied to every arm every round; arms with no observations simply
    decay.  Parameters are floored at ``PARAMETER_FLOOR`` so long-ignored
    arms stay sampleable.  gamma = 1 reproduces :func:`update` exactly.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"discount must be in (0, 1], got {gamma}")
    positives, count = _summed(observations, post.a.size)
    a = np.maximum(gamma * post.a + positives, PARAMETER_FLOOR)
    b = None
    if post.b is not None:
        b = np.maximum(gamma * post.b + (count - positives), PARAMETER_FLOOR)
    return ArmPosterior(a, b, post.task)


def diagnostics(
    history: Sequence[np.ndarray],
    weights: np.ndarray,
    num_arms: int,
    horizon: int,
) -> RewardDiagnostics:
    """Empirical reward mean, sub-Gaussian confidence width, and clipped UCB.

    The width is sqrt(8 * ln(M * T^2) / max(1, n)) with n the number of
    labels this arm has produced; the upper confidence bound is clipped
    to [-1, 1] since rewards cannot leave that range.
    """
    if num_arms < 1 or horizon < 1:
        raise ValueError("num_arms and horizon must be at least 1")
    weights = np.asarray(weights, dtype=np.float64)
    count = len(history)
    if count == 0:
        empirical_mean = 0.0
    else:
        empirical_mean = float(np.mean([weights @ np.asarray(y) for y in history]))
    width = math.sqrt(8.0 * math.log(num_arms * horizon * horizon) / max(1, count))
    ucb = float(np.clip(empirical_mean + width, -1.0, 1.0))
    return RewardDiagnostics(empirical_mean, width, ucb, count)
