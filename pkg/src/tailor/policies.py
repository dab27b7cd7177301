"""Meta-policies that assign each of the B slots in a round to an arm.

Four policies share one interface: ``choose_arms(weights, batch, rng)``
returns the arm index for every slot, and ``observe(chosen, labels,
weights)`` feeds back the round's outcome.  Rewards are always recomputed
here from (weights, label) rather than accepted from callers, so the
reward definition has a single source of truth.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import TaskKind
from .posterior import ArmPosterior, diagnostics, discounted_update
from .rewards import reward


def contextual_arm(weights: np.ndarray, arm: int, num_arms: int) -> np.ndarray:
    """Feature vector of length K*M that is ``weights`` in block ``arm``.

    Satisfies <contextual_arm(v, i), concat(theta_1..theta_M)> = <v, theta_i>,
    which is what reduces arm choice to a linear bandit.
    """
    if not 0 <= arm < num_arms:
        raise ValueError(f"arm {arm} out of range for {num_arms} arms")
    weights = np.asarray(weights, dtype=np.float64)
    num_classes = weights.size
    phi = np.zeros(num_classes * num_arms)
    phi[arm * num_classes : (arm + 1) * num_classes] = weights
    return phi


def best_arm(theta_rows: np.ndarray, weights: np.ndarray) -> int:
    """Arm with the highest predicted reward <v, theta_i>; ties to lowest index."""
    return int(np.argmax(theta_rows @ weights))


def _check_lengths(chosen: Sequence[int], labels: Sequence[np.ndarray]) -> None:
    if len(chosen) != len(labels):
        raise ValueError(f"{len(chosen)} arms but {len(labels)} labels")


class ThompsonPolicy:
    """Per-slot posterior sampling over the arms' mean label vectors.

    Each slot draws a fresh sample from every arm's posterior and takes
    the argmax predicted reward.  At round end every arm's posterior is
    discount-updated with whatever labels its slots produced (possibly
    none, in which case it only decays).
    """

    def __init__(self, num_arms: int, num_classes: int, task: TaskKind, discount: float = 0.9) -> None:
        if num_arms < 1:
            raise ValueError("need at least one arm")
        self.num_arms = num_arms
        self.task = task
        self.discount = discount
        self.posteriors = [ArmPosterior.uniform(num_classes, task) for _ in range(num_arms)]

    def _sample_thetas(self, rng: np.random.Generator) -> np.ndarray:
        if self.task is TaskKind.MULTILABEL:
            a = np.stack([p.a for p in self.posteriors])
            b = np.stack([p.b for p in self.posteriors])
            return rng.beta(a, b)
        return np.stack([rng.dirichlet(p.a) for p in self.posteriors])

    def choose_arms(self, weights: np.ndarray, batch: int, rng: np.random.Generator) -> list[int]:
        weights = np.asarray(weights, dtype=np.float64)
        return [best_arm(self._sample_thetas(rng), weights) for _ in range(batch)]

    def observe(self, chosen: Sequence[int], labels: Sequence[np.ndarray], weights: np.ndarray) -> None:
        _check_lengths(chosen, labels)
        by_arm: list[list[np.ndarray]] = [[] for _ in range(self.num_arms)]
        for arm, label in zip(chosen, labels):
            by_arm[arm].append(np.asarray(label))
        self.posteriors = [
            discounted_update(post, obs, self.discount)
            for post, obs in zip(self.posteriors, by_arm)
        ]


class RandomMetaPolicy:
    """Uniform arm choice; keeps no statistics."""

    def __init__(self, num_arms: int) -> None:
        if num_arms < 1:
            raise ValueError("need at least one arm")
        self.num_arms = num_arms

    def choose_arms(self, weights: np.ndarray, batch: int, rng: np.random.Generator) -> list[int]:
        return [int(i) for i in rng.integers(self.num_arms, size=batch)]

    def observe(self, chosen: Sequence[int], labels: Sequence[np.ndarray], weights: np.ndarray) -> None:
        _check_lengths(chosen, labels)


class LinearThompsonPolicy:
    """Posterior sampling for the linear-bandit reduction.

    Keeps a Gaussian posterior over the stacked arm means (dimension
    K*M) and learns from scalar rewards only, never from the label
    vectors themselves; this is the handicapped baseline the full
    policy is measured against.
    """

    def __init__(
        self,
        num_arms: int,
        num_classes: int,
        prior_precision: float = 1.0,
        noise_var: float = 1.0,
    ) -> None:
        if num_arms < 1:
            raise ValueError("need at least one arm")
        self.num_arms = num_arms
        self.num_classes = num_classes
        self.noise_var = noise_var
        dim = num_arms * num_classes
        self.precision = prior_precision * np.eye(dim)
        self.mean = np.zeros(dim)
        self._rhs = np.zeros(dim)
        self._chol: np.ndarray | None = None

    def choose_arms(self, weights: np.ndarray, batch: int, rng: np.random.Generator) -> list[int]:
        weights = np.asarray(weights, dtype=np.float64)
        if self._chol is None:
            self._chol = np.linalg.cholesky(self.precision)
        # precision = L L^T, so mean + L^-T z has covariance precision^-1.
        noise = rng.standard_normal((batch, self.mean.size))
        thetas = self.mean + np.linalg.solve(self._chol.T, noise.T).T
        return [
            best_arm(theta.reshape(self.num_arms, self.num_classes), weights)
            for theta in thetas
        ]

    def observe(self, chosen: Sequence[int], labels: Sequence[np.ndarray], weights: np.ndarray) -> None:
        _check_lengths(chosen, labels)
        weights = np.asarray(weights, dtype=np.float64)
        for arm, label in zip(chosen, labels):
            phi = contextual_arm(weights, arm, self.num_arms)
            observed = reward(weights, np.asarray(label))
            self.precision += np.outer(phi, phi) / self.noise_var
            self._rhs += observed * phi / self.noise_var
        self.mean = np.linalg.solve(self.precision, self._rhs)
        self._chol = None


class UcbDiagnosticPolicy:
    """Upper-confidence-bound choice over empirical reward histories.

    Deterministic given the history: every slot in a round goes to the
    arm whose clipped UCB is highest.  Posteriors are still maintained
    so the feedback path matches the Thompson policy exactly.
    """

    def __init__(
        self,
        num_arms: int,
        num_classes: int,
        task: TaskKind,
        discount: float,
        horizon: int,
    ) -> None:
        if num_arms < 1:
            raise ValueError("need at least one arm")
        self.num_arms = num_arms
        self.horizon = horizon
        self.discount = discount
        self.posteriors = [ArmPosterior.uniform(num_classes, task) for _ in range(num_arms)]
        self.histories: list[list[np.ndarray]] = [[] for _ in range(num_arms)]

    def choose_arms(self, weights: np.ndarray, batch: int, rng: np.random.Generator) -> list[int]:
        weights = np.asarray(weights, dtype=np.float64)
        ucbs = [
            diagnostics(history, weights, self.num_arms, self.horizon).ucb
            for history in self.histories
        ]
        arm = int(np.argmax(ucbs))
        return [arm] * batch

    def observe(self, chosen: Sequence[int], labels: Sequence[np.ndarray], weights: np.ndarray) -> None:
        _check_lengths(chosen, labels)
        by_arm: list[list[np.ndarray]] = [[] for _ in range(self.num_arms)]
        for arm, label in zip(chosen, labels):
            by_arm[arm].append(np.asarray(label))
            self.histories[arm].append(np.asarray(label))
        self.posteriors = [
            discounted_update(post, obs, self.discount)
            for post, obs in zip(self.posteriors, by_arm)
        ]


POLICY_KINDS = ("tailor", "random_meta", "contextual_ts", "ucb_diag")


def make_policy(
    kind: str,
    *,
    num_arms: int,
    num_classes: int,
    task: TaskKind,
    discount: float,
    horizon: int,
    prior_precision: float = 1.0,
    noise_var: float = 1.0,
):
    """Instantiate a policy by its config name."""
    if kind == "tailor":
        return ThompsonPolicy(num_arms, num_classes, task, discount)
    if kind == "random_meta":
        return RandomMetaPolicy(num_arms)
    if kind == "contextual_ts":
        return LinearThompsonPolicy(num_arms, num_classes, prior_precision, noise_var)
    if kind == "ucb_diag":
        return UcbDiagnosticPolicy(num_arms, num_classes, task, discount, horizon)
    raise ValueError(f"unknown policy '{kind}'")
