"""Candidate selection strategies, each reduced to pick-one-example form.

Every candidate implements ``select_next``: given the current model and
partition plus the ids already taken this round, return one fresh
unlabeled id.  Running a candidate B times therefore reproduces its
batch behavior (the fixed-score kinds select exactly their top B).
Candidates see features, model outputs, and class counts; never labels.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Pool, PoolPartition
from .model import LinearClassifier, NotTrainedError, _augment


def gradient_embedding(model: LinearClassifier, x: np.ndarray) -> np.ndarray:
    """Loss gradient at the pseudo-label argmax p(x), flattened.

    Equals (p - e_yhat) outer [x; 1] reshaped to length K*(d+1): large for
    examples the model is unsure about, oriented by the features.
    """
    return gradient_embeddings(model, np.atleast_2d(x))[0]


def gradient_embeddings(model: LinearClassifier, features: np.ndarray) -> np.ndarray:
    """Row-wise :func:`gradient_embedding` for a feature matrix."""
    if not model.trained:
        raise NotTrainedError("gradient embeddings need a trained model")
    probs = model.predict_matrix(features)
    residual = probs.copy()
    residual[np.arange(probs.shape[0]), probs.argmax(axis=1)] -= 1.0
    augmented = _augment(features)
    return (residual[:, :, None] * augmented[:, None, :]).reshape(probs.shape[0], -1)


class Candidate:
    """Base selector.  Subclasses set ``name`` and implement selection."""

    name: str = "candidate"

    def select_next(
        self,
        model: LinearClassifier,
        pool: Pool,
        partition: PoolPartition,
        already_selected: Sequence[int],
        rng: np.random.Generator,
    ) -> int:
        remaining = _remaining(partition, already_selected)
        if model is None or not model.trained:
            raise NotTrainedError(f"{self.name} needs a trained model")
        return self._pick(model, pool, remaining, list(already_selected), rng)

    def _pick(
        self,
        model: LinearClassifier,
        pool: Pool,
        remaining: list[int],
        already_selected: list[int],
        rng: np.random.Generator,
    ) -> int:
        raise NotImplementedError


def _remaining(partition: PoolPartition, already_selected: Sequence[int]) -> list[int]:
    taken = set(already_selected)
    remaining = [i for i in partition.unlabeled if i not in taken]
    if not remaining:
        raise ValueError("no unlabeled examples left to select")
    return remaining


class RandomCandidate(Candidate):
    name = "random"

    def _pick(self, model, pool, remaining, already_selected, rng):
        return remaining[int(rng.integers(len(remaining)))]


class ScoredCandidate(Candidate):
    """Candidates that rank every unlabeled example by a fixed score.

    ``maximize`` says which end of the score is selected; ties go to the
    lowest id, which remaining-id order already guarantees.
    """

    maximize: bool = False

    def scores(self, model: LinearClassifier, pool: Pool, ids: Sequence[int]) -> np.ndarray:
        probs = model.predict_matrix(pool.features[list(ids)])
        return self._score_probs(probs)

    def _score_probs(self, probs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _pick(self, model, pool, remaining, already_selected, rng):
        values = self.scores(model, pool, remaining)
        index = int(np.argmax(values)) if self.maximize else int(np.argmin(values))
        return remaining[index]


class LeastConfidenceCandidate(ScoredCandidate):
    name = "least_confidence"

    def _score_probs(self, probs):
        return probs.max(axis=1)


class MarginCandidate(ScoredCandidate):
    """Smallest gap between the top two class probabilities."""

    name = "margin"

    def _score_probs(self, probs):
        top_two = np.partition(probs, probs.shape[1] - 2, axis=1)[:, -2:]
        return top_two[:, 1] - top_two[:, 0]


class EntropyCandidate(ScoredCandidate):
    name = "entropy"
    maximize = True

    def _score_probs(self, probs):
        return -(probs * np.log(probs)).sum(axis=1)


class AvgBinaryMarginCandidate(ScoredCandidate):
    """Mean distance-to-boundary |2 p_k - 1| across classes."""

    name = "emal"

    def _score_probs(self, probs):
        return np.abs(2.0 * probs - 1.0).mean(axis=1)


class MostLikelyPositiveCandidate(ScoredCandidate):
    """Active search for one target class: highest predicted probability."""

    maximize = True

    def __init__(self, target_class: int) -> None:
        self.target_class = target_class
        self.name = f"mlp[{target_class}]"

    def _score_probs(self, probs):
        return probs[:, self.target_class]


class PerClassUncertaintyCandidate(ScoredCandidate):
    """Closest to the decision boundary of one target class."""

    def __init__(self, target_class: int) -> None:
        self.target_class = target_class
        self.name = f"uncertainty[{target_class}]"

    def _score_probs(self, probs):
        return np.abs(2.0 * probs[:, self.target_class] - 1.0)


class BadgeCandidate(Candidate):
    """k-means++ style pick in gradient-embedding space.

    The first pick of a round takes the largest embedding (seeding); later
    picks are sampled with probability proportional to squared distance
    from the nearest embedding already selected this round, falling back
    to uniform when every distance is zero.
    """

    name = "badge"

    def _pick(self, model, pool, remaining, already_selected, rng):
        embeddings = gradient_embeddings(model, pool.features[remaining])
        if not already_selected:
            norms = (embeddings**2).sum(axis=1)
            return remaining[int(np.argmax(norms))]
        chosen = gradient_embeddings(model, pool.features[already_selected])
        deltas = embeddings[:, None, :] - chosen[None, :, :]
        nearest_sq = (deltas**2).sum(axis=2).min(axis=1)
        total = nearest_sq.sum()
        if total == 0.0:
            return remaining[int(rng.integers(len(remaining)))]
        index = int(rng.choice(len(remaining), p=nearest_sq / total))
        return remaining[index]


_SIMPLE_KINDS = {
    "random": RandomCandidate,
    "least_confidence": LeastConfidenceCandidate,
    "margin": MarginCandidate,
    "entropy": EntropyCandidate,
    "emal": AvgBinaryMarginCandidate,
    "badge": BadgeCandidate,
}

# Kinds that contribute one candidate per class.
_PER_CLASS_KINDS = {
    "mlp": MostLikelyPositiveCandidate,
    "pcu": PerClassUncertaintyCandidate,
}

KNOWN_KINDS = tuple(_SIMPLE_KINDS) + tuple(_PER_CLASS_KINDS)


def validate_candidate_name(name: str) -> None:
    """Reject names that expand_candidates would not accept (class range
    aside, which needs K)."""
    kind, _, suffix = name.partition(":")
    if suffix:
        if kind not in _PER_CLASS_KINDS or not suffix.isdigit():
            raise ValueError(f"bad per-class candidate '{name}'")
    elif name not in _SIMPLE_KINDS and name not in _PER_CLASS_KINDS:
        raise ValueError(f"unknown candidate kind '{name}'")


def expand_candidates(names: Sequence[str], num_classes: int) -> list[Candidate]:
    """Instantiate candidates from config names.

    Per-class kinds expand to one candidate per class; a ``kind:c``
    suffix (e.g. ``mlp:3``) pins a per-class kind to a single class.
    """
    out: list[Candidate] = []
    for name in names:
        kind, _, suffix = name.partition(":")
        if suffix:
            if kind not in _PER_CLASS_KINDS:
                raise ValueError(f"only per-class kinds take a ':class' suffix, got '{name}'")
            target = int(suffix)
            if not 0 <= target < num_classes:
                raise ValueError(f"class {target} out of range in candidate '{name}'")
            out.append(_PER_CLASS_KINDS[kind](target))
        elif name in _SIMPLE_KINDS:
            out.append(_SIMPLE_KINDS[name]())
        elif name in _PER_CLASS_KINDS:
            out.extend(_PER_CLASS_KINDS[name](c) for c in range(num_classes))
        else:
            raise ValueError(f"unknown candidate kind '{name}'")
    return out
