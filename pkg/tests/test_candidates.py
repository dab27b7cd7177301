import math

import numpy as np
import pytest

from tailor.candidates import (
    AvgBinaryMarginCandidate,
    BadgeCandidate,
    EntropyCandidate,
    LeastConfidenceCandidate,
    MarginCandidate,
    MostLikelyPositiveCandidate,
    PerClassUncertaintyCandidate,
    RandomCandidate,
    expand_candidates,
    gradient_embedding,
    gradient_embeddings,
)
from tailor.core import Pool, PoolPartition, TaskKind
from tailor.model import LinearClassifier, NotTrainedError, TrainConfig, loss, train


class ProbeModel:
    """Stand-in classifier that returns the feature rows as probabilities."""

    trained = True

    def predict_matrix(self, features):
        return np.asarray(features, dtype=np.float64)


def prob_pool(rows):
    """Pool whose features are the probability rows the probe model echoes."""
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.zeros((rows.shape[0], rows.shape[1]), dtype=np.int64)
    labels[:, 0] = 1
    return Pool(TaskKind.MULTILABEL, rows, labels)


def fresh_partition(pool):
    return PoolPartition.initial(pool, [])


rng0 = np.random.default_rng(0)


class TestScoredSelection:
    def test_margin_prefers_narrow_gap(self):
        pool = prob_pool([[0.9, 0.1], [0.55, 0.45]])
        pick = MarginCandidate().select_next(ProbeModel(), pool, fresh_partition(pool), [], rng0)
        assert pick == 1

    def test_most_likely_positive_argmax(self):
        pool = prob_pool([[0.0, 0.0, 0.1], [0.0, 0.0, 0.7], [0.0, 0.0, 0.4]])
        pick = MostLikelyPositiveCandidate(2).select_next(
            ProbeModel(), pool, fresh_partition(pool), [], rng0
        )
        assert pick == 1

    def test_avg_binary_margin_scores(self):
        # hand-computed: mean |2p - 1| is 0 for (.5, .5) and 0.8 for (.9, .9)
        cand = AvgBinaryMarginCandidate()
        pool = prob_pool([[0.5, 0.5], [0.9, 0.9]])
        np.testing.assert_allclose(
            cand.scores(ProbeModel(), pool, [0, 1]), [0.0, 0.8], atol=1e-12
        )
        assert cand.select_next(ProbeModel(), pool, fresh_partition(pool), [], rng0) == 0

    def test_least_confidence_and_entropy(self):
        pool = prob_pool([[0.98, 0.01], [0.6, 0.4]])
        assert LeastConfidenceCandidate().select_next(
            ProbeModel(), pool, fresh_partition(pool), [], rng0
        ) == 1
        assert EntropyCandidate().select_next(
            ProbeModel(), pool, fresh_partition(pool), [], rng0
        ) == 1

    def test_per_class_uncertainty_targets_one_column(self):
        pool = prob_pool([[0.99, 0.95], [0.01, 0.52]])
        pick = PerClassUncertaintyCandidate(1).select_next(
            ProbeModel(), pool, fresh_partition(pool), [], rng0
        )
        assert pick == 1

    def test_most_likely_positive_ignores_other_columns(self):
        target = np.array([0.1, 0.7, 0.4])
        others_a = np.array([[0.9, 0.0], [0.2, 0.3], [0.1, 0.8]])
        others_b = np.array([[0.0, 0.5], [0.9, 0.9], [0.4, 0.2]])
        cand = MostLikelyPositiveCandidate(1)
        for others in (others_a, others_b):
            rows = np.column_stack([others[:, 0], target, others[:, 1]])
            pool = prob_pool(rows)
            assert cand.select_next(ProbeModel(), pool, fresh_partition(pool), [], rng0) == 1

    def test_score_ties_break_to_lowest_id(self):
        pool = prob_pool([[0.6, 0.4], [0.6, 0.4], [0.9, 0.1]])
        assert MarginCandidate().select_next(ProbeModel(), pool, fresh_partition(pool), [], rng0) == 0


def al_pool(rng, n=40, k=3, d=2):
    labels = np.zeros((n, k), dtype=np.int64)
    labels[np.arange(n), rng.integers(k, size=n)] = 1
    features = labels @ (3.0 * rng.standard_normal((k, d))) + rng.standard_normal((n, d))
    return Pool(TaskKind.MULTICLASS, features, labels)


def trained_model(pool, partition):
    return train(*pool.training_data(partition), pool.task, TrainConfig(epochs=100))


FIXED_SCORE_KINDS = [
    LeastConfidenceCandidate,
    MarginCandidate,
    EntropyCandidate,
    AvgBinaryMarginCandidate,
    lambda: MostLikelyPositiveCandidate(1),
    lambda: PerClassUncertaintyCandidate(2),
]


@pytest.mark.parametrize("factory", FIXED_SCORE_KINDS)
def test_sequential_selection_equals_batch_top_b(factory):
    """B sequential picks must equal the full-sort oracle's top B."""
    rng = np.random.default_rng(77)
    for trial in range(10):
        pool = al_pool(np.random.default_rng(trial), n=30)
        partition = PoolPartition.initial(pool, list(range(6)))
        model = trained_model(pool, partition)
        cand = factory()
        batch = 5
        picked = []
        for _ in range(batch):
            picked.append(cand.select_next(model, pool, partition, picked, rng))
        scores = cand.scores(model, pool, partition.unlabeled)
        ranked = sorted(
            zip(partition.unlabeled, scores),
            key=lambda t: (-t[1], t[0]) if cand.maximize else (t[1], t[0]),
        )
        oracle = [i for i, _ in ranked[:batch]]
        assert picked == oracle


def test_no_repeats_within_a_round():
    rng = np.random.default_rng(5)
    pool = al_pool(np.random.default_rng(9))
    partition = PoolPartition.initial(pool, list(range(6)))
    model = trained_model(pool, partition)
    for cand in [RandomCandidate(), BadgeCandidate(), MarginCandidate()]:
        picked = []
        for _ in range(8):
            pick = cand.select_next(model, pool, partition, picked, rng)
            assert pick not in picked
            assert partition.is_unlabeled(pick)
            picked.append(pick)


def test_random_candidate_errors():
    pool = al_pool(np.random.default_rng(1), n=8)
    partition = PoolPartition.initial(pool, list(range(6)))
    model = trained_model(pool, partition)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        RandomCandidate().select_next(model, pool, partition, partition.unlabeled, rng)
    untrained = LinearClassifier(np.zeros((3, 3)), TaskKind.MULTICLASS)
    with pytest.raises(NotTrainedError):
        RandomCandidate().select_next(untrained, pool, partition, [], rng)


class TestGradientEmbedding:
    def test_matches_residual_outer_product(self):
        # softmax((ln4)/2, -(ln4)/2) = (0.8, 0.2) at x = 2
        z = math.log(4.0) / 4.0
        model = LinearClassifier(np.array([[z, 0.0], [-z, 0.0]]), TaskKind.MULTICLASS, trained=True)
        x = np.array([2.0])
        p = model.predict_proba(x)
        np.testing.assert_allclose(p, [0.8, 0.2], rtol=1e-12)
        expected = [-0.2 * 2.0, -0.2, 0.2 * 2.0, 0.2]
        np.testing.assert_allclose(gradient_embedding(model, x), expected, rtol=1e-9)

    def test_confident_prediction_gives_near_zero_embedding(self):
        # p -> e_yhat saturates the residual toward the zero vector
        model = LinearClassifier(np.array([[20.0, 0.0], [-20.0, 0.0]]), TaskKind.MULTICLASS, trained=True)
        emb = gradient_embedding(model, np.array([1.0]))
        assert np.abs(emb).max() < 1e-8

    @pytest.mark.parametrize("task", [TaskKind.MULTICLASS, TaskKind.MULTILABEL])
    def test_matches_finite_difference_loss_gradient(self, task):
        """The embedding is the loss gradient at the pseudo-label, checked
        against central differences on the flattened weight matrix."""
        rng = np.random.default_rng(11)
        h = 1e-5
        for _ in range(5):
            d, k = 3, 3
            x = rng.standard_normal(d)
            model = LinearClassifier(0.3 * rng.standard_normal((k, d + 1)), task, trained=True)
            pseudo = np.zeros(k)
            pseudo[model.predict_proba(x).argmax()] = 1
            emb = gradient_embedding(model, x)
            numeric = np.zeros((k, d + 1))
            for i in range(k):
                for j in range(d + 1):
                    bumped = model.weights.copy()
                    bumped[i, j] += h
                    up = loss(LinearClassifier(bumped, task, trained=True), x[None, :], pseudo[None, :])
                    bumped[i, j] -= 2 * h
                    down = loss(LinearClassifier(bumped, task, trained=True), x[None, :], pseudo[None, :])
                    numeric[i, j] = (up - down) / (2 * h)
            scale = max(1.0, np.abs(emb).max())
            assert np.abs(emb - numeric.reshape(-1)).max() / scale < 1e-5

    def test_untrained_model_rejected(self):
        model = LinearClassifier(np.zeros((2, 2)), TaskKind.MULTICLASS)
        with pytest.raises(NotTrainedError):
            gradient_embedding(model, np.array([1.0]))


class TestBadge:
    def test_first_pick_is_max_embedding_norm(self):
        pool = al_pool(np.random.default_rng(21))
        partition = PoolPartition.initial(pool, list(range(6)))
        model = trained_model(pool, partition)
        pick = BadgeCandidate().select_next(model, pool, partition, [], np.random.default_rng(0))
        embeddings = gradient_embeddings(model, pool.features[partition.unlabeled])
        best = partition.unlabeled[int(np.argmax((embeddings**2).sum(axis=1)))]
        assert pick == best

    def test_duplicate_of_selected_point_never_sampled(self):
        rng = np.random.default_rng(31)
        base = al_pool(np.random.default_rng(22), n=20)
        features = base.features.copy()
        features[7] = features[3]  # id 7 duplicates id 3's embedding
        pool = Pool(TaskKind.MULTICLASS, features, base.ground_truth())
        partition = PoolPartition.initial(pool, list(range(3)))
        model = trained_model(pool, partition)
        cand = BadgeCandidate()
        picks = {cand.select_next(model, pool, partition, [3], rng) for _ in range(300)}
        assert 7 not in picks and 3 not in picks

    def test_all_zero_distances_fall_back_to_uniform(self):
        rng = np.random.default_rng(41)
        features = np.tile(np.array([[1.0, 0.5]]), (6, 1))
        labels = np.zeros((6, 2), dtype=np.int64)
        labels[:, 0] = 1
        labels[5] = [0, 1]
        pool = Pool(TaskKind.MULTICLASS, features, labels)
        partition = PoolPartition.initial(pool, [0, 5])
        model = trained_model(pool, partition)
        picks = {BadgeCandidate().select_next(model, pool, partition, [1], rng) for _ in range(200)}
        assert picks == {2, 3, 4}


class TestExpandCandidates:
    def test_per_class_expansion(self):
        out = expand_candidates(["random", "mlp"], 4)
        assert len(out) == 5
        assert [c.name for c in out[1:]] == ["mlp[0]", "mlp[1]", "mlp[2]", "mlp[3]"]

    def test_pcu_expansion(self):
        out = expand_candidates(["pcu"], 3)
        assert [c.target_class for c in out] == [0, 1, 2]

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            expand_candidates(["galaxy"], 3)
