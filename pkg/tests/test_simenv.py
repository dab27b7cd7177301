import numpy as np
import pytest

from tailor.core import TaskKind
from tailor.metrics import balanced_accuracy, imbalance_ratios
from tailor.model import TrainConfig, train
from tailor.rewards import search_weights
from tailor.runner import BanditSpec, ExperimentConfig, run_trial
from tailor.simenv import (
    BanditInstance,
    SyntheticPoolSpec,
    derive_imbalanced,
    exact_regret,
    generate_pool,
    sample_instance,
    sample_label,
)


class TestSampleLabel:
    def test_degenerate_bernoulli(self):
        inst = BanditInstance(np.array([[1.0, 0.0]]), TaskKind.MULTILABEL)
        rng = np.random.default_rng(0)
        for _ in range(50):
            assert sample_label(inst, 0, rng).tolist() == [1, 0]

    def test_point_mass_categorical(self):
        inst = BanditInstance(np.array([[0.0, 0.0, 1.0]]), TaskKind.MULTICLASS)
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert sample_label(inst, 0, rng).tolist() == [0, 0, 1]

    def test_monte_carlo_means(self):
        inst = BanditInstance(np.full((1, 4), 0.5), TaskKind.MULTILABEL)
        rng = np.random.default_rng(2)
        draws = np.stack([sample_label(inst, 0, rng) for _ in range(10**5)])
        np.testing.assert_allclose(draws.mean(axis=0), 0.5, atol=0.01)

    def test_means_within_three_standard_errors(self):
        rng = np.random.default_rng(3)
        for task in (TaskKind.MULTILABEL, TaskKind.MULTICLASS):
            inst = sample_instance(2, 3, task, rng)
            n = 10**5
            draws = np.stack([sample_label(inst, 1, rng) for _ in range(n)])
            se = np.sqrt(inst.thetas[1] * (1 - inst.thetas[1]) / n)
            assert (np.abs(draws.mean(axis=0) - inst.thetas[1]) <= 3 * se + 1e-12).all()

    def test_arm_out_of_range(self):
        inst = BanditInstance(np.array([[1.0, 0.0]]), TaskKind.MULTILABEL)
        with pytest.raises(ValueError):
            sample_label(inst, 1, np.random.default_rng(0))


class TestExactRegret:
    def setup_method(self):
        self.inst = BanditInstance(np.array([[1.0, 0.0], [0.0, 1.0]]), TaskKind.MULTILABEL)
        self.v = np.array([0.5, -0.5])

    def test_optimal_choices_have_zero_regret(self):
        assert exact_regret(self.inst, self.v, [0, 0, 0]) == 0.0

    def test_single_bad_choice(self):
        assert exact_regret(self.inst, self.v, [1]) == pytest.approx(1.0)

    def test_mixed_batch_additivity(self):
        assert exact_regret(self.inst, self.v, [0, 1]) == pytest.approx(1.0)
        split = exact_regret(self.inst, self.v, [0]) + exact_regret(self.inst, self.v, [1])
        assert exact_regret(self.inst, self.v, [0, 1]) == pytest.approx(split)

    def test_non_negative_on_random_input(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            m, k = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            inst = sample_instance(m, k, TaskKind.MULTILABEL, rng)
            v = rng.uniform(-1 / k, 1 / k, size=k)
            chosen = [int(a) for a in rng.integers(m, size=int(rng.integers(1, 8)))]
            assert exact_regret(inst, v, chosen) >= 0.0


class TestGeneratePool:
    def test_even_split_sizes(self):
        spec = SyntheticPoolSpec(TaskKind.MULTICLASS, 2, 2, 100, (0.5, 0.5), 3.0)
        pool = generate_pool(spec, np.random.default_rng(0))
        assert pool.ground_truth().sum(axis=0).tolist() == [50, 50]

    def test_realized_imbalance_matches_spec(self):
        spec = SyntheticPoolSpec(TaskKind.MULTICLASS, 2, 2, 100, (0.9, 0.1), 3.0)
        pool = generate_pool(spec, np.random.default_rng(1))
        ratio, _ = imbalance_ratios(pool.ground_truth(), TaskKind.MULTICLASS)
        assert ratio == pytest.approx(1 / 9)

    def test_well_separated_pool_is_learnable(self):
        """Training on 10% random labels of a separation-10 pool should
        leave balanced accuracy above 0.95."""
        spec = SyntheticPoolSpec(TaskKind.MULTICLASS, 3, 2, 400, (0.5, 0.3, 0.2), 10.0)
        rng = np.random.default_rng(2)
        pool = generate_pool(spec, rng)
        ids = rng.choice(400, size=40, replace=False)
        clf = train(pool.features[ids], pool.ground_truth()[ids], TaskKind.MULTICLASS, TrainConfig())
        preds = clf.predict_matrix(pool.features).argmax(axis=1)
        truth = pool.ground_truth().argmax(axis=1)
        assert balanced_accuracy(preds, truth, 3) > 0.95

    def test_multilabel_rates_roughly_respected(self):
        spec = SyntheticPoolSpec(
            TaskKind.MULTILABEL, 3, 2, 4000, cluster_separation=4.0, positive_rate=(0.5, 0.2, 0.05)
        )
        pool = generate_pool(spec, np.random.default_rng(3))
        rates = pool.ground_truth().mean(axis=0)
        np.testing.assert_allclose(rates, [0.5, 0.2, 0.05], atol=0.03)

    def test_class_rounding_to_zero_rejected(self):
        spec = SyntheticPoolSpec(TaskKind.MULTICLASS, 2, 2, 100, (0.999, 0.001), 3.0)
        with pytest.raises(ValueError):
            generate_pool(spec, np.random.default_rng(0))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SyntheticPoolSpec(TaskKind.MULTICLASS, 2, 2, 10, (0.7, 0.7), 1.0)
        with pytest.raises(ValueError):
            SyntheticPoolSpec(TaskKind.MULTILABEL, 2, 2, 10)


class TestDeriveImbalanced:
    def source_pool(self):
        spec = SyntheticPoolSpec(TaskKind.MULTICLASS, 10, 3, 500, tuple([0.1] * 10), 2.0)
        return generate_pool(spec, np.random.default_rng(7))

    def test_merge_to_two_classes(self):
        pool = self.source_pool()
        out = derive_imbalanced(pool, 2)
        counts = out.ground_truth().sum(axis=0)
        original = pool.ground_truth().sum(axis=0)
        assert counts[0] == original[0]
        assert counts[1] == original[1:].sum()
        assert out.num_examples == pool.num_examples

    def test_identity_when_k_unchanged(self):
        pool = self.source_pool()
        out = derive_imbalanced(pool, 10)
        np.testing.assert_array_equal(out.ground_truth(), pool.ground_truth())

    def test_features_bit_exact(self):
        pool = self.source_pool()
        out = derive_imbalanced(pool, 4)
        assert np.array_equal(out.features, pool.features)

    def test_range_checks(self):
        pool = self.source_pool()
        for bad in (1, 11):
            with pytest.raises(ValueError):
                derive_imbalanced(pool, bad)


def test_bayesian_regret_estimator_matches_nested_loop_oracle():
    """Mean simulated regret of the uniform policy over prior-drawn
    instances must sit within three standard errors of the closed
    expectation computed by brute-force enumeration of (t, j, arm)."""
    config = ExperimentConfig(
        mode="pure_bandit",
        rounds=3,
        batch=2,
        trials=1,
        policy="random_meta",
        bandit=BanditSpec(num_arms=2, num_classes=2, task=TaskKind.MULTILABEL),
    )
    v = search_weights(2)
    diffs = []
    for trial in range(400):
        result = run_trial(config, None, trial)
        simulated = result.metrics[-1].cumulative_regret
        thetas = np.asarray(result.meta["thetas"])
        scores = thetas @ v
        expected = 0.0
        for _ in range(config.rounds):
            for _ in range(config.batch):
                for arm in range(2):
                    expected += (scores.max() - scores[arm]) / 2
        diffs.append(simulated - expected)
    diffs = np.asarray(diffs)
    stderr = diffs.std(ddof=1) / np.sqrt(diffs.size)
    assert abs(diffs.mean()) <= 3 * stderr
