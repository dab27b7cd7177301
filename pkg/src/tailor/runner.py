"""End-to-end experiment orchestration.

A trial runs T rounds.  In active-learning mode each round computes the
weight vector from the counts so far, lets the policy pick B arms, runs
those candidates sequentially to select B distinct unlabeled examples,
annotates them all at once, reveals rewards, updates the policy, and
retrains the model.  Pure-bandit mode skips candidates and the model:
arms emit labels straight from a known-parameter instance so regret is
exact.

Randomness: every trial derives its own 64-bit seed from (master seed,
trial index) via splitmix64, then splits that into independent streams
for seed-set sampling, policy draws, candidate draws, environment label
draws, and weight sequences.  Separate streams keep example selection
identical across policies that consume different amounts of randomness.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .candidates import expand_candidates
from .core import (
    Pool,
    PoolPartition,
    RoundRecord,
    SelectionTrace,
    TaskKind,
    annotate_batch,
)
from .metrics import (
    RoundMetrics,
    aggregate_rounds,
    balanced_accuracy,
    mean_average_precision,
)
from .model import TrainConfig, train
from .policies import make_policy
from .rewards import RewardKind, RewardSpec, reward, round_weights, search_weights
from .simenv import (
    BanditInstance,
    SyntheticPoolSpec,
    exact_regret,
    sample_instance,
    sample_label,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream tags within a trial.
_SEED_SET, _POLICY, _CANDIDATE, _ENV, _WEIGHTS = range(5)

_SEED_ATTEMPTS = 100


def splitmix64(state: int) -> int:
    """One splitmix64 scrambling round (public-domain mixing constants)."""
    state = (state + _GOLDEN) & _MASK64
    state = ((state ^ (state >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    state = ((state ^ (state >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state ^ (state >> 31)


def derive_seed(master: int, *path: int) -> int:
    """Mix a master seed with an index path into a fresh 64-bit seed."""
    state = master & _MASK64
    for index in path:
        state = splitmix64((state ^ ((index + 1) * _GOLDEN)) & _MASK64)
    return state


class TrialError(RuntimeError):
    """A trial aborted; the message carries the failing trial index."""


@dataclass(frozen=True)
class BanditSpec:
    """Pure-bandit environment: arm count, label space, weight schedule."""

    num_arms: int
    num_classes: int
    task: TaskKind
    weights: str = "search"  # "search" (constant 1/K) or "random" per round


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str  # "active_learning" or "pure_bandit"
    rounds: int
    batch: int
    seed_size: int = 10
    trials: int = 4
    master_seed: int = 0
    policy: str = "tailor"
    discount: float = 0.9
    reward: RewardSpec = field(default_factory=lambda: RewardSpec(RewardKind.CLASS_DIVERSITY))
    candidates: tuple[str, ...] = ("random",)
    train: TrainConfig = field(default_factory=TrainConfig)
    bandit: BanditSpec | None = None
    pool_path: str | None = None
    pool_spec: SyntheticPoolSpec | None = None
    pool_seed: int = 0
    contextual_prior_precision: float = 1.0
    contextual_noise_var: float = 1.0


@dataclass
class TrialResult:
    trace: SelectionTrace
    metrics: list[RoundMetrics]
    meta: dict


@dataclass
class ExperimentResult:
    trials: list[TrialResult]
    aggregates: list[dict]


def _pool_accuracy(classifier, pool: Pool) -> float:
    truth = pool.ground_truth()
    scores = classifier.predict_matrix(pool.features)
    if pool.task is TaskKind.MULTICLASS:
        return balanced_accuracy(scores.argmax(axis=1), truth.argmax(axis=1), pool.num_classes)
    return mean_average_precision(scores, truth)


def draw_seed_set(pool: Pool, seed_size: int, rng: np.random.Generator) -> list[int]:
    """Uniform seed draw, resampled until every class is represented.

    A class counts as covered once one labeled example carries it (the
    positive bit for multi-label, membership for multi-class).  Gives up
    after 100 attempts, which signals an infeasible seed size.
    """
    if not 1 <= seed_size <= pool.num_examples:
        raise ValueError(f"seed_size {seed_size} out of range for pool of {pool.num_examples}")
    truth = pool.ground_truth()
    for _ in range(_SEED_ATTEMPTS):
        ids = rng.choice(pool.num_examples, size=seed_size, replace=False)
        if (truth[ids].sum(axis=0) > 0).all():
            return [int(i) for i in ids]
    raise RuntimeError(
        f"seed set of size {seed_size} failed to cover every class in {_SEED_ATTEMPTS} attempts"
    )


def _streams(config: ExperimentConfig, trial_index: int) -> dict[int, np.random.Generator]:
    return {
        tag: np.random.default_rng(derive_seed(config.master_seed, trial_index, tag))
        for tag in (_SEED_SET, _POLICY, _CANDIDATE, _ENV, _WEIGHTS)
    }


def _bandit_weights(spec: BanditSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.weights == "search":
        return search_weights(spec.num_classes)
    bound = 1.0 / spec.num_classes
    return rng.uniform(-bound, bound, spec.num_classes)


def run_trial(config: ExperimentConfig, pool: Pool | None, trial_index: int) -> TrialResult:
    """Execute one trial and return its trace, metrics, and replay metadata."""
    streams = _streams(config, trial_index)
    if config.mode == "pure_bandit":
        return _run_bandit_trial(config, streams)
    if pool is None:
        raise ValueError("active_learning mode requires a pool")
    return _run_active_learning_trial(config, pool, streams)


def _run_bandit_trial(config: ExperimentConfig, streams) -> TrialResult:
    spec = config.bandit
    if spec is None:
        raise ValueError("pure_bandit mode requires a bandit spec")
    policy = make_policy(
        config.policy,
        num_arms=spec.num_arms,
        num_classes=spec.num_classes,
        task=spec.task,
        discount=config.discount,
        horizon=config.rounds,
        prior_precision=config.contextual_prior_precision,
        noise_var=config.contextual_noise_var,
    )
    instance = sample_instance(spec.num_arms, spec.num_classes, spec.task, streams[_ENV])
    trace = SelectionTrace(spec.num_arms)
    rows: list[RoundMetrics] = []
    counts = np.zeros(spec.num_classes, dtype=np.int64)
    cumulative_reward = 0.0
    cumulative_regret = 0.0
    for t in range(1, config.rounds + 1):
        weights = _bandit_weights(spec, streams[_WEIGHTS])
        chosen = policy.choose_arms(weights, config.batch, streams[_POLICY])
        labels = [sample_label(instance, arm, streams[_ENV]) for arm in chosen]
        slot_rewards = [reward(weights, y) for y in labels]
        policy.observe(chosen, labels, weights)
        counts += np.asarray(labels).sum(axis=0)
        cumulative_reward += sum(slot_rewards)
        cumulative_regret += exact_regret(instance, weights, chosen)
        trace.rounds.append(RoundRecord(chosen, None, np.asarray(labels), slot_rewards, weights))
        rows.append(
            RoundMetrics(
                round=t,
                labeled_total=t * config.batch,
                rarest_class_count=int(counts.min()),
                accuracy_metric=None,
                total_positives=int(counts.sum()),
                cumulative_reward=cumulative_reward,
                cumulative_regret=cumulative_regret,
            )
        )
    return TrialResult(trace, rows, {"thetas": instance.thetas.tolist()})


def _run_active_learning_trial(config: ExperimentConfig, pool: Pool, streams) -> TrialResult:
    needed = config.seed_size + config.rounds * config.batch
    if needed > pool.num_examples:
        raise ValueError(
            f"pool of {pool.num_examples} examples cannot supply seed {config.seed_size} "
            f"plus {config.rounds} rounds of {config.batch}"
        )
    config.reward.validate_for_task(pool.task, pool.num_classes)
    seed_ids = draw_seed_set(pool, config.seed_size, streams[_SEED_SET])
    partition = PoolPartition.initial(pool, seed_ids)
    classifier = train(*pool.training_data(partition), pool.task, config.train)
    arms = expand_candidates(config.candidates, pool.num_classes)
    policy = make_policy(
        config.policy,
        num_arms=len(arms),
        num_classes=pool.num_classes,
        task=pool.task,
        discount=config.discount,
        horizon=config.rounds,
        prior_precision=config.contextual_prior_precision,
        noise_var=config.contextual_noise_var,
    )
    trace = SelectionTrace(len(arms))
    rows: list[RoundMetrics] = []
    cumulative_reward = 0.0
    for t in range(1, config.rounds + 1):
        weights = round_weights(config.reward, partition.class_counts, partition.num_labeled)
        chosen = policy.choose_arms(weights, config.batch, streams[_POLICY])
        selected: list[int] = []
        for arm in chosen:
            picked = arms[arm].select_next(classifier, pool, partition, selected, streams[_CANDIDATE])
            selected.append(picked)
        partition, labels = annotate_batch(partition, selected, pool)
        slot_rewards = [reward(weights, y) for y in labels]
        policy.observe(chosen, labels, weights)
        classifier = train(*pool.training_data(partition), pool.task, config.train)
        cumulative_reward += sum(slot_rewards)
        trace.rounds.append(RoundRecord(chosen, selected, np.asarray(labels), slot_rewards, weights))
        rows.append(
            RoundMetrics(
                round=t,
                labeled_total=partition.num_labeled,
                rarest_class_count=int(partition.class_counts.min()),
                accuracy_metric=_pool_accuracy(classifier, pool),
                total_positives=int(partition.class_counts.sum()),
                cumulative_reward=cumulative_reward,
                cumulative_regret=None,
            )
        )
    return TrialResult(trace, rows, {"seed_ids": seed_ids})


def _worker_count(trials: int) -> int:
    env = os.environ.get("TAILOR_THREADS")
    if env is not None:
        cap = int(env)
        if cap < 1:
            raise ValueError("TAILOR_THREADS must be a positive integer")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(trials, cap))


def run_experiment(config: ExperimentConfig, pool: Pool | None = None) -> ExperimentResult:
    """Run all trials (in parallel when allowed) and aggregate per round.

    Trial results are deterministic functions of (config, pool, trial
    index), so the parallel and sequential paths produce identical
    output.
    """
    if config.trials < 1:
        raise ValueError("trial count must be at least 1")
    workers = _worker_count(config.trials)
    results: list[TrialResult | None] = [None] * config.trials
    if workers == 1:
        for k in range(config.trials):
            try:
                results[k] = run_trial(config, pool, k)
            except Exception as err:
                raise TrialError(f"trial {k} failed: {err}") from err
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {k: executor.submit(run_trial, config, pool, k) for k in range(config.trials)}
            for k, future in futures.items():
                try:
                    results[k] = future.result()
                except Exception as err:
                    raise TrialError(f"trial {k} failed: {err}") from err
    trials = [r for r in results if r is not None]
    return ExperimentResult(trials, aggregate_rounds([t.metrics for t in trials], config.policy))


def trial_trace_records(trial_index: int, result: TrialResult) -> list[dict]:
    """JSON-ready records for one trial: a metadata record, then one per round."""
    records = [{"trial": trial_index, **result.meta}]
    for record in result.trace.rounds:
        records.append(
            {
                "trial": trial_index,
                "round": len(records),
                "arms": [int(a) for a in record.arms],
                "ids": None if record.example_ids is None else [int(i) for i in record.example_ids],
                "labels": [[int(v) for v in row] for row in record.labels],
                "rewards": [float(r) for r in record.rewards],
                "weights": [float(w) for w in record.weights],
            }
        )
    return records


def _replay_active_learning(config: ExperimentConfig, pool: Pool, meta: dict, rounds: list[dict]) -> list[RoundMetrics]:
    partition = PoolPartition.initial(pool, meta["seed_ids"])
    rows: list[RoundMetrics] = []
    cumulative_reward = 0.0
    for record in rounds:
        weights = np.asarray(record["weights"], dtype=np.float64)
        partition, labels = annotate_batch(partition, record["ids"], pool)
        if [[int(v) for v in y] for y in labels] != record["labels"]:
            raise ValueError(f"trace round {record['round']} labels disagree with the pool")
        cumulative_reward += sum(reward(weights, y) for y in labels)
        classifier = train(*pool.training_data(partition), pool.task, config.train)
        rows.append(
            RoundMetrics(
                round=record["round"],
                labeled_total=partition.num_labeled,
                rarest_class_count=int(partition.class_counts.min()),
                accuracy_metric=_pool_accuracy(classifier, pool),
                total_positives=int(partition.class_counts.sum()),
                cumulative_reward=cumulative_reward,
                cumulative_regret=None,
            )
        )
    return rows


def _replay_bandit(config: ExperimentConfig, meta: dict, rounds: list[dict]) -> list[RoundMetrics]:
    assert config.bandit is not None
    instance = BanditInstance(np.asarray(meta["thetas"]), config.bandit.task)
    counts = np.zeros(config.bandit.num_classes, dtype=np.int64)
    rows: list[RoundMetrics] = []
    cumulative_reward = 0.0
    cumulative_regret = 0.0
    for record in rounds:
        weights = np.asarray(record["weights"], dtype=np.float64)
        labels = np.asarray(record["labels"], dtype=np.int64)
        counts += labels.sum(axis=0)
        cumulative_reward += sum(reward(weights, y) for y in labels)
        cumulative_regret += exact_regret(instance, weights, record["arms"])
        rows.append(
            RoundMetrics(
                round=record["round"],
                labeled_total=record["round"] * config.batch,
                rarest_class_count=int(counts.min()),
                accuracy_metric=None,
                total_positives=int(counts.sum()),
                cumulative_reward=cumulative_reward,
                cumulative_regret=cumulative_regret,
            )
        )
    return rows


def replay_metrics(config: ExperimentConfig, pool: Pool | None, records: Sequence[dict]) -> list[dict]:
    """Recompute the aggregate metric rows from parsed trace records.

    Replay re-annotates, retrains, and re-derives every metric; because
    training and metric computation are deterministic, the result matches
    the live run byte for byte once rendered to CSV.
    """
    by_trial: dict[int, dict] = {}
    for record in records:
        entry = by_trial.setdefault(record["trial"], {"meta": None, "rounds": []})
        if "round" in record:
            entry["rounds"].append(record)
        else:
            entry["meta"] = record
    per_trial = []
    for trial_index in sorted(by_trial):
        entry = by_trial[trial_index]
        if entry["meta"] is None:
            raise ValueError(f"trace is missing the metadata record for trial {trial_index}")
        rounds = sorted(entry["rounds"], key=lambda r: r["round"])
        if config.mode == "pure_bandit":
            per_trial.append(_replay_bandit(config, entry["meta"], rounds))
        else:
            if pool is None:
                raise ValueError("replaying an active-learning trace requires the pool")
            per_trial.append(_replay_active_learning(config, pool, entry["meta"], rounds))
    return aggregate_rounds(per_trial, config.policy)
