"""Evaluation metrics, per-round records, and the CSV report format.

Accuracy over the pool is mean average precision for multi-label tasks
and balanced accuracy (mean per-class recall) for multi-class.  Class
balance is tracked as the labeled count of the rarest class; search
performance as the total positive labels collected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SelectionTrace, TaskKind
from .simenv import BanditInstance, exact_regret

# Column order of the metrics CSV; every metric carries a paired
# standard-error column in the aggregate report.
METRIC_FIELDS = (
    "labeled_total",
    "rarest_class_count",
    "accuracy_metric",
    "total_positives",
    "cumulative_reward",
    "cumulative_regret",
)


@dataclass
class RoundMetrics:
    """Snapshot logged at the end of one round of one trial.

    ``accuracy_metric`` is None in pure-bandit runs (no model to score);
    ``cumulative_regret`` is None outside simulation mode (no known
    ground-truth arm means).
    """

    round: int
    labeled_total: int
    rarest_class_count: int
    accuracy_metric: float | None
    total_positives: int
    cumulative_reward: float
    cumulative_regret: float | None


def balanced_accuracy(predictions: Sequence[int], labels: Sequence[int], num_classes: int) -> float:
    """Mean of per-class recalls.  Every class must appear in ``labels``."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels must have equal length")
    recalls = []
    for cls in range(num_classes):
        mask = labels == cls
        support = int(mask.sum())
        if support == 0:
            raise ValueError(f"class {cls} absent from labels; recall undefined")
        recalls.append(float((predictions[mask] == cls).sum()) / support)
    return float(np.mean(recalls))


def _average_precision(scores: np.ndarray, relevant: np.ndarray) -> float:
    # Stable sort on negated scores: ties resolve to the lower row id.
    order = np.argsort(-scores, kind="stable")
    hits = relevant[order]
    positives = int(hits.sum())
    if positives == 0:
        raise ValueError("average precision undefined for a class with no positives")
    ranks = np.flatnonzero(hits) + 1
    precisions = np.cumsum(hits)[hits == 1] / ranks
    return float(precisions.mean())


def mean_average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mean over classes of (non-interpolated) average precision."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 2:
        raise ValueError("scores and labels must be matching N x K matrices")
    return float(
        np.mean([_average_precision(scores[:, c], labels[:, c]) for c in range(scores.shape[1])])
    )


def imbalance_ratios(
    counts_or_labels: np.ndarray, task: TaskKind, num_examples: int | None = None
) -> tuple[float, float | None]:
    """(smallest/largest class count, mean positive rate across classes).

    Accepts either a length-K count vector (with ``num_examples`` for the
    multi-label rate) or a full N x K label matrix.  The second ratio is
    None for multi-class tasks.
    """
    arr = np.asarray(counts_or_labels)
    if arr.ndim == 2:
        counts = arr.sum(axis=0)
        num_examples = arr.shape[0]
    else:
        counts = arr
    if counts.max() == 0:
        raise ValueError("all class counts are zero")
    class_ratio = float(counts.min()) / float(counts.max())
    if task is not TaskKind.MULTILABEL:
        return class_ratio, None
    if num_examples is None:
        raise ValueError("num_examples is required for the multi-label positive ratio")
    return class_ratio, float(counts.mean()) / num_examples


def regret_curve(trace: SelectionTrace, instance: BanditInstance) -> list[float]:
    """Cumulative exact regret after each recorded round."""
    curve = []
    total = 0.0
    for record in trace.rounds:
        total += exact_regret(instance, record.weights, record.arms)
        curve.append(total)
    return curve


def aggregate_rounds(per_trial: Sequence[Sequence[RoundMetrics]], policy: str) -> list[dict]:
    """Mean and standard error of every metric across trials, per round.

    Standard error uses the sample standard deviation over trials; a
    single trial reports zero.  Metrics that are None in every trial
    stay None in the aggregate.
    """
    if not per_trial:
        raise ValueError("no trials to aggregate")
    num_rounds = len(per_trial[0])
    for trial in per_trial:
        if len(trial) != num_rounds:
            raise ValueError("trials disagree on the number of rounds")
    rows = []
    for r in range(num_rounds):
        row: dict = {"round": per_trial[0][r].round, "policy": policy}
        for name in METRIC_FIELDS:
            values = [getattr(trial[r], name) for trial in per_trial]
            if any(v is None for v in values):
                row[name] = None
                row[name + "_stderr"] = None
                continue
            arr = np.asarray(values, dtype=np.float64)
            row[name] = float(arr.mean())
            if arr.size == 1:
                row[name + "_stderr"] = 0.0
            else:
                row[name + "_stderr"] = float(arr.std(ddof=1) / np.sqrt(arr.size))
        rows.append(row)
    return rows


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.9g}"


def metrics_csv_text(rows: Sequence[dict]) -> str:
    """Render aggregate rows in the fixed column order, floats at nine
    significant digits, with a mandatory header."""
    columns = ["round", "policy"]
    for name in METRIC_FIELDS:
        columns.extend([name, name + "_stderr"])
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_value(row[col]) for col in columns))
    return "\n".join(lines) + "\n"
