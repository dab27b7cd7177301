"""Render per-round metric curves to PNG files next to the CSV report."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# Metric -> axis label; only curves with data get a figure.
_PLOTTED = {
    "accuracy_metric": "accuracy over the pool",
    "rarest_class_count": "labels in rarest class",
    "total_positives": "total positive labels",
    "cumulative_reward": "cumulative reward",
    "cumulative_regret": "cumulative regret",
}


def render_metric_figures(rows: Sequence[dict], out_dir: str | Path) -> list[Path]:
    """One figure per available metric: mean curve with a stderr band."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rounds = np.array([row["round"] for row in rows])
    policy = rows[0]["policy"] if rows else ""
    written: list[Path] = []
    for name, label in _PLOTTED.items():
        if not rows or rows[0][name] is None:
            continue
        mean = np.array([row[name] for row in rows], dtype=np.float64)
        stderr = np.array([row[name + "_stderr"] for row in rows], dtype=np.float64)
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        ax.plot(rounds, mean, marker="o", markersize=3, label=policy)
        ax.fill_between(rounds, mean - stderr, mean + stderr, alpha=0.25)
        ax.set_xlabel("round")
        ax.set_ylabel(label)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
