"""Adaptive selection among active-learning strategies via Thompson sampling.

The package pairs a meta-policy (posterior sampling over each candidate
strategy's mean label vector) with class-balance reward functions, plus
baseline policies, exact-regret bandit simulation, synthetic imbalanced
pools, and evaluation metrics.  See the CLI (``tailor run/generate/
inspect``) for the file-based workflow.
"""

from .candidates import Candidate, expand_candidates, gradient_embedding
from .core import (
    Example,
    LabelAccessError,
    Pool,
    PoolPartition,
    RoundRecord,
    SelectionTrace,
    TaskKind,
    annotate_batch,
    arm_history,
    load_pool,
    save_pool,
)
from .metrics import (
    RoundMetrics,
    balanced_accuracy,
    imbalance_ratios,
    mean_average_precision,
    regret_curve,
)
from .model import LinearClassifier, TrainConfig, train
from .policies import (
    LinearThompsonPolicy,
    RandomMetaPolicy,
    ThompsonPolicy,
    UcbDiagnosticPolicy,
    contextual_arm,
    make_policy,
)
from .posterior import (
    ArmPosterior,
    RewardDiagnostics,
    diagnostics,
    discounted_update,
    sample,
    update,
)
from .rewards import (
    RewardKind,
    RewardSpec,
    diversity_weights,
    reward,
    round_weights,
    search_weights,
)
from .runner import (
    BanditSpec,
    ExperimentConfig,
    run_experiment,
    run_trial,
)
from .simenv import (
    BanditInstance,
    SyntheticPoolSpec,
    derive_imbalanced,
    exact_regret,
    generate_pool,
    sample_instance,
    sample_label,
)

__version__ = "0.1.0"
