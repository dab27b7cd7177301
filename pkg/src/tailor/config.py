"""Experiment configuration: a flat key = value document with # comments.

The format is a TOML subset: scalar keys at the top level plus optional
``[bandit]`` and ``[pool]`` tables.  Unknown keys are rejected by name so
typos fail loudly, and every constraint violation names the offending
key.  ``serialize_config`` emits a canonical document that parses back
to an equal config.
"""

from __future__ import annotations

import sys
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .candidates import validate_candidate_name
from .core import TaskKind
from .model import TrainConfig
from .policies import POLICY_KINDS
from .rewards import RewardKind, RewardSpec
from .runner import BanditSpec, ExperimentConfig
from .simenv import SyntheticPoolSpec


class ConfigError(ValueError):
    """Malformed, unknown, or out-of-range configuration input."""


_TOP_KEYS = {
    "mode", "T", "B", "seed_size", "trials", "seed", "policy", "discount",
    "reward", "negative_weighting", "domain_weights", "candidates", "pool",
    "lr", "epochs", "grad_tol", "l2",
    "contextual_prior_precision", "contextual_noise_var",
}
_BANDIT_KEYS = {"M", "K", "task", "weights"}
_POOL_KEYS = {"task", "K", "d", "N", "proportions", "separation", "positive_rate", "seed"}

_MODES = ("active_learning", "pure_bandit")


def _require(data: dict, key: str) -> Any:
    if key not in data:
        raise ConfigError(f"missing required key '{key}'")
    return data[key]


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{key}' must be an integer")
    return value


def _as_float(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number")
    return float(value)


def _as_bool(value: Any, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"'{key}' must be true or false")
    return value


def _as_str(value: Any, key: str, allowed: tuple[str, ...] | None = None) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"'{key}' must be a string")
    if allowed is not None and value not in allowed:
        raise ConfigError(f"'{key}' must be one of {allowed}, got '{value}'")
    return value


def _as_float_list(value: Any, key: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{key}' must be a non-empty list of numbers")
    return tuple(_as_float(v, key) for v in value)


def _positive_int(value: Any, key: str) -> int:
    out = _as_int(value, key)
    if out < 1:
        raise ConfigError(f"'{key}' must be at least 1, got {out}")
    return out


def _check_unknown(data: dict, allowed: set[str], prefix: str = "") -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key '{prefix}{key}'")


def _parse_task(value: Any, key: str) -> TaskKind:
    name = _as_str(value, key, ("multilabel", "multiclass"))
    return TaskKind(name)


def _parse_pool_table(table: dict) -> tuple[SyntheticPoolSpec, int]:
    _check_unknown(table, _POOL_KEYS, "pool.")
    task = _parse_task(_require(table, "task"), "pool.task")
    spec = SyntheticPoolSpec(
        task=task,
        num_classes=_positive_int(_require(table, "K"), "pool.K"),
        num_features=_positive_int(_require(table, "d"), "pool.d"),
        num_examples=_positive_int(_require(table, "N"), "pool.N"),
        class_proportions=(
            _as_float_list(table["proportions"], "pool.proportions")
            if "proportions" in table
            else None
        ),
        cluster_separation=_as_float(table.get("separation", 1.0), "pool.separation"),
        positive_rate=(
            _as_float_list(table["positive_rate"], "pool.positive_rate")
            if "positive_rate" in table
            else None
        ),
    )
    seed = _as_int(table.get("seed", 0), "pool.seed")
    return spec, seed


def _parse_bandit_table(table: dict) -> BanditSpec:
    _check_unknown(table, _BANDIT_KEYS, "bandit.")
    return BanditSpec(
        num_arms=_positive_int(_require(table, "M"), "bandit.M"),
        num_classes=_positive_int(_require(table, "K"), "bandit.K"),
        task=_parse_task(_require(table, "task"), "bandit.task"),
        weights=_as_str(table.get("weights", "search"), "bandit.weights", ("search", "random")),
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a configuration document."""
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as err:
        raise ConfigError(f"malformed config: {err}") from err

    _check_unknown(data, _TOP_KEYS | {"bandit"})
    mode = _as_str(_require(data, "mode"), "mode", _MODES)
    rounds = _positive_int(_require(data, "T"), "T")
    batch = _positive_int(_require(data, "B"), "B")

    discount = _as_float(data.get("discount", 0.9), "discount")
    if not 0.0 < discount <= 1.0:
        raise ConfigError(f"'discount' must be in (0, 1], got {discount}")

    reward_kind = RewardKind(_as_str(data.get("reward", "diversity"), "reward",
                                     tuple(k.value for k in RewardKind)))
    domain_weights = (
        _as_float_list(data["domain_weights"], "domain_weights")
        if "domain_weights" in data
        else None
    )
    negative_weighting = _as_bool(data.get("negative_weighting", False), "negative_weighting")
    try:
        reward_spec = RewardSpec(reward_kind, domain_weights, negative_weighting)
    except ValueError as err:
        raise ConfigError(str(err)) from err

    candidates = data.get("candidates", ["random"])
    if not isinstance(candidates, list) or not candidates:
        raise ConfigError("'candidates' must be a non-empty list of strategy names")
    for name in candidates:
        _as_str(name, "candidates")
        try:
            validate_candidate_name(name)
        except ValueError as err:
            raise ConfigError(f"candidates: {err}") from err

    pool_path: str | None = None
    pool_spec: SyntheticPoolSpec | None = None
    pool_seed = 0
    if "pool" in data:
        if isinstance(data["pool"], str):
            pool_path = data["pool"]
        elif isinstance(data["pool"], dict):
            try:
                pool_spec, pool_seed = _parse_pool_table(data["pool"])
            except ValueError as err:
                raise ConfigError(str(err)) from err
        else:
            raise ConfigError("'pool' must be a file path or a [pool] table")

    bandit: BanditSpec | None = None
    if mode == "pure_bandit":
        if "bandit" not in data:
            raise ConfigError("pure_bandit mode requires a [bandit] table")
        bandit = _parse_bandit_table(data["bandit"])
    elif "bandit" in data:
        raise ConfigError("[bandit] table is only valid in pure_bandit mode")

    lr = _as_float(data.get("lr", 0.1), "lr")
    if lr <= 0:
        raise ConfigError(f"'lr' must be positive, got {lr}")
    grad_tol = _as_float(data.get("grad_tol", 1e-6), "grad_tol")
    if grad_tol <= 0:
        raise ConfigError(f"'grad_tol' must be positive, got {grad_tol}")
    l2 = _as_float(data.get("l2", 0.0), "l2")
    if l2 < 0:
        raise ConfigError(f"'l2' must be non-negative, got {l2}")
    prior_precision = _as_float(data.get("contextual_prior_precision", 1.0), "contextual_prior_precision")
    if prior_precision <= 0:
        raise ConfigError(f"'contextual_prior_precision' must be positive, got {prior_precision}")
    noise_var = _as_float(data.get("contextual_noise_var", 1.0), "contextual_noise_var")
    if noise_var <= 0:
        raise ConfigError(f"'contextual_noise_var' must be positive, got {noise_var}")

    return ExperimentConfig(
        mode=mode,
        rounds=rounds,
        batch=batch,
        seed_size=_positive_int(data.get("seed_size", 10), "seed_size"),
        trials=_positive_int(data.get("trials", 4), "trials"),
        master_seed=_as_int(data.get("seed", 0), "seed"),
        policy=_as_str(data.get("policy", "tailor"), "policy", POLICY_KINDS),
        discount=discount,
        reward=reward_spec,
        candidates=tuple(candidates),
        train=TrainConfig(
            lr=lr,
            epochs=_positive_int(data.get("epochs", 500), "epochs"),
            grad_tol=grad_tol,
            l2=l2,
        ),
        bandit=bandit,
        pool_path=pool_path,
        pool_spec=pool_spec,
        pool_seed=pool_seed,
        contextual_prior_precision=prior_precision,
        contextual_noise_var=noise_var,
    )


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, tuple):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return repr(value)


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical document for a config; parsing it back yields an equal config."""
    lines = [
        f"mode = {_fmt(config.mode)}",
        f"T = {config.rounds}",
        f"B = {config.batch}",
        f"seed_size = {config.seed_size}",
        f"trials = {config.trials}",
        f"seed = {config.master_seed}",
        f"policy = {_fmt(config.policy)}",
        f"discount = {_fmt(config.discount)}",
        f"reward = {_fmt(config.reward.kind.value)}",
        f"negative_weighting = {_fmt(config.reward.negative_weighting)}",
    ]
    if config.reward.domain_weights is not None:
        lines.append(f"domain_weights = {_fmt(config.reward.domain_weights)}")
    lines.append(f"candidates = {_fmt(config.candidates)}")
    if config.pool_path is not None:
        lines.append(f"pool = {_fmt(config.pool_path)}")
    lines += [
        f"lr = {_fmt(config.train.lr)}",
        f"epochs = {config.train.epochs}",
        f"grad_tol = {_fmt(config.train.grad_tol)}",
        f"l2 = {_fmt(config.train.l2)}",
        f"contextual_prior_precision = {_fmt(config.contextual_prior_precision)}",
        f"contextual_noise_var = {_fmt(config.contextual_noise_var)}",
    ]
    if config.bandit is not None:
        lines += [
            "",
            "[bandit]",
            f"M = {config.bandit.num_arms}",
            f"K = {config.bandit.num_classes}",
            f"task = {_fmt(config.bandit.task.value)}",
            f"weights = {_fmt(config.bandit.weights)}",
        ]
    if config.pool_spec is not None:
        spec = config.pool_spec
        lines += [
            "",
            "[pool]",
            f"task = {_fmt(spec.task.value)}",
            f"K = {spec.num_classes}",
            f"d = {spec.num_features}",
            f"N = {spec.num_examples}",
        ]
        if spec.class_proportions is not None:
            lines.append(f"proportions = {_fmt(spec.class_proportions)}")
        lines.append(f"separation = {_fmt(spec.cluster_separation)}")
        if spec.positive_rate is not None:
            lines.append(f"positive_rate = {_fmt(spec.positive_rate)}")
        lines.append(f"seed = {config.pool_seed}")
    return "\n".join(lines) + "\n"
