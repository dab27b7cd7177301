"""Command-line front end.

Subcommands:

* ``run``      - execute an experiment; writes metrics.csv, trace.jsonl,
                 and metric figures into the output directory.
* ``generate`` - sample a synthetic pool from the [pool] config table and
                 write it as a JSON-lines file.
* ``inspect``  - print a pool summary (size, classes, imbalance ratios).

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 runtime
failure.  All randomness flows from the config's master seed (or the
--seed override); nothing reads the clock or OS entropy.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config
from .core import Pool, PoolFormatError, TaskKind, load_pool, save_pool
from .figures import render_metric_figures
from .metrics import imbalance_ratios, metrics_csv_text
from .runner import ExperimentConfig, derive_seed, run_experiment, trial_trace_records
from .simenv import generate_pool

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_RUNTIME = 3

# Stream tag for in-memory pool generation during `run`.
_POOL_STREAM = 100


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tailor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("--config", required=True, help="path to the experiment config")
    run.add_argument("--pool", default=None, help="pool file (overrides the config's pool)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="master seed override")
    run.add_argument("--trials", type=int, default=None, help="trial count override")
    run.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    gen = sub.add_parser("generate", help="write a synthetic pool file")
    gen.add_argument("--config", required=True, help="config with a [pool] table")
    gen.add_argument("--out", default=".", help="output directory (writes pool.jsonl)")
    gen.add_argument("--seed", type=int, default=None, help="pool seed override")

    ins = sub.add_parser("inspect", help="summarize a pool file")
    ins.add_argument("--pool", required=True, help="pool file to inspect")
    return parser


def _load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise _IoFailure(f"cannot read config: {err}") from err
    return parse_config(text)


class _IoFailure(Exception):
    pass


def _resolve_pool(config: ExperimentConfig, pool_flag: str | None) -> Pool | None:
    path = pool_flag or config.pool_path
    if path is not None:
        try:
            return load_pool(path)
        except OSError as err:
            raise _IoFailure(f"cannot read pool: {err}") from err
    if config.pool_spec is not None:
        rng = np.random.default_rng(derive_seed(config.pool_seed, _POOL_STREAM))
        return generate_pool(config.pool_spec, rng)
    if config.mode == "active_learning":
        raise ConfigError("active_learning mode needs a pool: pass --pool or configure one")
    return None


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    from dataclasses import replace

    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("'trials' must be at least 1")
        config = replace(config, trials=args.trials)
    return config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _apply_overrides(_load_config(args.config), args)
    pool = _resolve_pool(config, args.pool)
    result = run_experiment(config, pool)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.csv").write_text(metrics_csv_text(result.aggregates), encoding="utf-8")
        with (out_dir / "trace.jsonl").open("w", encoding="utf-8") as handle:
            for k, trial in enumerate(result.trials):
                for record in trial_trace_records(k, trial):
                    handle.write(json.dumps(record, separators=(",", ":")) + "\n")
    except OSError as err:
        raise _IoFailure(f"cannot write outputs: {err}") from err
    written = ["metrics.csv", "trace.jsonl"]
    if not args.no_figures:
        written += [p.name for p in render_metric_figures(result.aggregates, out_dir)]
    print(f"wrote {', '.join(written)} to {out_dir}")
    return EXIT_OK


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if config.pool_spec is None:
        raise ConfigError("generate requires a [pool] table in the config")
    seed = args.seed if args.seed is not None else config.pool_seed
    rng = np.random.default_rng(derive_seed(seed, _POOL_STREAM))
    pool = generate_pool(config.pool_spec, rng)
    out_dir = Path(args.out)
    path = out_dir / "pool.jsonl"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_pool(pool, path)
    except OSError as err:
        raise _IoFailure(f"cannot write pool: {err}") from err
    print(f"wrote {path} (task={pool.task.value}, N={pool.num_examples}, K={pool.num_classes})")
    return EXIT_OK


def _cmd_inspect(args: argparse.Namespace) -> int:
    try:
        pool = load_pool(args.pool)
    except OSError as err:
        raise _IoFailure(f"cannot read pool: {err}") from err
    counts = pool.ground_truth().sum(axis=0)
    class_ratio, binary_ratio = imbalance_ratios(pool.ground_truth(), pool.task)
    print(f"task: {pool.task.value}")
    print(f"N: {pool.num_examples}")
    print(f"K: {pool.num_classes}")
    print(f"d: {pool.num_features}")
    print("class_counts: " + " ".join(str(int(c)) for c in counts))
    print(f"class_imbalance: {class_ratio:.9g}")
    if pool.task is TaskKind.MULTILABEL and binary_ratio is not None:
        print(f"binary_imbalance: {binary_ratio:.9g}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "generate": _cmd_generate, "inspect": _cmd_inspect}
    try:
        return handlers[args.subcommand](args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (_IoFailure, PoolFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except Exception as err:  # runtime failures keep a distinct exit code
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
