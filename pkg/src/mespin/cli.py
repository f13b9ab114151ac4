"""Command-line entry point: ``mespin <experiment> --config cfg.json --out dir``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import datasets
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run
from .magnetodynamics import default_workers


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mespin", description="ME spintronic memory experiments")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", type=Path, help="JSON config; omitted keys take defaults")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--seed", type=_u64, help="master seed (default: $MESPIN_SEED or 0)")
    ap.add_argument("--trials", type=_positive, help="Monte Carlo trials per point")
    ap.add_argument("--workers", type=_positive, help="worker processes (default: all cores)")
    return ap


def _default_seed() -> int | None:
    env = os.environ.get("MESPIN_SEED")
    if env is None or env == "":
        return None
    try:
        return _u64(env)
    except (ValueError, argparse.ArgumentTypeError):
        raise ConfigError(f"MESPIN_SEED={env!r} is not an unsigned 64-bit integer") from None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = {}
        if args.config is not None:
            with open(args.config) as fh:
                doc = json.load(fh)
            if not isinstance(doc, dict):
                raise ConfigError("config must be a JSON object")
        # precedence: --seed, then the config file, then $MESPIN_SEED, then 0
        seed = args.seed
        if seed is None and "seed" not in doc:
            seed = _default_seed() or 0
        workers = args.workers
        if workers is None and "workers" not in doc:
            workers = default_workers()
        cfg = ExperimentConfig.from_dict(args.experiment, doc, n_trials=args.trials, seed=seed, workers=workers)
        outcome = run(cfg)
    except (ConfigError, OSError, json.JSONDecodeError) as e:
        print(f"mespin: error: {e}", file=sys.stderr)
        return 2
    args.out.mkdir(parents=True, exist_ok=True)
    for name, (schema, rows) in outcome.tables.items():
        datasets.write_csv(args.out / name, schema, rows)
    lines = list(outcome.summary)
    lines += [f"check {name}: {'PASS' if ok else 'FAIL'}" for name, ok in outcome.checks.items()]
    lines.append(f"status: {'PASS' if outcome.ok else 'FAIL'}")
    (args.out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if outcome.ok else 1


if __name__ == "__main__":
    sys.exit(main())
