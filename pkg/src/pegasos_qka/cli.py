"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig, parse_config, validate_config
from . import harness

COMMANDS = {
    "generate-data": harness.run_generate,
    "train": harness.run_train,
    "evaluate": harness.run_evaluate,
    "experiment-stationary": harness.run_stationary,
    "experiment-drift": harness.run_drift,
    "compare-baselines": harness.run_comparison,
}

# subcommand -> forced experiment kind (so validation matches the recipe)
FORCED_KIND = {
    "experiment-stationary": "stationary",
    "experiment-drift": "drift",
    "compare-baselines": "dual-baseline",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pegasos-qka",
        description="Quantum-kernel SVM training with simultaneous kernel alignment",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", metavar="PATH", default=None, help="key = value config file")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--out", metavar="PATH", default=None, help="output directory")
        cmd.add_argument("--qubits", type=int, default=None)
        cmd.add_argument("--shots", type=int, default=None, help="0 = exact kernels")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = parse_config(args.config) if args.config else ExperimentConfig()
    for flag in ("seed", "out", "qubits", "shots"):
        value = getattr(args, flag)
        if value is not None:
            setattr(config, flag, value)
    if args.command in FORCED_KIND:
        config.experiment = FORCED_KIND[args.command]
    if args.command == "experiment-drift" and config.window == 0:
        config.window = 100
    validate_config(config)
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        result = COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
