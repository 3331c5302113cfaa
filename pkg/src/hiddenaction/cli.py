"""Command line entry point.

    hiddenaction run [--config FILE] [--seed N] [--replications R]
                     [--scenario GLOB ...] [--output DIR] [--raw] [--workers N]
    hiddenaction benchmark [--config FILE]
    hiddenaction config            # print the default configuration
"""

import argparse
import dataclasses
import logging
import sys

from .experiment import (
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    ExperimentConfig,
    benchmark_params,
    load_config,
    run_experiment,
    serialize_config,
)
from .model import InfeasibleContractError, solve_second_best_benchmark


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiddenaction",
                                     description="Agent-based hidden-action experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the scenario grid and write CSV outputs")
    run.add_argument("--config", help="key = value configuration file")
    run.add_argument("--seed", type=int, help="override base_seed")
    run.add_argument("--replications", type=int, help="override the number of paths per scenario")
    run.add_argument("--scenario", action="append", metavar="GLOB",
                     help="only run scenario ids matching GLOB, e.g. 'P3-Ainf-*' (repeatable)")
    run.add_argument("--output", help="override output_dir")
    run.add_argument("--raw", action="store_true", help="also write raw.csv (one row per period)")
    run.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")

    bench = sub.add_parser("benchmark", help="print the second-best contract and exit")
    bench.add_argument("--config", help="key = value configuration file")

    sub.add_parser("config", help="print the default configuration")
    return parser


def _load(path) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "config":
        sys.stdout.write(serialize_config(ExperimentConfig()))
        return EXIT_OK

    try:
        config = _load(args.config)
        if args.command == "run":
            overrides = {}
            if args.seed is not None:
                overrides["base_seed"] = args.seed
            if args.replications is not None:
                overrides["replications"] = args.replications
            if args.output is not None:
                overrides["output_dir"] = args.output
            if args.raw:
                overrides["emit_raw"] = True
            config = dataclasses.replace(config, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "benchmark":
        try:
            b = solve_second_best_benchmark(benchmark_params(config))
        except InfeasibleContractError as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"a_star  = {b.optimal_action!r}")
        print(f"p_star  = {b.optimal_premium!r}")
        print(f"x_star  = {b.optimal_outcome!r}")
        print(f"up_star = {b.principal_utility!r}")
        print(f"ua_star = {b.agent_utility!r}")
        return EXIT_OK

    return run_experiment(config, workers=max(1, args.workers), patterns=args.scenario)


if __name__ == "__main__":
    sys.exit(main())
