from __future__ import annotations
import sys
import logging
import argparse
from pathlib import Path
from typing import Sequence

from .definitions import SimulationError
from .experiments import list_experiments, run_experiment
from .acceptance import CRITERIA, format_report, verify
from .session_context import ConfigError, ExperimentConfig, RunContext

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SIMULATION_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_CRITERIA_FAILED = 3


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='bqsp', description="Hybrid oscillator-qubit control experiments.")
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'], help="root logger level")
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help="run the experiment described by a TOML or JSON configuration")
    run.add_argument('config', type=Path, help="configuration file (.toml or .json)")
    run.add_argument('--seed', type=int, default=None, help="overrides the configured seed")
    run.add_argument('--jobs', type=int, default=None, help="worker threads for sweep points")
    run.add_argument('--out', type=Path, default=None, help="output directory for the CSV and JSON files")

    sub.add_parser('list', help="list the registered experiments")

    check = sub.add_parser('verify', help="run the acceptance criteria and print a pass/fail table")
    check.add_argument('--fast', action='store_true', help="reduced sweeps, slow criteria skipped")
    check.add_argument('--jobs', type=int, default=1, help="criteria evaluated in parallel")
    check.add_argument('--only', action='append', default=None, choices=sorted(CRITERIA),
                       help="criterion to run, repeatable")
    return parser.parse_args(argv)


def _run(args: argparse.Namespace) -> int:
    config = ExperimentConfig.load(args.config)
    if args.jobs is not None and args.jobs < 1:
        raise ConfigError(f"invalid --jobs: {args.jobs}")
    ctxt = RunContext.resolve(config, args.seed, args.jobs, args.out)
    files = run_experiment(config, ctxt)
    print(f"{files.csv_path}\n{files.json_path}")
    return EXIT_OK


def _list() -> int:
    for exp in list_experiments():
        print(f"{exp.name:<20} {exp.description}")
        print(f"{'':<20} columns: {', '.join(exp.columns)}")
    return EXIT_OK


def _verify(args: argparse.Namespace) -> int:
    results = verify(args.fast, args.jobs, args.only)
    print(format_report(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_CRITERIA_FAILED
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        if args.command == 'run':
            return _run(args)
        if args.command == 'list':
            return _list()
        return _verify(args)
    except ConfigError as e:
        print(f"[config error] {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except SimulationError as e:
        print(f"[simulation error] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SIMULATION_ERROR


if __name__ == '__main__':
    sys.exit(main())
