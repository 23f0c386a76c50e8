"""Command line front end.

    unbiased-cso run <config> [--seed N] [--out-dir DIR] [--workers N] [--format csv|csv+plot]
    unbiased-cso validate <config>
    unbiased-cso list-experiments

Exit codes: 0 success, 2 configuration error, 3 runtime failure (partial
output and a failure record are written).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, load_config
from .outputs import OutputDirError
from .runner import ExperimentFailed, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unbiased-cso", description="Unbiased CSO gradient experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a TOML config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override replication.seed")
    run.add_argument("--out-dir", help="override output.dir")
    run.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on this)")
    run.add_argument("--format", choices=("csv", "csv+plot"), help="override output.format")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")

    sub.add_parser("list-experiments", help="print the available experiment kinds")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list-experiments":
        for name, description in EXPERIMENTS.items():
            print(f"{name:<20} {description}")
        return EXIT_OK

    overrides = {}
    if args.command == "run":
        if args.seed is not None:
            overrides["replication.seed"] = args.seed
        if args.out_dir is not None:
            overrides["output.dir"] = args.out_dir
        if args.format is not None:
            overrides["output.format"] = args.format
        if args.workers < 1:
            print("error: --workers must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"{args.config}: valid {cfg.experiment} config ({cfg.model.kind} model)")
        return EXIT_OK

    try:
        _, written = run_experiment(cfg, workers=args.workers)
    except OutputDirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"partial output: {', '.join(str(p) for p in exc.outputs)}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
