"""
Command-line entrypoint for ensemble rejection sampling experiments.

Two subcommands:
1. ``run``: estimate acceptance probabilities over a (T, N) grid and write a CSV table
2. ``sample``: draw exact paths and write one CSV row per path

Examples:
    python app.py run --model conditioned-rw --t 100 --n 100 200 500 --samples 500
    python app.py run --config experiments/table1.yaml --workers 8 --out table1.csv
    python app.py sample --model finite-state --t 10 --n 20 --count 1000 --out paths.csv
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from ers.config import ESTIMATORS, MODELS, load_config
from ers.errors import ERSError
from ers.experiment import emit_samples, run_experiment, write_results

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _model_param(text: str):
    """Parse ``key=value`` into (key, number-or-string)."""
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    for cast in (int, float):
        try:
            return key.strip(), cast(value)
        except ValueError:
            continue
    lowered = value.strip().lower()
    if lowered in ("true", "false"):
        return key.strip(), lowered == "true"
    return key.strip(), value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Ensemble rejection sampling experiments")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--model", choices=MODELS)
    common.add_argument("--param", action="append", type=_model_param, default=[],
                        metavar="KEY=VALUE", help="model parameter, repeatable")
    common.add_argument("--t", type=int, nargs="+", help="horizon(s) T")
    size = common.add_mutually_exclusive_group()
    size.add_argument("--n", type=int, nargs="+", help="ensemble size(s) N")
    size.add_argument("--beta", type=float, nargs="+", help="N = ceil(beta * T)")
    common.add_argument("--seed", type=int)
    common.add_argument("--data", help="observation CSV (index,value)")
    common.add_argument("--data-seed", type=int, help="seed for simulated observations")
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output CSV (default stdout)")
    common.add_argument("--max-trials", type=int)
    common.add_argument("--extended", action="store_true", default=None,
                        help="allow runs beyond desk scale")
    common.add_argument("--check-bounds", action="store_true", default=None)
    common.add_argument("--progress", action="store_true", default=None)
    common.add_argument("--no-wall-time", dest="record_wall_time", action="store_false", default=None,
                        help="write 0.000 for wall time so output is byte-reproducible")
    common.add_argument("--log-level", choices=LOG_LEVELS)

    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", parents=[common], help="estimate acceptance probabilities")
    run.add_argument("--samples", type=int, help="trials per cell (default 500)")
    run.add_argument("--estimator", choices=ESTIMATORS)
    sample = commands.add_parser("sample", parents=[common], help="draw exact paths")
    sample.add_argument("--count", type=int, default=1, help="number of paths")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides = {
        "model": args.model,
        "horizons": args.t,
        "sizes": args.n,
        "betas": args.beta,
        "seed": args.seed,
        "data_path": args.data,
        "data_seed": args.data_seed,
        "workers": args.workers,
        "out": args.out,
        "max_trials": args.max_trials,
        "extended": args.extended,
        "check_bounds": args.check_bounds,
        "progress": args.progress,
        "record_wall_time": args.record_wall_time,
        "num_samples": getattr(args, "samples", None),
        "estimator": getattr(args, "estimator", None),
    }
    if args.param:
        overrides["model_params"] = dict(args.param)
    if args.n is not None:
        overrides["betas"] = ()
    elif args.beta is not None:
        overrides["sizes"] = ()
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, resolve the config and run the requested command.

    Returns:
        Process exit status: 0 on success, 2 on a library error, 1 otherwise
    """
    load_dotenv(override=False)
    args = build_parser().parse_args(argv)
    level = args.log_level or os.environ.get("ERS_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr)

    try:
        config = load_config(args.config, _overrides(args), dotenv=False)
        if args.command == "run":
            rows = run_experiment(config)
            write_results(rows, config.out)
            if config.out is not None:
                print(f"✅ Wrote {len(rows)} row(s) to {config.out}")
        else:
            rows = emit_samples(config, args.count)
            if config.out is not None:
                accepted = sum(row.path is not None for row in rows)
                print(f"✅ Wrote {accepted}/{len(rows)} accepted path(s) to {config.out}")
        return 0
    except ERSError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.error(f"Unexpected failure: {e}", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
