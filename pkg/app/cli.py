"""Command-line entry point: one experiment per invocation."""
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.config import settings
from app.errors import ConfigurationError, DDFError
from app.experiments.output import STDOUT, provenance, write_csv, write_json
from app.experiments.presets import load_experiment
from app.experiments.runner import ExperimentRunner
from app.schemas import ExperimentSpec

logger = logging.getLogger(__name__)

COMMANDS = {
    "outage-contour": "outage_contour",
    "se-contour": "se_contour",
    "diversity-report": "diversity_report",
    "mi-table": "mi_table_dump",
}
USAGE_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddf", description="DDF relaying / HARQ link-level simulator")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(command)
        sub.add_argument("--config", help="experiment file (TOML)")
        sub.add_argument("--seed", type=int, help="64-bit seed, overrides the file")
        sub.add_argument("--trials", type=int, help="Monte Carlo trials per operating point")
        sub.add_argument("--out", help="output path, '-' for stdout")
        sub.add_argument("--threads", type=int, help="worker threads for trial chunks")
        sub.add_argument("--quiet", action="store_true", help="no progress bar")
    return parser


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    preset = COMMANDS[args.command]
    overrides = {"preset": preset, "seed": args.seed, "trials": args.trials, "threads": args.threads, "out": args.out}
    if args.config:
        return load_experiment(args.config, overrides)
    try:
        return ExperimentSpec.model_validate({k: v for k, v in overrides.items() if v is not None})
    except ValidationError as exc:
        raise ConfigurationError(f"invalid command-line options\n{exc}") from None


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=settings.log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        spec = resolve_spec(args)
        runner = ExperimentRunner(seed=spec.seed, trials=spec.trials, threads=spec.threads, quiet=args.quiet)
        result = runner.run(spec)
        out = spec.out or STDOUT
        trials = None if spec.preset in ("diversity_report", "mi_table_dump") else runner.trials
        meta = provenance(spec, runner.seed, trials)
        if spec.preset == "diversity_report":
            write_json(result, out, meta)
        else:
            write_csv(result, out, meta)
    except DDFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
