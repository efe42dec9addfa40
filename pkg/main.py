"""
Command-line entry point.

    python main.py [--config FILE] [--seed N] [--out-dir DIR] [--log-level LEVEL] [--strict] <command> ...

Commands: simulate, train-svm, train-mapper, rank-features, run, evaluate, grid-search.
Relative model paths in the configuration are resolved against the output directory,
and the dataset directory defaults to `<out-dir>/dataset`.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from algorithms.camera_map import MapperTrainingConfig
from core.command import (
    EvaluateCommand,
    GridSearchCommand,
    RankFeaturesCommand,
    RunCommand,
    SimulateCommand,
    TrainMapperCommand,
    TrainSvmCommand,
    resolve_model_paths,
)
from core.config import load_config
from core.exceptions import FusionError
from core.grid_search import DEFAULT_ALPHAS, DEFAULT_CS

logger = logging.getLogger(__name__)


class HelpOnErrorParser(argparse.ArgumentParser):
    """Prints the full help of the failing (sub)command on a usage error."""

    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"\n{self.prog}: error: {message}\n")


def _float_list(raw: str) -> List[float]:
    try:
        return [_fraction(item) for item in raw.split(",") if item.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {raw}") from error


def _fraction(item: str) -> float:
    """Parses `0.002` or `1/500`."""
    item = item.strip()
    if "/" in item:
        numerator, denominator = item.split("/", 1)
        return float(numerator) / float(denominator)
    return float(item)


def build_parser() -> argparse.ArgumentParser:
    parser = HelpOnErrorParser(prog="main.py", description="Beacon detection with LiDAR and camera fusion.")
    parser.add_argument("--config", help="JSON pipeline configuration.")
    parser.add_argument("--seed", type=int, help="Override the configured seed.")
    parser.add_argument("--out-dir", default="results", help="Directory for every artifact (default: results).")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--strict", action="store_true", help="Fail when a frame exceeds its time budget.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=HelpOnErrorParser)

    simulate = commands.add_parser("simulate", help="Render a scenario into a dataset.")
    simulate.add_argument("scenario", help="Scenario INI file.")
    simulate.add_argument("--dataset", help="Dataset directory (default: <out-dir>/dataset).")
    simulate.add_argument("--noise-free", action="store_true", help="Render without sensor noise.")

    train_svm = commands.add_parser("train-svm", help="Train the LiDAR beacon SVM.")
    train_svm.add_argument("--dataset", help="Dataset directory (default: <out-dir>/dataset).")
    train_svm.add_argument("--regularization", type=float, default=1.0, help="SVM penalty C.")
    train_svm.add_argument("--train-fraction", type=float, default=0.7)

    train_mapper = commands.add_parser("train-mapper", help="Train the camera box mapper.")
    train_mapper.add_argument("--dataset", help="Dataset directory (default: <out-dir>/dataset).")
    train_mapper.add_argument("--epochs", type=int, default=MapperTrainingConfig.epochs)
    train_mapper.add_argument("--learning-rate", type=float, default=MapperTrainingConfig.learning_rate)
    train_mapper.add_argument("--optimizer", choices=["adam", "gd"], default=MapperTrainingConfig.optimizer)
    train_mapper.add_argument("--holdout", type=float, default=0.2)

    rank = commands.add_parser("rank-features", help="Rank features and score top-k SVMs.")
    rank.add_argument("--dataset", help="Dataset directory (default: <out-dir>/dataset).")
    rank.add_argument("--train-fraction", type=float, default=0.7)

    run = commands.add_parser("run", help="Detect and fuse every frame of a dataset.")
    run.add_argument("--dataset", help="Dataset directory (default: <out-dir>/dataset).")

    evaluate = commands.add_parser("evaluate", help="Score detections against the truth.")
    evaluate.add_argument("--dataset", help="Dataset directory (default: <out-dir>/dataset).")
    evaluate.add_argument("--detections", help="Detections CSV (default: <out-dir>/detections.csv).")
    evaluate.add_argument("--range", nargs=2, type=float, metavar=("MIN", "MAX"), help="Distance band in meters.")
    evaluate.add_argument("--min-confidence", type=float, default=0.0)
    evaluate.add_argument("--compare", action="store_true", help="Compare LiDAR-only, camera-only and fused.")

    grid = commands.add_parser("grid-search", help="Select alpha and C by TPR - FPR.")
    grid.add_argument("--dataset", help="Dataset directory (default: <out-dir>/dataset).")
    grid.add_argument("--alphas", type=_float_list, default=list(DEFAULT_ALPHAS), help="e.g. 1/500,1/5000")
    grid.add_argument("--cs", type=_float_list, default=list(DEFAULT_CS), help="e.g. 0.6,0.65,0.7")
    return parser


def build_command(args: argparse.Namespace):
    config = load_config(args.config)
    overrides = {"strict": args.strict or config.strict}
    if args.seed is not None:
        overrides["seed"] = args.seed
    config = resolve_model_paths(replace(config, **overrides), args.out_dir)
    out_dir = Path(args.out_dir)
    dataset = Path(args.dataset) if getattr(args, "dataset", None) else out_dir / "dataset"

    if args.command == "simulate":
        return SimulateCommand(args.scenario, dataset, config.seed, args.noise_free)
    if args.command == "train-svm":
        return TrainSvmCommand(config, dataset, out_dir, args.regularization, args.train_fraction)
    if args.command == "train-mapper":
        training = MapperTrainingConfig(args.epochs, args.learning_rate, args.optimizer, config.seed)
        return TrainMapperCommand(config, dataset, out_dir, training, args.holdout)
    if args.command == "rank-features":
        return RankFeaturesCommand(config, dataset, out_dir, args.train_fraction)
    if args.command == "run":
        return RunCommand(config, dataset, out_dir)
    if args.command == "evaluate":
        return EvaluateCommand(config, dataset, out_dir, args.detections, args.range, args.min_confidence,
                               args.compare)
    return GridSearchCommand(config, dataset, out_dir, args.alphas, args.cs)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses arguments, runs one command and returns its exit code.

    Pipeline errors are reported on stderr as `error: <message>` with exit code 1.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return build_command(args).execute()
    except FusionError as error:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
