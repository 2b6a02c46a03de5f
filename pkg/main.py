import argparse
import logging
import secrets
import sys
from pathlib import Path

import yaml

from src.commands import COMMANDS, EXIT_INPUT_ERROR
from src.config import CliConfig, Config
from src.graph import GRAPH_FORMATS

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


def seed_value(text: str) -> int | str:
    if text == "random":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}")


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Identify direct effects in tree-shaped linear causal models"
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="What to do with the graph")
    parser.add_argument("--graph", type=Path, required=True, help="Graph file to read")
    parser.add_argument(
        "--format",
        choices=GRAPH_FORMATS,
        default="edgelist",
        help="Graph file format: edge list ('0->1 1<->2') or document (default: edgelist)",
    )
    parser.add_argument("--seed", type=seed_value, help="Seed for sampled models, or 'random'")
    parser.add_argument("--pit-trials", type=int, help="Models per zero test (default: 3)")
    parser.add_argument("--max-cycle-len", type=int, help="Longest missing cycle to use")
    parser.add_argument("--max-cycles", type=int, help="Missing cycles per node (default: 64)")
    parser.add_argument("--models", type=int, help="Models checked by verify (default: 100)")
    parser.add_argument(
        "--output",
        choices=("text", "doc"),
        default="text",
        help="Report as text or as a JSON document (default: text)",
    )
    parser.add_argument("--config", type=Path, help="Optional YAML configuration file")
    parser.add_argument(
        "--report",
        type=Path,
        help="verify: check this stored report document instead of identifying again",
    )
    parser.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Enable verbose logging (show every decision)",
    )
    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> CliConfig:
    config = Config.load(args.config) if args.config else Config()

    if args.seed == "random":
        config.pit.seed = secrets.randbits(63)
        logger.info(f"Using random seed {config.pit.seed}")
    elif args.seed is not None:
        config.pit.seed = args.seed
    if args.pit_trials is not None:
        config.pit.trials = args.pit_trials
    if args.max_cycle_len is not None:
        config.search.max_cycle_len = args.max_cycle_len
    if args.max_cycles is not None:
        config.search.max_cycles = args.max_cycles
    if args.models is not None:
        config.verify_models = args.models
    config.validate()

    return CliConfig(
        graph_path=args.graph,
        config=config,
        format=args.format,
        output=args.output,
        report_path=args.report,
    )


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)

    if args.verbose:
        logging.getLogger("src").setLevel(logging.DEBUG)
        logger.info("Verbose mode enabled")

    try:
        cfg = build_config(args)
    except (OSError, ValueError, yaml.YAMLError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_INPUT_ERROR

    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
