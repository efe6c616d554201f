import argparse
import os
import sys

from loguru import logger

from orchestrator.config import ConfigError, config_from_dict, load_config
from orchestrator.engine import EXIT_CONFIG, run_scenario
from orchestrator.scenarios import SCENARIOS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="portflow", description="Port-Hamiltonian fluid / rigid-body simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a JSON config")
    run.add_argument("config", help="path to the scenario config (JSON)")
    run.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    run.add_argument("--seed", type=int, default=None, help="random seed (overrides seed)")

    check = sub.add_parser("check", help="run a built-in scenario with its defaults")
    check.add_argument("suite", choices=sorted(SCENARIOS), help="scenario name")
    check.add_argument("--out", default=None, help="output directory")
    check.add_argument("--seed", type=int, default=None, help="random seed")

    sub.add_parser("list", help="list the built-in scenarios")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logger.remove()
    logger.add(sys.stderr, level=os.getenv("PORTFLOW_LOG_LEVEL", "INFO"))

    if args.command == "list":
        for name, scenario in SCENARIOS.items():
            print(f"{name:22s} {scenario.DESCRIPTION}")
        return 0

    try:
        if args.command == "run":
            config = load_config(args.config)
        else:
            config = config_from_dict({"scenario": args.suite})
        if args.seed is not None:
            config.seed = args.seed
        if args.out is not None:
            config.out_dir = args.out
        return run_scenario(config)
    except (ConfigError, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
