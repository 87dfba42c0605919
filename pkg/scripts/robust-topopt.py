#!/usr/bin/env python3

import argparse
import logging
import pathlib
import re
import sys
from typing import Dict, List, Union

from robust_topopt.config import ConfigError, load_config_env
from robust_topopt.runner import EXIT_CONFIG, run

log = logging.getLogger(__name__)


def create_parser():
    arg_parser = argparse.ArgumentParser(description="Compliance topology optimization against worst-case "
                                                     "material degradation")
    arg_parser.add_argument("--config", required=False, default=None, type=str, help="YAML configuration file")
    arg_parser.add_argument(
        "--preset",
        required=False,
        default=None,
        type=str,
        help="Benchmark preset: cantilever, smoke, degradation, am-average",
    )
    arg_parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one setting, e.g. optimizer.max_iter=50 or V=0.4 (repeatable)",
    )
    arg_parser.add_argument("--sweep", required=False, default=None, type=str, help="Budgets to sweep: D=a,b,c")
    arg_parser.add_argument(
        "--continuation",
        required=False,
        default=None,
        type=str,
        help="Ramp continuation check of the report: steps=N",
    )
    arg_parser.add_argument("--out", required=False, default=None, type=str, help="Output directory")
    arg_parser.add_argument("--seed", required=False, default=None, type=int, help="Seed of all random draws")
    arg_parser.add_argument("--plot", required=False, default=False, action="store_true", help="Save plots")
    arg_parser.add_argument(
        "--dump-results",
        required=False,
        default=False,
        action="store_true",
        help="Dump the iteration histories as JSON",
    )
    arg_parser.add_argument("--verbose", "-v", required=False, default=False, action="store_true",
                            help="Debug logging")
    return arg_parser


def validate_args(arguments: Dict[str, Union[int, str, bool, List[str], None]]) -> bool:
    if arguments["sweep"] is not None and re.match(r"^D=[^,]+(,[^,]+)*$", arguments["sweep"]) is None:
        log.error('Argument "--sweep" (%s) is not in the format D=a,b,c' % arguments["sweep"])
        return False
    if arguments["continuation"] is not None and re.match(r"^steps=\d+$", arguments["continuation"]) is None:
        log.error('Argument "--continuation" (%s) is not in the format steps=N' % arguments["continuation"])
        return False
    if arguments["config"] is not None and not pathlib.Path(arguments["config"]).is_file():
        log.error('Argument "--config" (%s) is not a file' % arguments["config"])
        return False
    return True


def flag_overrides(arguments: Dict) -> List[str]:
    """
    Dedicated flags as overrides, applied after every --set
    """
    overrides = list(arguments["overrides"])
    if arguments["sweep"] is not None:
        overrides.append(f"uncertainty.budgets=[{arguments['sweep'].split('=', 1)[1]}]")
    if arguments["continuation"] is not None:
        overrides.append("continuation.mode=check")
        overrides.append(f"continuation.steps={arguments['continuation'].split('=', 1)[1]}")
    if arguments["out"] is not None:
        overrides.append(f"output.directory={arguments['out']}")
    if arguments["seed"] is not None:
        overrides.append(f"seed={arguments['seed']}")
    if arguments["plot"]:
        overrides.append("output.plot=true")
    if arguments["dump_results"]:
        overrides.append("output.dump_results=true")
    return overrides


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)20s %(levelname)8s:%(message)s")
    parser = create_parser()
    args = vars(parser.parse_args())
    if args["verbose"]:
        logging.getLogger().setLevel(logging.DEBUG)

    if not validate_args(args):
        log.error("Arguments validation error, exit.")
        sys.exit(EXIT_CONFIG)

    try:
        config = load_config_env(args["preset"], args["config"], flag_overrides(args))
    except ConfigError as e:
        log.error(f"Configuration error: {e}")
        sys.exit(EXIT_CONFIG)

    sys.exit(run(config))
