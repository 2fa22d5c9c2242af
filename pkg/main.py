"""

 autopilot: robust pitch autopilot synthesis for skid-to-turn missiles

"""

import argparse
import sys

from autopilot.constants import DESIGN_MODES, EXIT_CODES
from autopilot.entry import COMMANDS, entry_point
from autopilot.logger import logger

SUBCOMMAND_HELP = {
    "model": "Emit the open-loop plant of every operating point.",
    "envelope": "Compute the v-gap matrix and select the nominal point.",
    "design": "Shape the nominal plant and synthesize the controller.",
    "verify": "Certify the controller over the whole envelope.",
    "simulate": "Simulate closed-loop step responses and step metrics.",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-c",
        "--config",
        required=False,
        dest="config",
        help="Path to the JSON configuration document.",
    )
    common.add_argument(
        "--seed",
        required=False,
        type=int,
        dest="seed",
        help="Overrides pso.seed.",
    )
    common.add_argument(
        "--mode",
        required=False,
        choices=DESIGN_MODES,
        dest="mode",
        help="Weight-selection workflow, overrides design.mode.",
    )
    common.add_argument(
        "-o",
        "--out",
        required=False,
        dest="output_dir",
        help="Output directory, overrides outputs.directory.",
    )
    common.add_argument(
        "--table1-check",
        required=False,
        dest="table1_check",
        action="store_true",
        help="Compare step metrics against the overshoot, error and timing limits.",
    )
    common.add_argument(
        "--report",
        required=False,
        dest="report",
        help="Design report to cross-check during verify.",
    )
    common.add_argument(
        "--controller",
        required=False,
        dest="controller",
        help="Controller file for verify/simulate (default: <out>/design).",
    )
    common.add_argument(
        "-v",
        "--verbose",
        required=False,
        dest="verbose",
        action="store_true",
        help="Log at DEBUG level.",
    )

    argparser = argparse.ArgumentParser(prog="autopilot")
    subparsers = argparser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common], help=SUBCOMMAND_HELP[name])
    return argparser


def parse_args(argv=None):
    argparser = build_parser()
    (
        args,
        unknown,
    ) = argparser.parse_known_args(argv)

    if len(unknown) > 0:
        logger.warning(f"Unknown arguments: {unknown}")
        argparser.print_help()
        sys.exit(EXIT_CODES.CONFIG_ERROR)
    return vars(args)


if __name__ == "__main__":
    sys.exit(entry_point(parse_args()))
