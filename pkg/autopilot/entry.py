from dotmap import DotMap

from autopilot.commands.design import run_design
from autopilot.commands.envelope import run_envelope
from autopilot.commands.model import run_model
from autopilot.commands.simulate import run_simulate
from autopilot.commands.verify import run_verify
from autopilot.constants import EXIT_CODES
from autopilot.exceptions import (
    ConfigError,
    DecodeError,
    SwarmConfigError,
    VgapError,
    WeightError,
)
from autopilot.logger import logger
from autopilot.utils.file import Paths, setup_dirs_for_paths
from autopilot.utils.parsing import (
    apply_cli_overrides,
    merge_config_with_defaults,
    open_config_with_defaults,
)
from autopilot.utils.validations import print_diagnostics

COMMANDS = {
    "model": run_model,
    "envelope": run_envelope,
    "design": run_design,
    "verify": run_verify,
    "simulate": run_simulate,
}

CONFIG_ERRORS = (ConfigError, SwarmConfigError, DecodeError, WeightError, VgapError)


def load_run_config(args) -> DotMap:
    config_path = args.get("config")
    if config_path:
        config = open_config_with_defaults(config_path)
    else:
        config = merge_config_with_defaults({}, "<defaults>")
    config = apply_cli_overrides(config, args)
    logger.set_level(config.outputs.log_level)
    return config


def entry_point(args) -> int:
    """Run one subcommand and return its exit status."""
    try:
        config = load_run_config(args)
        paths = Paths(config.outputs.directory)
        setup_dirs_for_paths(paths)
        with logger.stage(args["command"]):
            return COMMANDS[args["command"]](config, paths, args)
    except CONFIG_ERRORS as error:
        logger.error(str(error))
        diagnostics = getattr(error, "diagnostics", None)
        if diagnostics:
            print_diagnostics(diagnostics)
        return EXIT_CODES.CONFIG_ERROR
