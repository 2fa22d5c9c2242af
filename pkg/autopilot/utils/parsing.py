from copy import deepcopy

from deepmerge import Merger
from dotmap import DotMap

from autopilot.defaults import CONFIG_DEFAULTS
from autopilot.utils.file import load_json
from autopilot.utils.validations import validate_config_json

OVERRIDE_MERGER = Merger(
    # dicts merge key by key
    [(dict, ["merge"])],
    # everything else, lists included, is replaced by the user value
    ["override"],
    # and so are type conflicts
    ["override"],
)


def merge_config_with_defaults(user_config, config_path="<memory>"):
    merged = OVERRIDE_MERGER.merge(CONFIG_DEFAULTS.toDict(), deepcopy(user_config))
    validate_config_json(merged, config_path)
    # https://github.com/drgrib/dotmap/issues/74
    return DotMap(merged, _dynamic=False)


def open_config_with_defaults(config_path):
    return merge_config_with_defaults(load_json(config_path), config_path)


def apply_cli_overrides(config: DotMap, overrides) -> DotMap:
    """Return a copy of ``config`` with command-line flag values applied."""
    raw = config.toDict()
    if overrides.get("seed") is not None:
        raw["pso"]["seed"] = int(overrides["seed"])
    if overrides.get("mode") is not None:
        raw["design"]["mode"] = overrides["mode"]
    if overrides.get("output_dir") is not None:
        raw["outputs"]["directory"] = str(overrides["output_dir"])
    if overrides.get("table1_check"):
        raw["simulation"]["table1"] = True
    if overrides.get("verbose"):
        raw["outputs"]["log_level"] = "DEBUG"
    return merge_config_with_defaults(raw, "<command line>")
