import re

from autopilot.exceptions import ConfigError
from autopilot.logger import logger, print_table
from autopilot.schemas import SCHEMA_VALIDATORS


def collect_schema_errors(json_data, schema_name, prefix=""):
    """(location, message) pairs for every schema violation, sorted by path."""
    errors = sorted(
        SCHEMA_VALIDATORS[schema_name].iter_errors(json_data),
        key=lambda e: [str(p) for p in e.path],
    )
    diagnostics = []
    for error in errors:
        key, validator, msg = parse_validation_error(error, prefix)
        if validator == "required":
            required_property = re.findall(r"'(.*?)'", msg)[0]
            diagnostics.append(
                (
                    f"{key}.{required_property}",
                    f"{msg}. Check for spelling errors in the key",
                )
            )
        else:
            diagnostics.append((key, msg))
    return diagnostics


def print_diagnostics(diagnostics):
    print_table(diagnostics, headers=("Key", "Error"))


def validate_config_json(json_data, config_path):
    logger.info(f"Loading config: {config_path}")
    diagnostics = collect_schema_errors(json_data, "config")
    if diagnostics:
        raise ConfigError(
            f"Provided config JSON is Invalid: '{config_path}'", diagnostics
        )


def parse_validation_error(error, prefix=""):
    path = ".".join(str(p) for p in error.path)
    key = ".".join(part for part in (prefix, path) if part) or "$root"
    return key, error.validator, error.message
