import hashlib
import json
import os
from pathlib import Path

import numpy as np
import pandas as pd

from autopilot.exceptions import ConfigError
from autopilot.logger import logger


def load_json(path, **rest):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"File not found: '{path}'", [(str(path), "file not found")])
    try:
        with open(path, "r") as f:
            loaded = json.load(f, **rest)
    except json.decoder.JSONDecodeError as error:
        logger.critical(f"Error when loading json file at: '{path}'\n{error}")
        raise ConfigError(
            f"Invalid JSON in '{path}'",
            [(f"line {error.lineno}, column {error.colno}", error.msg)],
        ) from None
    return loaded


def _default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_default)


def config_hash(config) -> str:
    raw = config.toDict() if hasattr(config, "toDict") else config
    encoded = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=_default)
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(canonical_json(data))
        f.write("\n")
    logger.info(f"Wrote {path}")
    return path


def write_csv(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.12g")
    logger.info(f"Wrote {path}")
    return path


class Paths:
    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)
        self.plants_dir = self.output_dir.joinpath("plants")
        self.envelope_dir = self.output_dir.joinpath("envelope")
        self.design_dir = self.output_dir.joinpath("design")
        self.verify_dir = self.output_dir.joinpath("verify")
        self.simulation_dir = self.output_dir.joinpath("simulation")


def setup_dirs_for_paths(paths: Paths):
    for save_output_dir in [
        paths.plants_dir,
        paths.envelope_dir,
        paths.design_dir,
        paths.verify_dir,
        paths.simulation_dir,
    ]:
        if not os.path.exists(save_output_dir):
            logger.debug(f"Created : {save_output_dir}")
            os.makedirs(save_output_dir)
