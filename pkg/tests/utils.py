import json
from copy import deepcopy
from pathlib import Path

import numpy as np

from autopilot.entry import entry_point
from autopilot.services.lti import RationalTransferFunction, StateSpaceSystem
from main import parse_args

SAMPLES_DIR = Path("samples")


def load_sample_config(name):
    with open(SAMPLES_DIR.joinpath(name, "config.json"), "r") as f:
        return json.load(f)


def write_modified(modify_content, boilerplate, config_path):
    content = deepcopy(boilerplate)
    if modify_content is not None:
        returned_value = modify_content(content)
        if returned_value is not None:
            content = returned_value
    with open(config_path, "w") as f:
        json.dump(content, f)
    return config_path


def run_cli(*argv):
    return entry_point(parse_args([str(arg) for arg in argv]))


def read_json(path):
    with open(path, "r") as f:
        return json.load(f)


def random_stable_system(rng, n, inputs=1, outputs=1, with_feedthrough=True):
    A = rng.normal(size=(n, n))
    # every pole at least 0.5 left of the imaginary axis
    shift = np.max(np.linalg.eigvals(A).real) + 0.5 + rng.random()
    A = A - shift * np.eye(n)
    B = rng.normal(size=(n, inputs))
    C = rng.normal(size=(outputs, n))
    D = rng.normal(size=(outputs, inputs)) if with_feedthrough else np.zeros(
        (outputs, inputs)
    )
    return StateSpaceSystem(A, B, C, D)


def random_lowpass_tf(rng, order):
    """Positive-gain plant with real stable poles."""
    poles = -(0.2 + 5.0 * rng.random(order))
    gain = 0.5 + 2.0 * rng.random()
    return RationalTransferFunction.from_zpk([], poles, gain * np.prod(-poles))


def dense_peak_gain(sys, omegas):
    return max(
        np.linalg.svd(sys.evaluate(1j * w), compute_uv=False)[0] for w in omegas
    )
