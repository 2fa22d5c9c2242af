import pytest

from autopilot.services.missile import OperatingPoint
from tests.utils import load_sample_config


@pytest.fixture
def synthetic_config():
    return load_sample_config("synthetic")


@pytest.fixture
def synthetic_point(synthetic_config):
    raw = synthetic_config["envelope"]["operating_points"][1]
    return OperatingPoint.from_dict(raw)
