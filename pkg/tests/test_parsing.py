import pytest

from autopilot.exceptions import ConfigError
from autopilot.utils.file import config_hash, load_json
from autopilot.utils.parsing import (
    apply_cli_overrides,
    merge_config_with_defaults,
    open_config_with_defaults,
)
from tests.utils import write_modified


def test_defaults_fill_missing_sections():
    config = merge_config_with_defaults({"design": {"mode": "fit100"}})
    assert config.design.mode == "fit100"
    assert config.design.nominal_attempts == 3
    assert config.pso.particles == 40
    assert config.simulation.dt == 1.0e-4


def test_user_lists_replace_default_lists():
    user = {"bounds": {"custom": {"upper": {"numerator": [20.0]}}}}
    config = merge_config_with_defaults(user)
    assert list(config.bounds.custom.upper.numerator) == [20.0]
    assert list(config.bounds.custom.upper.denominator) == [1.0, 0.0]
    assert config.pso.penalty.per_db == 0.05
    assert config.pso.search.gain_decades == 4.0


def test_sample_configs_are_valid():
    for name in ("reference", "synthetic", "synthetic_inflated"):
        config = open_config_with_defaults(f"samples/{name}/config.json")
        assert config.design.mode in ("pso", "fit100")


def test_schema_errors_are_reported_per_key():
    user = {
        "design": {"mode": "grid"},
        "simulation": {"dt": -1.0},
        "pso": {"particles": 1},
    }
    with pytest.raises(ConfigError) as error:
        merge_config_with_defaults(user, "inline.json")
    keys = [key for key, _ in error.value.diagnostics]
    assert "design.mode" in keys
    assert "simulation.dt" in keys
    assert "pso.particles" in keys
    assert "inline.json" in str(error.value)


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError) as error:
        merge_config_with_defaults({"design": {"moed": "pso"}})
    assert any("moed" in msg for _, msg in error.value.diagnostics)


def test_invalid_json_points_at_the_location(tmp_path):
    path = tmp_path.joinpath("config.json")
    path.write_text('{\n  "design": {"mode": "pso",}\n}\n')
    with pytest.raises(ConfigError) as error:
        load_json(path)
    location, _ = error.value.diagnostics[0]
    assert location.startswith("line 2, column ")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="File not found"):
        open_config_with_defaults(tmp_path.joinpath("absent.json"))


def test_config_file_round_trip(tmp_path):
    path = write_modified(
        lambda c: c["pso"].update({"seed": 11}) or c,
        {"pso": {}},
        tmp_path.joinpath("config.json"),
    )
    assert open_config_with_defaults(path).pso.seed == 11


def test_cli_overrides():
    config = merge_config_with_defaults({})
    overridden = apply_cli_overrides(
        config,
        {
            "seed": 7,
            "mode": "fit100",
            "output_dir": "elsewhere",
            "table1_check": True,
            "verbose": True,
        },
    )
    assert overridden.pso.seed == 7
    assert overridden.design.mode == "fit100"
    assert overridden.outputs.directory == "elsewhere"
    assert overridden.simulation.table1 is True
    assert overridden.outputs.log_level == "DEBUG"
    # the original stays untouched
    assert config.pso.seed == 0
    assert config.design.mode == "pso"


def test_absent_overrides_keep_the_config():
    config = merge_config_with_defaults({"pso": {"seed": 3}})
    kept = apply_cli_overrides(config, {"seed": None, "table1_check": False})
    assert kept.toDict() == config.toDict()


def test_config_hash_is_stable():
    first = merge_config_with_defaults({"pso": {"seed": 1}})
    second = merge_config_with_defaults({"pso": {"seed": 1}})
    other = merge_config_with_defaults({"pso": {"seed": 2}})
    assert config_hash(first) == config_hash(second)
    assert config_hash(first) != config_hash(other)
    assert len(config_hash(first)) == 64
