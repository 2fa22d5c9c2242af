# https://docs.python.org/3/tutorial/modules.html#:~:text=The%20__init__.py,on%20the%20module%20search%20path.
from jsonschema import Draft202012Validator

from autopilot.schemas.config_schema import CONFIG_SCHEMA, OPERATING_POINT_SCHEMA

SCHEMA_JSONS = {
    "config": CONFIG_SCHEMA,
    "operating_point": OPERATING_POINT_SCHEMA,
}

SCHEMA_VALIDATORS = {
    "config": Draft202012Validator(CONFIG_SCHEMA),
    "operating_point": Draft202012Validator(OPERATING_POINT_SCHEMA),
}
