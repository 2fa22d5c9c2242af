from dotmap import DotMap

CONFIG_FILENAME = "config.json"
REPORT_FILENAME = "report.json"
CONTROLLER_FILENAME = "controller.json"

# Bumped whenever an emitted JSON record changes shape
SCHEMA_VERSION = "1.0"

EXIT_CODES = DotMap(
    {
        "OK": 0,
        "CONFIG_ERROR": 2,
        "NO_STABILIZING_CANDIDATE": 3,
        "VERIFY_FAIL": 4,
    },
    _dynamic=False,
)

DESIGN_MODES = ("pso", "fit100")
BOUND_SELECTIONS = ("paper", "custom")

# Step-performance limits applied by --table1-check
TABLE1_THRESHOLDS = DotMap(
    {
        "overshoot": 0.06,
        "steady_state_error": 0.02,
        "overshoot_time": 1.0,
    },
    _dynamic=False,
)

# Canned non-minimum-phase reference plant
REFERENCE_PLANT_GAIN = 863878246.0
REFERENCE_PLANT_ID = "reference_plant"
REFERENCE_PLANT_FACTORED = "863878246(s-30)(s+25)/((s+121)(s+3)(s^2+20s+7933))"
