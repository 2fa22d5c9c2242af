from autopilot.constants import BOUND_SELECTIONS, DESIGN_MODES

AERO_COEFFICIENT_NAMES = [
    "C_y_beta",
    "C_y_delta_r",
    "C_y_r",
    "C_z_alpha",
    "C_z_delta_e",
    "C_z_q",
    "C_l_delta_a",
    "C_l_p",
    "C_m_alpha",
    "C_m_delta_e",
    "C_m_q",
    "C_n_beta",
    "C_n_delta_r",
    "C_n_r",
]

positive_number = {"type": "number", "exclusiveMinimum": 0}
finite_number = {"type": "number"}
coefficient_list = {"type": "array", "items": finite_number, "minItems": 1}
rational = {
    "type": "object",
    "additionalProperties": False,
    "required": ["numerator", "denominator"],
    "properties": {
        "numerator": coefficient_list,
        "denominator": coefficient_list,
    },
}

OPERATING_POINT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Operating Point Schema",
    "description": "One flight condition of the envelope",
    "type": "object",
    "additionalProperties": False,
    "required": [
        "id",
        "Q",
        "S",
        "D",
        "m",
        "I_x",
        "I_y",
        "I_z",
        "U",
        "V",
        "coefficients",
    ],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "Q": positive_number,
        "S": positive_number,
        "D": positive_number,
        "m": positive_number,
        "I_x": positive_number,
        "I_y": positive_number,
        "I_z": positive_number,
        "U": finite_number,
        "V": positive_number,
        "altitude": {"type": ["number", "null"]},
        "mach": {"type": ["number", "null"]},
        "coefficients": {
            "type": "object",
            "additionalProperties": False,
            "required": AERO_COEFFICIENT_NAMES,
            "properties": {name: finite_number for name in AERO_COEFFICIENT_NAMES},
        },
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Config Schema",
    "description": "Autopilot synthesis run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "actuator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "omega_n": positive_number,
                "zeta": positive_number,
            },
        },
        "gains": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"k_q": finite_number},
        },
        "envelope": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "operating_points": {
                    "type": "array",
                    "items": OPERATING_POINT_SCHEMA,
                },
                "reference_plant": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "enabled": {"type": "boolean"},
                        "gain": finite_number,
                        "id": {"type": "string", "minLength": 1},
                    },
                },
            },
        },
        "bounds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "selection": {"type": "string", "enum": list(BOUND_SELECTIONS)},
                "custom": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"lower": rational, "upper": rational},
                },
                "grid": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "min": positive_number,
                        "max": positive_number,
                        "points": {"type": "integer", "minimum": 2},
                    },
                },
            },
        },
        "rolloff": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "omega": positive_number,
                "reduction_db": {"type": "number", "minimum": 0},
            },
        },
        "weights": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fit_order": {"type": "integer", "minimum": 0, "maximum": 12},
                "fit_starts": {"type": "integer", "minimum": 1, "maximum": 50},
                "w1": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "K1": finite_number,
                        "alpha1": finite_number,
                        "beta1": finite_number,
                    },
                },
            },
        },
        "controller": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "numerator_order": {"type": "integer", "minimum": 0, "maximum": 8},
                "denominator_order": {"type": "integer", "minimum": 0, "maximum": 8},
            },
        },
        "synthesis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma_factor": {"type": "number", "exclusiveMinimum": 1},
            },
        },
        "vgap": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points_per_decade": {"type": "integer", "minimum": 10},
                "omega_min": positive_number,
                "omega_max": positive_number,
                "tolerance": positive_number,
            },
        },
        "pso": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "particles": {"type": "integer", "minimum": 2},
                "iterations": {"type": "integer", "minimum": 1},
                "inertia": finite_number,
                "cognitive": {"type": "number", "minimum": 0},
                "social": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "workers": {"type": "integer", "minimum": 1},
                "search": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "gain_decades": positive_number,
                        "controller_decades": positive_number,
                    },
                },
                "warm_starts": {"type": "integer", "minimum": 0, "maximum": 64},
                "penalty": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "per_db": {"type": "number", "minimum": 0},
                        "rolloff": {"type": "number", "minimum": 0},
                        "per_missing_point": {"type": "number", "minimum": 0},
                        "compliance": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                },
            },
        },
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"type": "string", "enum": list(DESIGN_MODES)},
                "nominal_attempts": {"type": "integer", "minimum": 1},
            },
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_final": positive_number,
                "dt": positive_number,
                "reference": {"type": "number", "not": {"const": 0}},
                "table1": {"type": "boolean"},
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "log_level": {
                    "type": "string",
                    "enum": ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                },
                "workers": {"type": "integer", "minimum": 1},
            },
        },
    },
}
