from dotmap import DotMap

from autopilot.constants import REFERENCE_PLANT_GAIN, REFERENCE_PLANT_ID

CONFIG_DEFAULTS = DotMap(
    {
        "actuator": {
            "omega_n": 200.0,
            "zeta": 0.7,
        },
        "gains": {
            "k_q": -0.0005,
        },
        "envelope": {
            "operating_points": [],
            # the canned reference plant joins the family when enabled
            "reference_plant": {
                "enabled": False,
                "gain": REFERENCE_PLANT_GAIN,
                "id": REFERENCE_PLANT_ID,
            },
        },
        "bounds": {
            "selection": "paper",
            "custom": {
                "lower": {"numerator": [1.0], "denominator": [1.0, 0.0]},
                "upper": {"numerator": [10.0], "denominator": [1.0, 0.0]},
            },
            "grid": {"min": 0.01, "max": 1.0e4, "points": 100},
        },
        "rolloff": {
            "enabled": True,
            "omega": 300.0,
            "reduction_db": 25.0,
        },
        "weights": {
            "fit_order": 2,
            "fit_starts": 4,
            # W1 for the fit100 workflow; alpha1 == beta1 makes it the constant K1
            "w1": {"K1": 1.0, "alpha1": 1.0, "beta1": 1.0},
        },
        "controller": {
            "numerator_order": 2,
            "denominator_order": 2,
        },
        "synthesis": {
            "gamma_factor": 1.05,
        },
        "vgap": {
            "points_per_decade": 400,
            "omega_min": 1.0e-4,
            "omega_max": 1.0e6,
            "tolerance": 1.0e-6,
        },
        "pso": {
            "particles": 40,
            "iterations": 300,
            "inertia": 0.729,
            "cognitive": 1.49445,
            "social": 1.49445,
            "seed": 0,
            "workers": 1,
            # decades around the plant-derived gain and around zero
            "search": {"gain_decades": 4.0, "controller_decades": 8.0},
            # starts of the loop fit that seeds one particle; 0 disables it
            "warm_starts": 8,
            "penalty": {
                "per_db": 0.05,
                "rolloff": 0.5,
                "per_missing_point": 1.0,
                "compliance": 0.95,
            },
        },
        "design": {
            "mode": "pso",
            "nominal_attempts": 3,
        },
        "simulation": {
            "t_final": 5.0,
            "dt": 1.0e-4,
            "reference": 1.0,
            "table1": False,
        },
        "outputs": {
            "directory": "outputs",
            "log_level": "INFO",
            "workers": 4,
        },
    },
    _dynamic=False,
)
