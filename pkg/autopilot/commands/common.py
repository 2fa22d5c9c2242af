from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from dotmap import DotMap

from autopilot.core.models import ControllerRecord
from autopilot.exceptions import ConfigError
from autopilot.logger import logger, print_table
from autopilot.services.lti import RationalTransferFunction
from autopilot.services.missile import (
    ActuatorParams,
    load_envelope,
    open_loop_plant,
    reference_plant,
)
from autopilot.services.pso import (
    ControllerStructure,
    Penalties,
    RolloffSpec,
    SearchSpace,
    SwarmConfig,
)
from autopilot.services.shaping import FrequencyBounds, custom_bounds, paper_bounds
from autopilot.services.synthesis import achieved_margin
from autopilot.services.vgap import VgapGrid
from autopilot.utils.file import config_hash, load_json

PlantFamily = List[Tuple[str, RationalTransferFunction]]


def build_plant_family(config: DotMap) -> PlantFamily:
    """Envelope plants in configuration order, then the reference plant if enabled."""
    family = []
    raw_points = config.envelope.operating_points
    reference = config.envelope.reference_plant
    if len(raw_points) == 0 and not reference.enabled:
        raise ConfigError(
            "envelope must contain >= 1 point",
            [("envelope.operating_points", "envelope must contain >= 1 point")],
        )
    if len(raw_points) > 0:
        actuator = ActuatorParams(**config.actuator.toDict())
        for point in load_envelope(list(raw_points)):
            plant = open_loop_plant(point, actuator, config.gains.k_q)
            family.append((point.id, plant))
    if reference.enabled:
        if any(plant_id == reference.id for plant_id, _ in family):
            raise ConfigError(
                f"Reference plant id '{reference.id}' clashes with an operating point",
                [("envelope.reference_plant.id", "duplicate id")],
            )
        family.append((reference.id, reference_plant(reference.gain)))
    logger.info(f"Plant family: {len(family)} plant(s)")
    return family


def find_plant(family: PlantFamily, plant_id: str) -> RationalTransferFunction:
    for candidate_id, plant in family:
        if candidate_id == plant_id:
            return plant
    raise ConfigError(
        f"Plant '{plant_id}' is not part of the configured envelope",
        [("nominal_id", f"'{plant_id}' not found")],
    )


def bounds_from_config(config: DotMap) -> FrequencyBounds:
    grid_config = config.bounds.grid
    grid = np.logspace(
        np.log10(grid_config.min), np.log10(grid_config.max), grid_config.points
    )
    if config.bounds.selection == "custom":
        custom = config.bounds.custom
        return custom_bounds(custom.lower.toDict(), custom.upper.toDict(), grid)
    return paper_bounds(grid)


def vgap_grid_from_config(config: DotMap) -> VgapGrid:
    return VgapGrid(
        omega_min=config.vgap.omega_min,
        omega_max=config.vgap.omega_max,
        points_per_decade=config.vgap.points_per_decade,
        tolerance=config.vgap.tolerance,
    )


def controller_structure_from_config(config: DotMap) -> ControllerStructure:
    return ControllerStructure(
        config.controller.numerator_order, config.controller.denominator_order
    )


def search_space_from_config(config: DotMap) -> SearchSpace:
    search = config.pso.search
    return SearchSpace(search.gain_decades, search.controller_decades)


def swarm_config_from_config(config: DotMap, lower, upper) -> SwarmConfig:
    pso = config.pso
    return SwarmConfig(
        lower=lower,
        upper=upper,
        particles=pso.particles,
        iterations=pso.iterations,
        inertia=pso.inertia,
        cognitive=pso.cognitive,
        social=pso.social,
        seed=pso.seed,
        workers=pso.workers,
    )


def penalties_from_config(config: DotMap) -> Penalties:
    penalty = config.pso.penalty
    return Penalties(
        penalty.per_db, penalty.rolloff, penalty.per_missing_point, penalty.compliance
    )


def rolloff_from_config(config: DotMap) -> RolloffSpec:
    return RolloffSpec(
        config.rolloff.enabled, config.rolloff.omega, config.rolloff.reduction_db
    )


def report_header(config: DotMap) -> dict:
    # output placement and parallelism never change results
    hashed = {k: v for k, v in config.toDict().items() if k != "outputs"}
    hashed["pso"] = {k: v for k, v in hashed["pso"].items() if k != "workers"}
    return {"config_hash": config_hash(hashed), "seed": int(config.pso.seed)}


def finite_or_none(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


def load_controller(path) -> ControllerRecord:
    record = load_json(path)
    try:
        return ControllerRecord(**record)
    except (TypeError, ValueError) as error:
        raise ConfigError(
            f"Invalid controller file: '{path}'", [(str(path), str(error))]
        ) from None


def print_summary(title: str, rows) -> None:
    print_table(rows, title=title)


def margin_frame(family: PlantFamily, final_controller, points) -> pd.DataFrame:
    """Per-plant margin of the final controller next to its verdict."""
    return pd.DataFrame(
        [
            {
                "plant_id": point.plant_id,
                "b_achieved": achieved_margin(plant, final_controller),
                "shaped_gap": point.shaped_gap,
                "winding_ok": point.winding_ok,
                "stable": point.stable,
            }
            for (_, plant), point in zip(family, points)
        ],
        columns=["plant_id", "b_achieved", "shaped_gap", "winding_ok", "stable"],
    )
