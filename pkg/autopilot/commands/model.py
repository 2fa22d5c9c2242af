from dotmap import DotMap

from autopilot.commands.common import (
    build_plant_family,
    finite_or_none,
    print_summary,
    report_header,
)
from autopilot.constants import EXIT_CODES
from autopilot.core.models import PlantRecord, TransferFunctionRecord
from autopilot.services.lti import RationalTransferFunction, factored_form
from autopilot.services.missile import reference_plant
from autopilot.utils.file import Paths, write_json


def _root_pairs(roots):
    return [[float(r.real), float(r.imag)] for r in roots]


def plant_record(config: DotMap, plant_id: str, plant: RationalTransferFunction):
    return PlantRecord(
        **report_header(config),
        id=plant_id,
        transfer_function=TransferFunctionRecord.from_tf(plant),
        poles=_root_pairs(plant.poles()),
        zeros=_root_pairs(plant.zeros()),
        stable=plant.is_stable(),
        minimum_phase=plant.is_minimum_phase(),
        dc_gain=finite_or_none(plant.dc_gain()),
    )


def run_model(config: DotMap, paths: Paths, args) -> int:
    family = build_plant_family(config)
    rows = []
    for plant_id, plant in family:
        record = plant_record(config, plant_id, plant)
        write_json(paths.plants_dir.joinpath(f"{plant_id}.json"), record.model_dump())
        rows.append((plant_id, factored_form(plant)))

    reference_config = config.envelope.reference_plant
    reference = reference_plant(reference_config.gain)
    write_json(
        paths.output_dir.joinpath("reference_plant.json"),
        plant_record(config, reference_config.id, reference).model_dump(),
    )
    print_summary("Open-loop plants", rows)
    return EXIT_CODES.OK
