from typing import List, Tuple

from dotmap import DotMap

from autopilot.commands.common import (
    PlantFamily,
    build_plant_family,
    print_summary,
    report_header,
    vgap_grid_from_config,
)
from autopilot.constants import EXIT_CODES
from autopilot.core.models import EnvelopeReport, VgapMatrixRecord
from autopilot.services.vgap import (
    NominalSelection,
    VgapMatrix,
    select_nominal,
    vgap_matrix,
)
from autopilot.utils.file import Paths, write_csv, write_json


def analyze_envelope(
    config: DotMap, family: PlantFamily
) -> Tuple[VgapMatrix, NominalSelection]:
    ids = [plant_id for plant_id, _ in family]
    plants = [plant for _, plant in family]
    matrix = vgap_matrix(
        plants, ids, grid=vgap_grid_from_config(config), workers=config.outputs.workers
    )
    return matrix, select_nominal(matrix)


def winding_failures(matrix: VgapMatrix) -> List[List[str]]:
    return [
        [matrix.ids[i], matrix.ids[j]]
        for i in range(matrix.size)
        for j in range(i + 1, matrix.size)
        if not matrix.winding_ok[i, j]
    ]


def run_envelope(config: DotMap, paths: Paths, args) -> int:
    family = build_plant_family(config)
    matrix, selection = analyze_envelope(config, family)
    report = EnvelopeReport(
        **report_header(config),
        ids=list(matrix.ids),
        nominal_id=matrix.ids[selection.index],
        nominal_index=selection.index,
        r_star=selection.r_star,
        ranking=[matrix.ids[i] for i in selection.ranking],
        row_max=selection.row_max,
        winding_failures=winding_failures(matrix),
        vgap=VgapMatrixRecord(**matrix.to_dict()),
    )
    write_csv(matrix.to_frame(), paths.envelope_dir.joinpath("vgap_matrix.csv"))
    write_json(paths.envelope_dir.joinpath("envelope.json"), report.model_dump())
    print_summary(
        "Nominal operating point",
        [
            ("Nominal", report.nominal_id),
            ("Worst-case gap r*", f"{report.r_star:.6f}"),
            ("Ranking", ", ".join(report.ranking)),
            ("Winding failures", len(report.winding_failures)),
        ],
    )
    return EXIT_CODES.OK
