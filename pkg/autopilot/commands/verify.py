from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from dotmap import DotMap

from autopilot.commands.common import (
    build_plant_family,
    find_plant,
    load_controller,
    margin_frame,
    print_summary,
    report_header,
    vgap_grid_from_config,
)
from autopilot.constants import CONTROLLER_FILENAME, EXIT_CODES
from autopilot.core.models import PointVerdict, VerifyReport
from autopilot.logger import logger
from autopilot.services.lti import series
from autopilot.services.shaping import shape
from autopilot.services.synthesis import achieved_margin, is_internally_stable
from autopilot.services.vgap import vgap_metric
from autopilot.utils.file import Paths, load_json, write_csv, write_json

PASS, FAIL = "PASS", "FAIL"


def run_verify(config: DotMap, paths: Paths, args) -> int:
    """Certificate b(W2 P0 W1, K) > max shaped gap, cross-checked by pole tests."""
    controller_path = args.get("controller") or paths.design_dir.joinpath(
        CONTROLLER_FILENAME
    )
    record = load_controller(controller_path)
    family = build_plant_family(config)
    nominal = find_plant(family, record.nominal_id)
    shaped = shape(nominal, record.w1.to_tf(), record.w2.to_tf())
    core, final = record.core.to_system(), record.final.to_system()
    b_achieved = achieved_margin(shaped.realization(), core)
    grid = vgap_grid_from_config(config)

    def check(item):
        _, plant = item
        shaped_plant = series(shaped.w2, series(plant, shaped.w1))
        raw = vgap_metric(nominal, plant, grid)
        gap = vgap_metric(shaped.shaped, shaped_plant, grid)
        return raw, gap, is_internally_stable(plant, final)

    with ThreadPoolExecutor(max_workers=config.outputs.workers) as executor:
        checks = list(executor.map(check, family))

    raw_r_star = max(raw.value for raw, _, _ in checks)
    shaped_r_star = max(gap.value for _, gap, _ in checks)
    certificate = b_achieved > shaped_r_star
    points = [
        PointVerdict(
            plant_id=plant_id,
            shaped_gap=gap.value,
            winding_ok=gap.winding_ok,
            stable=stable,
        )
        for (plant_id, _), (_, gap, stable) in zip(family, checks)
    ]
    all_stable = all(p.stable for p in points)
    disagreements = []
    if certificate:
        for point in points:
            if not point.stable:
                message = (
                    f"'{point.plant_id}' is unstable although the margin "
                    f"{b_achieved:.6f} exceeds its gap {point.shaped_gap:.6f}"
                )
                logger.critical(message)
                disagreements.append(message)

    report_path = args.get("report")
    if report_path:
        recorded = load_json(report_path).get("margin", {}).get("b_achieved")
        if recorded is not None and abs(recorded - b_achieved) > 1e-6:
            logger.warning(
                f"Recomputed margin {b_achieved:.6f} differs from the design "
                f"report's {recorded:.6f}"
            )

    verdict = PASS if certificate and all_stable and not disagreements else FAIL
    report = VerifyReport(
        **report_header(config),
        verdict=verdict,
        nominal_id=record.nominal_id,
        b_achieved=b_achieved,
        raw_r_star=raw_r_star,
        shaped_r_star=shaped_r_star,
        certificate=certificate,
        all_stable=all_stable,
        points=points,
        disagreements=disagreements,
    )
    write_json(paths.verify_dir.joinpath("verify.json"), report.model_dump())
    write_csv(
        margin_frame(family, final, points),
        paths.verify_dir.joinpath("margins.csv"),
    )
    print_summary(
        "Envelope verification",
        [
            ("Nominal", record.nominal_id),
            ("b_achieved", f"{b_achieved:.6f}"),
            ("Shaped r*", f"{shaped_r_star:.6f}"),
            ("Raw r*", f"{raw_r_star:.6f}"),
            ("Closed loops stable", f"{sum(p.stable for p in points)}/{len(points)}"),
            ("Verdict", verdict),
        ],
    )
    if verdict == FAIL:
        logger.error(f"Verification FAIL for controller '{Path(controller_path)}'")
        return EXIT_CODES.VERIFY_FAIL
    return EXIT_CODES.OK

