from concurrent.futures import ThreadPoolExecutor

from dotmap import DotMap

from autopilot.commands.common import (
    build_plant_family,
    load_controller,
    print_summary,
    report_header,
)
from autopilot.constants import CONTROLLER_FILENAME, EXIT_CODES
from autopilot.core.models import PointSimulation, SimulationReport, StepMetricsRecord
from autopilot.logger import logger
from autopilot.services.sim import simulate_closed_loop, table1_check
from autopilot.utils.file import Paths, write_csv, write_json


def run_simulate(config: DotMap, paths: Paths, args) -> int:
    controller_path = args.get("controller") or paths.design_dir.joinpath(
        CONTROLLER_FILENAME
    )
    final = load_controller(controller_path).final.to_system()
    family = build_plant_family(config)
    options = config.simulation

    def simulate(item):
        _, plant = item
        return simulate_closed_loop(
            plant, final, options.t_final, options.dt, options.reference
        )

    with ThreadPoolExecutor(max_workers=config.outputs.workers) as executor:
        runs = list(executor.map(simulate, family))

    points, rows = [], []
    for (plant_id, _), run in zip(family, runs):
        write_csv(run.frame, paths.simulation_dir.joinpath(f"{plant_id}.csv"))
        if not run.settled:
            logger.warning(f"'{plant_id}': steady state not reached")
            points.append(PointSimulation(plant_id=plant_id, settled=False))
            rows.append((plant_id, "not settled"))
            continue
        metrics = run.metrics
        flags = table1_check(metrics) if options.table1 else None
        points.append(
            PointSimulation(
                plant_id=plant_id,
                settled=True,
                metrics=StepMetricsRecord(**metrics.to_dict()),
                table1=flags,
            )
        )
        summary = (
            f"overshoot {metrics.overshoot:.4f} at {metrics.overshoot_time:.3f} s, "
            f"sse {metrics.steady_state_error:.4f}, max rate {metrics.max_rate:.4g}"
        )
        if flags is not None:
            failed = [name for name, ok in flags.items() if not ok]
            verdict = "PASS" if not failed else "FAIL " + ",".join(failed)
            summary += f", table1 {verdict}"
        rows.append((plant_id, summary))

    report = SimulationReport(
        **report_header(config),
        t_final=options.t_final,
        dt=options.dt,
        reference=options.reference,
        points=points,
    )
    write_json(paths.simulation_dir.joinpath("metrics.json"), report.model_dump())
    print_summary("Step responses", rows)
    return EXIT_CODES.OK
