from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from dotmap import DotMap

from autopilot.commands.common import (
    PlantFamily,
    bounds_from_config,
    build_plant_family,
    controller_structure_from_config,
    finite_or_none,
    margin_frame,
    penalties_from_config,
    print_summary,
    report_header,
    rolloff_from_config,
    search_space_from_config,
    swarm_config_from_config,
    vgap_grid_from_config,
)
from autopilot.commands.envelope import analyze_envelope
from autopilot.constants import CONTROLLER_FILENAME, EXIT_CODES, REPORT_FILENAME
from autopilot.core.models import (
    BoundCompliance,
    ControllerRecord,
    DesignReport,
    MarginRecord,
    NominalAttempt,
    PointVerdict,
    StateSpaceRecord,
    TransferFunctionRecord,
)
from autopilot.exceptions import FitError, LtiError, SynthesisError
from autopilot.logger import logger
from autopilot.services.lti import (
    FrequencyResponse,
    RationalTransferFunction,
    StateSpaceSystem,
    freq_response,
    realize,
    series,
)
from autopilot.services.pso import design as pso_design
from autopilot.services.pso import search_box
from autopilot.services.shaping import (
    BoundReport,
    FrequencyBounds,
    ShapedPlant,
    WeightParams,
    check_bounds,
    check_rolloff,
    fit_minimum_phase,
    fit_target,
    make_weights,
    shape,
)
from autopilot.services.synthesis import (
    FixedStructureController,
    achieved_margin,
    is_internally_stable,
    loop_shaping_controller,
    ncf,
)
from autopilot.services.vgap import VgapResult, vgap_metric
from autopilot.utils.file import Paths, write_csv, write_json

NO_CANDIDATE_STATUS = "no stabilizing candidate found"


@dataclass(frozen=True, eq=False)
class Candidate:
    plant_id: str
    shaped: ShapedPlant
    controller: StateSpaceSystem
    gamma: Optional[float]
    b_opt: float
    b_achieved: float
    bound_report: BoundReport
    rolloff_ok: bool
    weights: Dict[str, float]
    fixed_structure: Optional[FixedStructureController] = None
    history: Optional[pd.DataFrame] = None

    @property
    def final_controller(self) -> StateSpaceSystem:
        return self.shaped.final_controller(self.controller)


@dataclass(frozen=True, eq=False)
class Certification:
    candidate: Candidate
    raw_r_star: float
    gaps: List[VgapResult]

    @property
    def shaped_r_star(self) -> float:
        return max(result.value for result in self.gaps)

    @property
    def certified(self) -> bool:
        return self.candidate.b_achieved > self.shaped_r_star


def _rolloff_ok(config: DotMap, shaped: ShapedPlant) -> bool:
    rolloff = config.rolloff
    if not rolloff.enabled:
        return True
    return check_rolloff(
        shaped.shaped, shaped.plant, rolloff.omega, rolloff.reduction_db
    )


def fit100_candidate(
    config: DotMap, plant_id: str, plant: RationalTransferFunction, bounds
) -> Candidate:
    """W1 from configuration, W2 fitted so |W2 P W1| sits between the bounds."""
    w1_params = config.weights.w1
    w1, _ = make_weights(
        WeightParams(K1=w1_params.K1, alpha1=w1_params.alpha1, beta1=w1_params.beta1)
    )
    target = fit_target(series(plant, w1), bounds)
    fit = fit_minimum_phase(
        np.column_stack([bounds.grid, target]),
        config.weights.fit_order,
        config.weights.fit_starts,
    )
    shaped = shape(plant, w1, fit.tf)
    realization = shaped.realization()
    data, gamma, controller = loop_shaping_controller(
        realization, config.synthesis.gamma_factor
    )
    return Candidate(
        plant_id=plant_id,
        shaped=shaped,
        controller=controller,
        gamma=gamma,
        b_opt=data.b_opt,
        b_achieved=achieved_margin(realization, controller),
        bound_report=check_bounds(shaped.shaped, bounds),
        rolloff_ok=_rolloff_ok(config, shaped),
        weights={
            "K1": float(w1_params.K1),
            "alpha1": float(w1_params.alpha1),
            "beta1": float(w1_params.beta1),
            "w2_fit_rms_db": fit.rms_db,
        },
    )


def pso_candidate(
    config: DotMap, plant_id: str, plant: RationalTransferFunction, bounds
) -> Candidate:
    """Weights and fixed-structure controller from the swarm; the bounds are
    checked on the compensated loop W2 P W1 K."""
    structure = controller_structure_from_config(config)
    lower, upper = search_box(
        plant, bounds, structure, search_space_from_config(config)
    )
    outcome = pso_design(
        plant,
        bounds,
        structure,
        swarm_config_from_config(config, lower, upper),
        penalties_from_config(config),
        rolloff_from_config(config),
        config.pso.warm_starts,
    )
    w1, w2 = make_weights(outcome.weights)
    shaped = shape(plant, w1, w2)
    try:
        b_opt = ncf(shaped.realization()).b_opt
    except SynthesisError as error:
        logger.warning(f"Optimal margin unavailable for '{plant_id}': {error}")
        b_opt = 0.0
    controller = outcome.controller.to_tf()
    report = outcome.bound_report
    if report is None:
        report = check_bounds(series(controller, shaped.shaped), bounds)
    return Candidate(
        plant_id=plant_id,
        shaped=shaped,
        controller=realize(controller),
        gamma=None,
        b_opt=b_opt,
        b_achieved=outcome.margin,
        bound_report=report,
        rolloff_ok=outcome.rolloff_ok,
        weights={k: float(v) for k, v in asdict(outcome.weights).items()},
        fixed_structure=outcome.controller,
        history=outcome.history,
    )


DESIGN_WORKFLOWS = {"fit100": fit100_candidate, "pso": pso_candidate}


def shaped_gaps(
    config: DotMap, candidate: Candidate, family: PlantFamily
) -> List[VgapResult]:
    """v-gap from the shaped nominal plant to every shaped envelope plant."""
    grid = vgap_grid_from_config(config)
    shaped = candidate.shaped

    def gap(plant):
        other = series(shaped.w2, series(plant, shaped.w1))
        return vgap_metric(shaped.shaped, other, grid)

    with ThreadPoolExecutor(max_workers=config.outputs.workers) as executor:
        return list(executor.map(gap, [plant for _, plant in family]))


def select_design(attempts: List[Certification]) -> Certification:
    """First certified attempt, else the one closest to certification."""
    for attempt in attempts:
        if attempt.certified:
            return attempt
    return max(attempts, key=lambda a: a.candidate.b_achieved - a.shaped_r_star)


def point_verdicts(
    family: PlantFamily, chosen: Certification
) -> List[PointVerdict]:
    final = chosen.candidate.final_controller
    verdicts = []
    for (plant_id, plant), gap in zip(family, chosen.gaps):
        verdicts.append(
            PointVerdict(
                plant_id=plant_id,
                shaped_gap=gap.value,
                winding_ok=gap.winding_ok,
                stable=is_internally_stable(plant, final),
            )
        )
    return verdicts


def loop_response(
    plant: RationalTransferFunction, controller: StateSpaceSystem, omegas
) -> FrequencyResponse:
    """P(jw) K(jw) for the negative-feedback loop on the raw plant."""
    plant_response = freq_response(plant, omegas)
    controller_response = controller.frequency_matrix(omegas)[:, 0, 0]
    response = plant_response.response * controller_response
    flagged = plant_response.flagged | ~np.isfinite(response)
    return FrequencyResponse(
        plant_response.omega, np.where(flagged, np.nan, response), flagged
    )


def controller_record(
    config: DotMap, mode: str, candidate: Candidate
) -> ControllerRecord:
    fixed = candidate.fixed_structure
    return ControllerRecord(
        **report_header(config),
        mode=mode,
        nominal_id=candidate.plant_id,
        gamma=candidate.gamma,
        w1=TransferFunctionRecord.from_tf(candidate.shaped.w1),
        w2=TransferFunctionRecord.from_tf(candidate.shaped.w2),
        core=StateSpaceRecord.from_system(candidate.controller),
        final=StateSpaceRecord.from_system(candidate.final_controller),
        fixed_structure=(
            TransferFunctionRecord.from_tf(fixed.to_tf()) if fixed is not None else None
        ),
    )


def run_design(config: DotMap, paths: Paths, args) -> int:
    mode = config.design.mode
    family = build_plant_family(config)
    matrix, selection = analyze_envelope(config, family)
    bounds: FrequencyBounds = bounds_from_config(config)
    workflow = DESIGN_WORKFLOWS[mode]

    attempts: List[Certification] = []
    for index in selection.ranking[: config.design.nominal_attempts]:
        plant_id, plant = family[index]
        logger.info(f"Designing on nominal '{plant_id}' ({mode})")
        try:
            candidate = workflow(config, plant_id, plant, bounds)
        except (FitError, SynthesisError, LtiError) as error:
            logger.warning(f"Design on '{plant_id}' failed: {error}")
            continue
        attempt = Certification(
            candidate, selection.row_max[index], shaped_gaps(config, candidate, family)
        )
        attempts.append(attempt)
        logger.info(
            f"'{plant_id}': margin {candidate.b_achieved:.4f}, "
            f"shaped r* {attempt.shaped_r_star:.4f}"
        )
        if attempt.certified:
            break
        logger.warning(f"Margin on '{plant_id}' does not cover the envelope")

    header = report_header(config)
    if not attempts:
        logger.error(NO_CANDIDATE_STATUS)
        write_json(
            paths.design_dir.joinpath(REPORT_FILENAME),
            {
                **header,
                "mode": mode,
                "status": NO_CANDIDATE_STATUS,
                "stabilizing": False,
            },
        )
        return EXIT_CODES.NO_STABILIZING_CANDIDATE

    chosen = select_design(attempts)
    candidate = chosen.candidate
    stabilizing = candidate.b_achieved > 0.0
    points = point_verdicts(family, chosen)
    if chosen.certified and not all(p.stable for p in points):
        logger.critical(
            "Certified design leaves unstable envelope points: "
            + ", ".join(p.plant_id for p in points if not p.stable)
        )

    report = DesignReport(
        **header,
        mode=mode,
        status="ok" if stabilizing else NO_CANDIDATE_STATUS,
        stabilizing=stabilizing,
        nominal_id=candidate.plant_id,
        r_star=chosen.raw_r_star,
        shaped_r_star=chosen.shaped_r_star,
        margin=MarginRecord(
            plant_id=candidate.plant_id,
            b_opt=candidate.b_opt,
            b_achieved=candidate.b_achieved,
            gamma=candidate.gamma,
        ),
        bound_compliance=BoundCompliance(
            aggregate_pass=candidate.bound_report.aggregate_pass,
            pass_fraction=candidate.bound_report.pass_fraction,
            worst_violation_db=finite_or_none(
                candidate.bound_report.worst_violation_db
            ),
            rolloff_pass=candidate.rolloff_ok,
        ),
        envelope_certified=chosen.certified,
        attempts=[
            NominalAttempt(
                plant_id=a.candidate.plant_id,
                raw_r_star=a.raw_r_star,
                shaped_r_star=a.shaped_r_star,
                b_achieved=a.candidate.b_achieved,
                certified=a.certified,
            )
            for a in attempts
        ],
        points=points,
        weights=candidate.weights,
    )
    write_json(paths.design_dir.joinpath(REPORT_FILENAME), report.model_dump())
    if not stabilizing:
        logger.error(NO_CANDIDATE_STATUS)
        return EXIT_CODES.NO_STABILIZING_CANDIDATE

    write_json(
        paths.design_dir.joinpath(CONTROLLER_FILENAME),
        controller_record(config, mode, candidate).model_dump(),
    )
    write_csv(
        candidate.bound_report.to_frame(), paths.design_dir.joinpath("bounds.csv")
    )
    plant = candidate.shaped.plant
    write_csv(
        loop_response(plant, candidate.final_controller, bounds.grid).to_frame(),
        paths.design_dir.joinpath("loop_response.csv"),
    )
    write_csv(
        margin_frame(family, candidate.final_controller, points),
        paths.design_dir.joinpath("margins.csv"),
    )
    if candidate.history is not None:
        write_csv(candidate.history, paths.design_dir.joinpath("pso_history.csv"))

    print_summary(
        "Design",
        [
            ("Mode", mode),
            ("Nominal", candidate.plant_id),
            ("b_opt", f"{candidate.b_opt:.4f}"),
            ("b_achieved", f"{candidate.b_achieved:.4f}"),
            ("Shaped r*", f"{chosen.shaped_r_star:.4f}"),
            ("Envelope certified", chosen.certified),
            ("Bounds met", f"{100 * candidate.bound_report.pass_fraction:.1f}%"),
            ("Roll-off", "PASS" if candidate.rolloff_ok else "FAIL"),
        ],
    )
    return EXIT_CODES.OK
