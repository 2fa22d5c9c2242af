"""Particle swarm search over loop-shaping weights and fixed-structure controllers.

Every particle draws from its own generator spawned from one seed sequence,
and cost evaluations are collected in particle order, so a run is identical
for any number of worker threads.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from autopilot.exceptions import (
    DecodeError,
    FitError,
    LtiError,
    SwarmConfigError,
    SynthesisError,
    WeightError,
)
from autopilot.logger import logger
from autopilot.services.lti import (
    RationalTransferFunction,
    as_tf,
    magnitude_db,
    realize,
    series,
)
from autopilot.services.shaping import (
    BoundReport,
    FrequencyBounds,
    WeightParams,
    check_bounds,
    check_rolloff,
    fit_loop,
    fit_target,
    make_weights,
    shape,
)
from autopilot.services.synthesis import FixedStructureController, achieved_margin

WEIGHT_NAMES = ["K1", "alpha1", "beta1", "K2", "alpha2", "beta2"]
INVALID_WEIGHT_PENALTY = 10.0
MAX_PENALIZED_DB = 1000.0
HISTORY_COLUMNS = ["iteration", "gbest_cost", "gbest_margin", "worst_violation_db"]


@dataclass(frozen=True, eq=False)
class SwarmConfig:
    lower: np.ndarray
    upper: np.ndarray
    particles: int = 40
    iterations: int = 300
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise SwarmConfigError("Lower and upper bounds need the same dimension")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise SwarmConfigError("Bounds must be finite")
        if np.any(lower >= upper):
            dims = np.flatnonzero(lower >= upper).tolist()
            raise SwarmConfigError(
                f"Bound min must be below max in dimension(s) {dims}"
            )
        if self.particles < 2:
            raise SwarmConfigError(f"Need at least 2 particles, got {self.particles}")
        if self.iterations < 1:
            raise SwarmConfigError(f"Need at least 1 iteration, got {self.iterations}")
        if self.cognitive < 0 or self.social < 0:
            raise SwarmConfigError("Cognitive and social coefficients must be >= 0")
        if self.workers < 1:
            raise SwarmConfigError(f"Need at least 1 worker, got {self.workers}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return self.lower.size


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_cost: float
    rng: np.random.Generator = field(repr=False)


@dataclass(frozen=True, eq=False)
class SwarmResult:
    best_position: np.ndarray
    best_cost: float
    history: List[float]
    best_positions: List[np.ndarray]


def _finite_or_inf(value) -> float:
    value = float(value)
    return value if np.isfinite(value) else np.inf


def pso_minimize(
    cost: Callable[[np.ndarray], float],
    config: SwarmConfig,
    initial: Sequence[np.ndarray] = (),
) -> SwarmResult:
    """Minimize ``cost`` over the box; ``initial`` positions replace the random
    draws of the leading particles."""
    lower, upper = config.lower, config.upper
    if len(initial) > config.particles:
        raise SwarmConfigError(
            f"{len(initial)} initial positions for {config.particles} particles"
        )
    streams = np.random.SeedSequence(config.seed).spawn(config.particles)
    swarm = []
    for index, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        position = lower + rng.random(config.dimension) * (upper - lower)
        if index < len(initial):
            seeded = np.asarray(initial[index], dtype=float).ravel()
            if seeded.shape != position.shape:
                raise SwarmConfigError(
                    f"Initial position has {seeded.size} entries, "
                    f"swarm needs {config.dimension}"
                )
            position = np.clip(seeded, lower, upper)
        swarm.append(
            Particle(
                position=position,
                velocity=np.zeros(config.dimension),
                best_position=position.copy(),
                best_cost=np.inf,
                rng=rng,
            )
        )

    with ThreadPoolExecutor(max_workers=config.workers) as executor:

        def evaluate():
            costs = executor.map(cost, [p.position for p in swarm])
            return [_finite_or_inf(c) for c in costs]

        for particle, value in zip(swarm, evaluate()):
            particle.best_cost = value
        leader = min(range(config.particles), key=lambda i: swarm[i].best_cost)
        gbest = swarm[leader].best_position.copy()
        gbest_cost = swarm[leader].best_cost

        history, best_positions = [], []
        for iteration in range(config.iterations):
            for particle in swarm:
                r1 = particle.rng.random(config.dimension)
                r2 = particle.rng.random(config.dimension)
                pull = particle.best_position - particle.position
                particle.velocity = (
                    config.inertia * particle.velocity
                    + config.cognitive * r1 * pull
                    + config.social * r2 * (gbest - particle.position)
                )
                moved = particle.position + particle.velocity
                clamped = (moved < lower) | (moved > upper)
                particle.position = np.clip(moved, lower, upper)
                particle.velocity[clamped] = 0.0

            for particle, value in zip(swarm, evaluate()):
                if value < particle.best_cost:
                    particle.best_cost = value
                    particle.best_position = particle.position.copy()
                if value < gbest_cost:
                    gbest_cost = value
                    gbest = particle.position.copy()

            history.append(gbest_cost)
            best_positions.append(gbest.copy())
            logger.debug(f"PSO iteration {iteration + 1}: gbest {gbest_cost:.6g}")

    return SwarmResult(gbest, gbest_cost, history, best_positions)


@dataclass(frozen=True)
class ControllerStructure:
    numerator_order: int = 1
    denominator_order: int = 1

    def __post_init__(self):
        if self.numerator_order < 0 or self.denominator_order < 0:
            raise DecodeError("Controller orders must be non-negative")
        if self.numerator_order > self.denominator_order:
            raise DecodeError(
                f"Numerator order {self.numerator_order} exceeds denominator order "
                f"{self.denominator_order}; the controller would be improper"
            )

    @property
    def size(self) -> int:
        return self.numerator_order + 1 + self.denominator_order


@dataclass(frozen=True)
class Penalties:
    per_db: float = 0.05
    rolloff: float = 0.5
    per_missing_point: float = 1.0
    compliance: float = 0.95


@dataclass(frozen=True)
class RolloffSpec:
    enabled: bool = True
    omega: float = 300.0
    reduction_db: float = 25.0


@dataclass(frozen=True)
class SearchSpace:
    """Half-widths of the search box in decades."""

    gain_decades: float = 4.0
    controller_decades: float = 8.0


@dataclass(frozen=True)
class DesignCost:
    margin: float
    penalty: float
    total: float


def parameter_count(structure: ControllerStructure) -> int:
    return len(WEIGHT_NAMES) + structure.size


def _signed_log(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.sign(values) * np.log10(1.0 + np.abs(values))


def _signed_exp(coordinates) -> np.ndarray:
    coordinates = np.asarray(coordinates, dtype=float)
    return np.sign(coordinates) * (10.0 ** np.abs(coordinates) - 1.0)


def decode(
    params: Sequence[float], structure: ControllerStructure
) -> Tuple[WeightParams, FixedStructureController]:
    """Search coordinates to weights and controller: log10 of every weight
    parameter, then sign(c) log10(1 + |c|) per controller coefficient."""
    params = np.asarray(params, dtype=float).ravel()
    expected = parameter_count(structure)
    if params.size != expected:
        raise DecodeError(
            f"Parameter vector has {params.size} entries, layout needs {expected}"
        )
    weights = WeightParams(*(10.0 ** params[: len(WEIGHT_NAMES)]))
    rest = _signed_exp(params[len(WEIGHT_NAMES) :])
    split = structure.numerator_order + 1
    return weights, FixedStructureController(rest[:split], rest[split:])


def encode(
    weights: WeightParams, controller: FixedStructureController
) -> np.ndarray:
    """Inverse of ``decode``; weight parameters must be positive."""
    vector = weights.as_vector()
    if np.any(vector <= 0.0):
        raise DecodeError("Only positive weight parameters have search coordinates")
    return np.concatenate([np.log10(vector), _signed_log(controller.coefficients)])


def search_box(
    plant, bounds: FrequencyBounds, structure: ControllerStructure, space=SearchSpace()
) -> Tuple[np.ndarray, np.ndarray]:
    """K1 around the gain that puts |K1 P| mid-bounds, K2 around one, every
    corner on the bound grid, controller coefficients within +-10^decades."""
    target = fit_target(as_tf(plant), bounds)
    usable = np.isfinite(target) & (target > 0.0)
    center = float(np.mean(np.log10(target[usable]))) if np.any(usable) else 0.0
    lo_w = float(np.log10(bounds.grid.min()))
    hi_w = max(float(np.log10(bounds.grid.max())), lo_w + 1.0)
    g, c = space.gain_decades, space.controller_decades
    lower = [center - g, lo_w, lo_w, -g, lo_w, lo_w] + [-c] * structure.size
    upper = [center + g, hi_w, hi_w, g, hi_w, hi_w] + [c] * structure.size
    return np.array(lower), np.array(upper)


def _penalty(
    report: BoundReport, rolloff_ok: bool, penalties: Penalties
) -> float:
    worst = min(report.worst_violation_db, MAX_PENALIZED_DB)
    required = int(np.ceil(penalties.compliance * report.passed.size - 1e-9))
    missing = max(0, required - int(np.count_nonzero(report.passed)))
    return (
        penalties.per_db * worst
        + penalties.per_missing_point * missing
        + (0.0 if rolloff_ok else penalties.rolloff)
    )


def _evaluate(
    params, plant, bounds, structure, penalties, rolloff
) -> Tuple[DesignCost, Optional[BoundReport], bool]:
    weights, controller = decode(params, structure)
    try:
        w1, w2 = make_weights(weights)
    except WeightError as error:
        logger.debug(f"Invalid weight candidate: {error}")
        invalid = DesignCost(
            margin=0.0, penalty=INVALID_WEIGHT_PENALTY, total=INVALID_WEIGHT_PENALTY
        )
        return invalid, None, False
    shaped = shape(plant, w1, w2)
    candidate = controller.to_tf()
    try:
        margin = achieved_margin(shaped.realization(), realize(candidate))
    except (LtiError, SynthesisError) as error:
        logger.debug(f"Margin unavailable, counted as 0: {error}")
        margin = 0.0
    # the bounds apply to the compensated loop W2 P W1 K
    loop = series(candidate, shaped.shaped)
    report = check_bounds(loop, bounds)
    rolloff_ok = (not rolloff.enabled) or check_rolloff(
        loop, plant, rolloff.omega, rolloff.reduction_db
    )
    penalty = _penalty(report, rolloff_ok, penalties)
    cost = DesignCost(margin=margin, penalty=penalty, total=-margin + penalty)
    return cost, report, rolloff_ok


def margin_cost(
    params: Sequence[float],
    plant: RationalTransferFunction,
    bounds: FrequencyBounds,
    structure: ControllerStructure,
    penalties: Penalties = Penalties(),
    rolloff: RolloffSpec = RolloffSpec(),
) -> DesignCost:
    design_cost, _, _ = _evaluate(params, plant, bounds, structure, penalties, rolloff)
    return design_cost


def warm_start(
    plant,
    bounds: FrequencyBounds,
    structure: ControllerStructure,
    config: SwarmConfig,
    penalties: Penalties = Penalties(),
    rolloff: RolloffSpec = RolloffSpec(),
    starts: int = 8,
) -> np.ndarray:
    """Search coordinates of a loop fit that puts |W1 W2 K P| at the bound
    center. K carries unit magnitude at crossover, K1 the remaining gain,
    and the controller sign with the lower cost wins."""
    plant = as_tf(plant)
    target = fit_target(plant, bounds)
    usable = np.isfinite(target) & (target > 0.0)
    fit = fit_loop(
        np.column_stack([bounds.grid[usable], target[usable]]),
        structure.numerator_order,
        structure.denominator_order,
        np.maximum(bounds.half_width_db()[usable], 0.1),
        starts,
        config.seed,
    )
    center_db = magnitude_db(bounds.center_magnitude()[usable])
    crossover = bounds.grid[usable][int(np.argmin(np.abs(center_db)))]
    scale = float(np.abs(fit.controller(1j * crossover)))
    numerator = fit.controller.numerator.coefficients / scale
    denominator = fit.controller.denominator.coefficients[1:]
    weights = WeightParams(
        K1=fit.gain * scale,
        alpha1=fit.alpha1,
        beta1=fit.beta1,
        K2=1.0,
        alpha2=fit.alpha2,
        beta2=fit.beta2,
    )
    candidates = []
    for sign in (1.0, -1.0):
        controller = FixedStructureController(sign * numerator, denominator)
        position = np.clip(encode(weights, controller), config.lower, config.upper)
        cost = margin_cost(position, plant, bounds, structure, penalties, rolloff)
        candidates.append((cost.total, position))
    total, position = min(candidates, key=lambda pair: pair[0])
    logger.info(f"Loop-fit warm start: cost {total:.4g}")
    return position


@dataclass(frozen=True, eq=False)
class DesignOutcome:
    weights: WeightParams
    controller: FixedStructureController
    cost: DesignCost
    bound_report: Optional[BoundReport]
    rolloff_ok: bool
    history: pd.DataFrame

    @property
    def margin(self) -> float:
        return self.cost.margin

    @property
    def stabilizing(self) -> bool:
        return self.cost.margin > 0.0


def design(
    plant,
    bounds: FrequencyBounds,
    structure: ControllerStructure,
    config: SwarmConfig,
    penalties: Penalties = Penalties(),
    rolloff: RolloffSpec = RolloffSpec(),
    warm_starts: int = 0,
) -> DesignOutcome:
    """Maximize the achieved margin over weights and controller coefficients.

    ``warm_starts`` > 0 seeds one particle with a loop fit from that many
    starts.
    """
    plant = as_tf(plant)
    expected = parameter_count(structure)
    if config.dimension != expected:
        raise SwarmConfigError(
            f"Swarm has {config.dimension} dimension(s), "
            f"parameter layout needs {expected}"
        )

    initial = []
    if warm_starts > 0:
        try:
            initial.append(
                warm_start(
                    plant, bounds, structure, config, penalties, rolloff, warm_starts
                )
            )
        except (FitError, LtiError, SynthesisError) as error:
            logger.warning(f"Loop-fit warm start skipped: {error}")

    def evaluate(position):
        return _evaluate(position, plant, bounds, structure, penalties, rolloff)

    result = pso_minimize(lambda params: evaluate(params)[0].total, config, initial)

    cache: Dict[bytes, Tuple[DesignCost, Optional[BoundReport], bool]] = {}
    rows = []
    for iteration, position in enumerate(result.best_positions, start=1):
        key = position.tobytes()
        if key not in cache:
            cache[key] = evaluate(position)
        design_cost, report, _ = cache[key]
        rows.append(
            {
                "iteration": iteration,
                "gbest_cost": result.history[iteration - 1],
                "gbest_margin": design_cost.margin,
                "worst_violation_db": (
                    report.worst_violation_db if report is not None else np.nan
                ),
            }
        )
    history = pd.DataFrame(rows, columns=HISTORY_COLUMNS)

    weights, controller = decode(result.best_position, structure)
    final_cost, report, rolloff_ok = evaluate(result.best_position)
    if final_cost.margin <= 0.0:
        logger.warning("No stabilizing candidate found by the swarm")
    else:
        logger.info(f"Swarm design margin {final_cost.margin:.4f}")
    return DesignOutcome(
        weights=weights,
        controller=controller,
        cost=final_cost,
        bound_report=report,
        rolloff_ok=rolloff_ok,
        history=history,
    )
