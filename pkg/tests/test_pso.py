import numpy as np
import pytest

from autopilot.exceptions import DecodeError, SwarmConfigError
from autopilot.services.lti import RationalTransferFunction, series
from autopilot.services.missile import reference_plant
from autopilot.services.pso import (
    HISTORY_COLUMNS,
    INVALID_WEIGHT_PENALTY,
    ControllerStructure,
    Penalties,
    RolloffSpec,
    SearchSpace,
    SwarmConfig,
    decode,
    design,
    encode,
    margin_cost,
    parameter_count,
    pso_minimize,
    search_box,
)
from autopilot.services.shaping import (
    WeightParams,
    check_bounds,
    fit_target,
    make_weights,
    paper_bounds,
    shape,
)
from autopilot.services.synthesis import FixedStructureController, ncf

tf = RationalTransferFunction.from_coefficients
INTEGRATOR = tf([1.0], [1.0, 0.0])
NO_PENALTIES = Penalties(0.0, 0.0, 0.0)


def sphere(x):
    return float(np.sum(x**2))


def rosenbrock(x):
    return float((1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2)


def box(dimension, low=-5.0, high=5.0):
    return np.full(dimension, low), np.full(dimension, high)


def signed_log(values):
    values = np.asarray(values, dtype=float)
    return np.sign(values) * np.log10(1.0 + np.abs(values))


def test_sphere_converges():
    lower, upper = box(5)
    config = SwarmConfig(lower, upper, particles=40, iterations=200, seed=1)
    result = pso_minimize(sphere, config)
    assert result.best_cost < 1e-6
    assert len(result.history) == 200
    assert all(b <= a for a, b in zip(result.history, result.history[1:]))


def test_identical_history_for_any_worker_count():
    lower, upper = box(3)
    runs = [
        pso_minimize(
            sphere, SwarmConfig(lower, upper, particles=12, iterations=25, workers=w)
        )
        for w in (1, 4)
    ]
    assert runs[0].history == runs[1].history
    assert np.array_equal(runs[0].best_position, runs[1].best_position)


def test_seed_changes_the_search():
    lower, upper = box(3)
    first = pso_minimize(sphere, SwarmConfig(lower, upper, iterations=5, seed=0))
    second = pso_minimize(sphere, SwarmConfig(lower, upper, iterations=5, seed=1))
    assert first.history != second.history


def test_positions_stay_in_bounds():
    lower, upper = np.array([1.0, -2.0]), np.array([2.0, -1.0])
    seen = []

    def cost(x):
        seen.append(x.copy())
        # optimum outside the box pulls particles against the walls
        return float(np.sum((x - 10.0) ** 2))

    result = pso_minimize(cost, SwarmConfig(lower, upper, particles=6, iterations=20))
    positions = np.array(seen)
    assert np.all(positions >= lower) and np.all(positions <= upper)
    assert result.best_cost == min(float(np.sum((p - 10.0) ** 2)) for p in seen)


def test_constant_and_non_finite_costs():
    lower, upper = box(2)
    flat = pso_minimize(lambda x: 3.0, SwarmConfig(lower, upper, iterations=5))
    assert flat.best_cost == 3.0

    def partly_nan(x):
        return np.nan if x[0] < 0 else sphere(x)

    result = pso_minimize(partly_nan, SwarmConfig(lower, upper, iterations=30))
    assert np.isfinite(result.best_cost)
    assert result.best_position[0] >= 0.0


@pytest.mark.parametrize(
    "overrides",
    [
        {"lower": np.array([1.0]), "upper": np.array([1.0])},
        {"lower": np.array([0.0, 0.0]), "upper": np.array([1.0])},
        {"lower": np.array([0.0]), "upper": np.array([np.inf])},
        {"particles": 1},
        {"iterations": 0},
        {"workers": 0},
    ],
)
def test_invalid_swarm_config(overrides):
    arguments = {"lower": np.array([0.0]), "upper": np.array([1.0]), **overrides}
    with pytest.raises(SwarmConfigError):
        SwarmConfig(**arguments)


def test_rosenbrock_converges_near_the_valley_floor():
    lower, upper = box(2, -2.0, 2.0)
    config = SwarmConfig(lower, upper, particles=60, iterations=500, seed=3)
    result = pso_minimize(rosenbrock, config)
    assert result.best_cost < 1e-3
    assert rosenbrock(result.best_position) == pytest.approx(result.best_cost)
    assert result.best_position == pytest.approx([1.0, 1.0], abs=0.1)


def test_initial_positions_seed_the_swarm():
    lower, upper = box(3)
    config = SwarmConfig(lower, upper, particles=5, iterations=3)
    result = pso_minimize(sphere, config, initial=[np.zeros(3)])
    assert result.history == [0.0, 0.0, 0.0]
    # outside the box the seed is clamped onto it
    clamped = pso_minimize(sphere, config, initial=[np.full(3, 9.0)])
    assert np.all(clamped.best_position <= upper)
    with pytest.raises(SwarmConfigError):
        pso_minimize(sphere, config, initial=[np.zeros(2)])
    with pytest.raises(SwarmConfigError):
        pso_minimize(sphere, config, initial=[np.zeros(3)] * 6)


def test_decode_and_encode():
    structure = ControllerStructure(1, 2)
    assert parameter_count(structure) == 6 + 4
    params = np.array(
        [0.0, 1.0, -1.0, 2.0, 0.5, 0.0, np.log10(3.0), 0.0, -np.log10(11.0), 1.0]
    )
    weights, controller = decode(params, structure)
    assert weights.as_vector() == pytest.approx([1.0, 10.0, 0.1, 100.0, 10**0.5, 1.0])
    assert controller.numerator == pytest.approx([2.0, 0.0])
    assert controller.denominator == pytest.approx([-10.0, 9.0])
    assert encode(weights, controller) == pytest.approx(params)
    with pytest.raises(DecodeError):
        decode(params[:-1], structure)
    with pytest.raises(DecodeError):
        ControllerStructure(2, 1)
    with pytest.raises(DecodeError):
        encode(WeightParams(K1=-1.0), controller)


def test_margin_cost_for_central_controller():
    structure = ControllerStructure(0, 1)
    params = encode(WeightParams(), FixedStructureController([10.756], [11.756]))
    cost = margin_cost(params, INTEGRATOR, paper_bounds(), structure)
    assert 0.62 <= cost.margin <= 0.7071
    assert cost.penalty >= 0.0
    assert cost.total == pytest.approx(-cost.margin + cost.penalty)


def test_margin_cost_penalizes_invalid_weights():
    structure = ControllerStructure(0, 1)
    params = encode(WeightParams(), FixedStructureController([1.0], [1.0]))
    params[1] = np.inf
    cost = margin_cost(params, INTEGRATOR, paper_bounds(), structure)
    assert cost.margin == 0.0
    assert cost.total == INVALID_WEIGHT_PENALTY


def test_destabilizing_candidate_costs_its_penalty():
    structure = ControllerStructure(0, 1)
    # positive feedback through -10 / (s + 1) around an integrator
    params = encode(WeightParams(), FixedStructureController([-10.0], [1.0]))
    cost = margin_cost(params, INTEGRATOR, paper_bounds(), structure)
    assert cost.margin == 0.0
    assert cost.total == cost.penalty >= 0.0


def test_margin_cost_penalties():
    structure = ControllerStructure(0, 1)
    controller = FixedStructureController([10.756], [11.756])
    params = encode(WeightParams(), controller)
    bounds = paper_bounds()
    free = margin_cost(
        params, INTEGRATOR, bounds, structure, NO_PENALTIES, RolloffSpec(False)
    )
    assert free.penalty == 0.0
    per_db = Penalties(1.0, 0.0, 0.0)
    charged = margin_cost(params, INTEGRATOR, bounds, structure, per_db)
    assert charged.penalty > 0.0
    assert charged.margin == pytest.approx(free.margin)

    # the bounds apply to the loop K P, and every point short of 95% costs one
    report = check_bounds(series(controller.to_tf(), INTEGRATOR), bounds)
    missing = max(0, 95 - int(np.count_nonzero(report.passed)))
    counted = margin_cost(params, INTEGRATOR, bounds, structure, Penalties(0.0, 0.0))
    assert counted.penalty == pytest.approx(float(missing))
    lenient = Penalties(0.0, 0.0, 1.0, compliance=0.0)
    assert margin_cost(params, INTEGRATOR, bounds, structure, lenient).penalty == 0.0


def test_search_box_follows_the_plant():
    plant = reference_plant()
    bounds = paper_bounds()
    structure = ControllerStructure(2, 2)
    lower, upper = search_box(plant, bounds, structure, SearchSpace(3.0, 6.0))
    assert lower.size == upper.size == parameter_count(structure)
    center = np.mean(np.log10(fit_target(plant, bounds)))
    assert (lower[0] + upper[0]) / 2.0 == pytest.approx(center)
    assert upper[0] - lower[0] == pytest.approx(6.0)
    assert (lower[3], upper[3]) == (-3.0, 3.0)
    for corner in (1, 2, 4, 5):
        assert lower[corner] == pytest.approx(-2.0)
        assert upper[corner] == pytest.approx(4.0)
    assert np.all(lower[6:] == -6.0) and np.all(upper[6:] == 6.0)


def test_small_design():
    plant = tf([1.0], [1.0, 1.0])
    structure = ControllerStructure(1, 1)
    lower = np.concatenate([np.full(6, np.log10(0.9)), signed_log([-0.5, -1.0, 0.5])])
    upper = np.concatenate([np.full(6, np.log10(1.1)), signed_log([0.5, 1.0, 5.0])])
    config = SwarmConfig(lower, upper, particles=16, iterations=15, seed=4, workers=2)
    outcome = design(
        plant,
        paper_bounds(),
        structure,
        config,
        NO_PENALTIES,
        RolloffSpec(enabled=False),
    )
    assert outcome.stabilizing
    assert outcome.margin > 0.4
    assert list(outcome.history.columns) == HISTORY_COLUMNS
    assert len(outcome.history) == 15
    costs = outcome.history["gbest_cost"].tolist()
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert outcome.history["gbest_margin"].iloc[-1] == pytest.approx(outcome.margin)

    # no controller beats the optimal margin of the shaped plant
    w1, w2 = make_weights(outcome.weights)
    b_opt = ncf(shape(plant, w1, w2).realization()).b_opt
    assert outcome.margin <= b_opt + 1e-6


def test_reference_plant_swarm_design():
    plant = reference_plant()
    bounds = paper_bounds()
    structure = ControllerStructure(2, 2)
    lower, upper = search_box(plant, bounds, structure)
    config = SwarmConfig(lower, upper, particles=20, iterations=30, seed=0, workers=4)
    outcome = design(plant, bounds, structure, config, warm_starts=8)
    assert outcome.stabilizing
    assert outcome.margin > 0.0
    assert outcome.bound_report.pass_fraction >= 0.95
    assert outcome.rolloff_ok
    w1, w2 = make_weights(outcome.weights)
    assert outcome.margin <= ncf(shape(plant, w1, w2).realization()).b_opt + 1e-6


def test_design_rejects_mismatched_dimension():
    config = SwarmConfig(*box(4), particles=4, iterations=1)
    with pytest.raises(SwarmConfigError):
        design(INTEGRATOR, paper_bounds(), ControllerStructure(1, 1), config)
