import numpy as np
import pytest

from autopilot.exceptions import DimensionError, SteadyStateError
from autopilot.services.lti import (
    RationalTransferFunction,
    StateSpaceSystem,
    ss_to_tf,
)
from autopilot.services.sim import (
    TIME_SERIES_COLUMNS,
    StepMetrics,
    TimeSeries,
    closed_loop,
    compute_metrics,
    simulate_closed_loop,
    step_response,
    table1_check,
)
from tests.utils import random_stable_system

tf = RationalTransferFunction.from_coefficients
INTEGRATOR = tf([1.0], [1.0, 0.0])
DAMPED = tf([1.0], [1.0, 1.0, 1.0])


def test_first_order_step():
    response = step_response(tf([1.0], [1.0, 1.0]), 5.0, 1e-3)
    assert response.t.size == 5001
    assert response.t[0] == 0.0
    assert response.y[0] == 0.0
    assert response.y[1000] == pytest.approx(1.0 - np.exp(-1.0), abs=1e-6)


def test_integrator_step_is_exact():
    response = step_response(INTEGRATOR, 2.0, 1e-2)
    assert response.y == pytest.approx(response.t, abs=1e-9)


def test_static_gain_step():
    response = step_response(2.0, 1.0, 0.1)
    assert response.t.size == 11
    assert np.all(response.y == 2.0)


def test_step_requires_single_input():
    two_inputs = StateSpaceSystem(
        -np.eye(1), np.ones((1, 2)), np.ones((1, 1)), [[0, 0]]
    )
    with pytest.raises(DimensionError):
        step_response(two_inputs, 1.0, 0.1)
    with pytest.raises(ValueError):
        step_response(INTEGRATOR, 1.0, 0.0)


def test_second_order_metrics():
    response = step_response(DAMPED, 20.0, 1e-3)
    metrics = compute_metrics(response, 1.0)
    assert metrics.overshoot == pytest.approx(0.16303, rel=5e-3)
    assert metrics.overshoot_time == pytest.approx(3.6276, rel=5e-3)
    assert metrics.steady_state_error < 1e-3


def test_metrics_without_overshoot():
    response = step_response(tf([1.0], [1.0, 1.0]), 12.0, 1e-3)
    metrics = compute_metrics(response, 1.0)
    assert metrics.overshoot == 0.0
    # 1 - exp(-t) enters the 2% band at ln 50
    assert metrics.overshoot_time == pytest.approx(np.log(50.0), abs=5e-3)
    assert metrics.steady_state_error < 1e-4
    assert metrics.max_rate == pytest.approx(1.0, rel=1e-3)


def test_metrics_follow_negative_references():
    response = step_response(DAMPED, 20.0, 1e-3)
    flipped = TimeSeries(response.t, -2.0 * response.y)
    metrics = compute_metrics(flipped, -2.0)
    assert metrics.overshoot == pytest.approx(0.16303, rel=5e-3)


def test_metrics_errors():
    with pytest.raises(SteadyStateError, match="steady state not reached"):
        compute_metrics(step_response(INTEGRATOR, 5.0, 1e-2), 1.0)
    settled = step_response(tf([1.0], [1.0, 1.0]), 12.0, 1e-2)
    with pytest.raises(ValueError):
        compute_metrics(settled, 0.0)


def test_time_series_validation():
    with pytest.raises(DimensionError):
        TimeSeries([0.0, 0.1, 0.3], [1.0, 2.0, 3.0])
    with pytest.raises(DimensionError):
        TimeSeries([0.0, 0.1], [1.0])
    series = TimeSeries([0.0, 0.5, 1.0], np.arange(6.0).reshape(3, 2))
    assert series.dt == 0.5
    assert series.channel(1).y.tolist() == [1.0, 3.0, 5.0]


def test_closed_loop_of_integrator():
    loop = closed_loop(INTEGRATOR, 1.0)
    response = step_response(loop, 5.0, 1e-3)
    assert response.y[1000] == pytest.approx(1.0 - np.exp(-1.0), abs=1e-6)
    channels = closed_loop(INTEGRATOR, 1.0, channels=True)
    assert channels.n_outputs == 3


def test_simulate_closed_loop():
    run = simulate_closed_loop(INTEGRATOR, 1.0, 10.0, 1e-3, reference=2.0)
    assert run.settled
    assert list(run.frame.columns) == TIME_SERIES_COLUMNS
    assert run.frame["y_ref"].eq(2.0).all()
    # u = 2 exp(-t): the control starts at the reference and decays
    assert run.frame["u"].iloc[0] == pytest.approx(2.0)
    assert run.frame["u_rate"].iloc[1] == pytest.approx(-2.0, rel=1e-2)
    assert run.metrics.overshoot == 0.0
    assert run.metrics.steady_state_error < 1e-3
    assert run.metrics.max_rate == pytest.approx(2.0, rel=1e-2)


def test_unsettled_simulation_keeps_the_series():
    unstable = tf([1.0], [1.0, -1.0])
    run = simulate_closed_loop(unstable, 0.5, 2.0, 1e-2)
    assert not run.settled
    assert run.metrics is None
    assert len(run.frame) == 201


def test_halving_the_step_barely_moves_metrics():
    coarse = compute_metrics(step_response(DAMPED, 20.0, 2e-3), 1.0)
    fine = compute_metrics(step_response(DAMPED, 20.0, 1e-3), 1.0)
    assert fine.overshoot == pytest.approx(coarse.overshoot, rel=1e-2)
    assert fine.overshoot_time == pytest.approx(coarse.overshoot_time, rel=1e-2)


def test_table1_check():
    passing = StepMetrics(
        overshoot_time=0.5, overshoot=0.05, steady_state_error=0.01, max_rate=3.0
    )
    assert table1_check(passing) == {
        "overshoot": True,
        "steady_state_error": True,
        "overshoot_time": True,
    }
    failing = StepMetrics(
        overshoot_time=1.5, overshoot=0.2, steady_state_error=0.01, max_rate=3.0
    )
    assert table1_check(failing) == {
        "overshoot": False,
        "steady_state_error": True,
        "overshoot_time": False,
    }


def test_slow_monotone_response_fails_the_timing_check():
    slow = step_response(tf([0.5], [1.0, 0.5]), 40.0, 1e-2)
    metrics = compute_metrics(slow, 1.0)
    assert metrics.overshoot == 0.0
    assert metrics.overshoot_time == pytest.approx(2.0 * np.log(50.0), abs=2e-2)
    assert table1_check(metrics) == {
        "overshoot": True,
        "steady_state_error": True,
        "overshoot_time": False,
    }


def test_step_settles_on_the_dc_gain():
    rng = np.random.default_rng(41)
    for _ in range(10):
        sys = random_stable_system(rng, int(rng.integers(1, 5)))
        slowest = float(np.min(-sys.poles().real))
        response = step_response(sys, 30.0 / slowest, 1e-2 / slowest)
        dc = ss_to_tf(sys).dc_gain()
        assert response.y[-1] == pytest.approx(dc, rel=1e-6, abs=1e-6)


def test_closed_loop_dc_gain():
    plant = tf([2.0], [1.0, 3.0, 2.0])
    controller = tf([4.0], [1.0, 5.0])
    expected = 0.8 / 1.8
    loop = closed_loop(plant, controller)
    assert ss_to_tf(loop).dc_gain() == pytest.approx(expected, rel=1e-9)
    response = step_response(loop, 40.0, 1e-3)
    assert response.y[-1] == pytest.approx(expected, rel=1e-6)
