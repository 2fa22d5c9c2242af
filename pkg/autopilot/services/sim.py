"""Closed-loop step simulation and step-response metrics."""
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy import linalg, signal

from autopilot.constants import TABLE1_THRESHOLDS
from autopilot.exceptions import DimensionError, SteadyStateError
from autopilot.logger import logger
from autopilot.services.lti import StateSpaceSystem
from autopilot.services.synthesis import SystemLike, as_system, four_block

SETTLING_BAND = 0.02
FINAL_WINDOW = 0.1
TIME_SERIES_COLUMNS = ["t", "y_ref", "y_out", "u", "u_rate"]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise DimensionError("A time series needs at least two samples")
        if y.shape[0] != t.size:
            raise DimensionError(f"{y.shape[0]} value(s) for {t.size} time sample(s)")
        steps = np.diff(t)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6):
            raise DimensionError("Time samples must be strictly increasing and uniform")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def channel(self, index: int) -> "TimeSeries":
        return TimeSeries(self.t, self.y[:, index])


@dataclass(frozen=True)
class StepMetrics:
    overshoot_time: float
    overshoot: float
    steady_state_error: float
    max_rate: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def discretize(sys: StateSpaceSystem, dt: float):
    """Zero-order-hold (Ad, Bd) from the exponential of the augmented matrix."""
    n, m = sys.n_states, sys.n_inputs
    augmented = np.zeros((n + m, n + m))
    augmented[:n, :n] = sys.A
    augmented[:n, n:] = sys.B
    exponential = linalg.expm(augmented * dt)
    if not np.all(np.isfinite(exponential)):
        raise ArithmeticError(f"Matrix exponential overflowed at dt={dt}")
    return exponential[:n, :n], exponential[:n, n:]


def step_response(sys: SystemLike, t_final: float, dt: float) -> TimeSeries:
    """Unit-step response from t = 0; one column per output for non-SISO systems."""
    sys = as_system(sys)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if sys.n_inputs != 1:
        raise DimensionError(f"Step input needs a single input, got {sys.n_inputs}")
    samples = int(round(t_final / dt)) + 1
    t = np.arange(samples) * dt
    if sys.n_states == 0:
        y = np.tile(sys.D[:, 0], (samples, 1))
    else:
        fastest = float(np.max(np.abs(sys.poles())))
        if fastest * dt > 0.1:
            logger.debug(f"dt={dt} is coarse next to |pole|max={fastest:.4g}")
        Ad, Bd = discretize(sys, dt)
        _, y, _ = signal.dlsim((Ad, Bd, sys.C, sys.D, dt), np.ones(samples))
        y = np.asarray(y).reshape(samples, sys.n_outputs)
    return TimeSeries(t, y[:, 0] if sys.n_outputs == 1 else y)


def closed_loop(
    plant: SystemLike, controller: SystemLike, channels: bool = False
) -> StateSpaceSystem:
    """Reference to output of u = K (r - y), y = P u.

    With ``channels`` the outputs are ``y``, ``u`` and the rate of ``u``.
    """
    loop = four_block(plant, controller).input([0])
    if loop.n_outputs != 2:
        raise DimensionError("Closed-loop simulation supports single-input plants only")
    Ce, De = loop.C[:1], loop.D[:1]
    Cu, Du = loop.C[1:], loop.D[1:]
    C_out, D_out = -Ce, 1.0 - De
    if not channels:
        return StateSpaceSystem(loop.A, loop.B, C_out, D_out)
    return StateSpaceSystem(
        loop.A,
        loop.B,
        np.vstack([C_out, Cu, Cu @ loop.A]),
        np.vstack([D_out, Du, Cu @ loop.B]),
    )


def compute_metrics(
    ts: TimeSeries, reference: float, control: Optional[TimeSeries] = None
) -> StepMetrics:
    """Overshoot, its time, steady-state error and the peak rate of ``control``.

    The rate falls back to ``ts`` itself when no control series is given.
    """
    if reference == 0:
        raise ValueError("reference must be nonzero")
    y = np.asarray(ts.y, dtype=float)
    if y.ndim != 1:
        raise DimensionError("Metrics need a single-output series")
    window = max(1, int(np.ceil(FINAL_WINDOW * y.size)))
    tail = y[-window:]
    y_final = float(np.mean(tail))
    if np.max(np.abs(tail - y_final)) > SETTLING_BAND * abs(y_final):
        raise SteadyStateError("steady state not reached")

    direction = np.sign(y_final) or np.sign(reference)
    peak = int(np.argmax(direction * y))
    overshoot = max(0.0, direction * (y[peak] - y_final) / abs(reference))
    # a peak inside the averaging window is the final approach, not an overshoot
    if peak >= y.size - window:
        overshoot = 0.0
    if overshoot == 0.0:
        # monotone approach: the peak is reached on entering the settling band
        inside = np.abs(y - y_final) <= SETTLING_BAND * abs(y_final)
        peak = int(np.argmax(inside))
    rate_source = ts if control is None else control
    rates = np.abs(np.diff(rate_source.y)) / np.diff(rate_source.t)
    return StepMetrics(
        overshoot_time=float(ts.t[peak]),
        overshoot=float(overshoot),
        steady_state_error=abs(reference - y_final) / abs(reference),
        max_rate=float(np.max(rates)),
    )


def table1_check(metrics: StepMetrics) -> Dict[str, bool]:
    return {
        name: bool(getattr(metrics, name) <= limit)
        for name, limit in TABLE1_THRESHOLDS.items()
    }


@dataclass(frozen=True, eq=False)
class SimulationRun:
    frame: pd.DataFrame
    metrics: Optional[StepMetrics]
    settled: bool


def simulate_closed_loop(
    plant: SystemLike,
    controller: SystemLike,
    t_final: float,
    dt: float,
    reference: float = 1.0,
) -> SimulationRun:
    """Step of amplitude ``reference``; an unsettled response keeps its series."""
    response = step_response(closed_loop(plant, controller, channels=True), t_final, dt)
    values = reference * response.y
    frame = pd.DataFrame(
        {
            "t": response.t,
            "y_ref": np.full(response.t.size, float(reference)),
            "y_out": values[:, 0],
            "u": values[:, 1],
            "u_rate": values[:, 2],
        },
        columns=TIME_SERIES_COLUMNS,
    )
    channels = TimeSeries(response.t, values)
    try:
        metrics = compute_metrics(
            channels.channel(0), reference, control=channels.channel(1)
        )
    except SteadyStateError:
        return SimulationRun(frame, None, settled=False)
    return SimulationRun(frame, metrics, settled=True)
