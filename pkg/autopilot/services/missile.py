"""Linearized pitch-axis plant family of a skid-to-turn missile.

Symbols follow the usual body-axis convention: Q is dynamic pressure, S the
reference area, D the reference length, V and U the speeds. The pitch rate is
called ``q_rate`` wherever it could be confused with Q.
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from autopilot.constants import REFERENCE_PLANT_GAIN
from autopilot.exceptions import ConfigError
from autopilot.logger import logger
from autopilot.services.lti import (
    Polynomial,
    RationalTransferFunction,
    feedback_unity,
    series,
)
from autopilot.utils.validations import collect_schema_errors


@dataclass(frozen=True)
class ActuatorParams:
    omega_n: float = 200.0
    zeta: float = 0.7

    def __post_init__(self):
        if not self.omega_n > 0:
            raise ConfigError(f"actuator.omega_n must be positive, got {self.omega_n}")
        if not self.zeta > 0:
            raise ConfigError(f"actuator.zeta must be positive, got {self.zeta}")


@dataclass(frozen=True)
class AeroCoefficients:
    C_y_beta: float = 0.0
    C_y_delta_r: float = 0.0
    C_y_r: float = 0.0
    C_z_alpha: float = 0.0
    C_z_delta_e: float = 0.0
    C_z_q: float = 0.0
    C_l_delta_a: float = 0.0
    C_l_p: float = 0.0
    C_m_alpha: float = 0.0
    C_m_delta_e: float = 0.0
    C_m_q: float = 0.0
    C_n_beta: float = 0.0
    C_n_delta_r: float = 0.0
    C_n_r: float = 0.0


@dataclass(frozen=True)
class OperatingPoint:
    id: str
    Q: float
    S: float
    D: float
    m: float
    I_x: float
    I_y: float
    I_z: float
    U: float
    V: float
    coefficients: AeroCoefficients
    altitude: Optional[float] = None
    mach: Optional[float] = None

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "OperatingPoint":
        fields = dict(raw)
        fields["coefficients"] = AeroCoefficients(**dict(raw["coefficients"]))
        return cls(**fields)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DimensionalDerivatives:
    L_delta_a: float
    Z_q: float
    L_p: float
    M_delta: float
    Z_delta: float
    M_alpha: float
    Z_alpha: float
    M_q: float


@dataclass(frozen=True)
class AeroState:
    """Small-perturbation state the force and moment expressions are evaluated at."""

    alpha: float = 0.0
    beta: float = 0.0
    delta_a: float = 0.0
    delta_e: float = 0.0
    delta_r: float = 0.0
    p_rate: float = 0.0
    q_rate: float = 0.0
    r_rate: float = 0.0


def actuator_tf(p: ActuatorParams) -> RationalTransferFunction:
    w2 = p.omega_n**2
    return RationalTransferFunction.from_coefficients(
        [w2], [1.0, 2.0 * p.zeta * p.omega_n, w2]
    )


def dimensional_derivatives(op: OperatingPoint) -> DimensionalDerivatives:
    c = op.coefficients
    QS = op.Q * op.S
    QSD = QS * op.D
    return DimensionalDerivatives(
        L_delta_a=QSD * c.C_l_delta_a,
        Z_q=QSD * c.C_z_q / op.m,
        L_p=QSD * c.C_l_p * (op.D / (2.0 * op.V)),
        M_delta=QSD * c.C_m_delta_e / op.I_y,
        Z_delta=QS * c.C_z_delta_e / op.m,
        M_alpha=QSD * c.C_m_alpha / op.I_y,
        Z_alpha=QS * c.C_z_alpha / op.m,
        M_q=QSD * op.D * c.C_m_q / (op.I_y * op.V),
    )


def _short_period_denominator(d: DimensionalDerivatives, V: float) -> Polynomial:
    return Polynomial(
        [
            1.0,
            -(d.M_q + d.Z_alpha / V),
            (d.Z_alpha * d.M_q - d.M_alpha * d.Z_q) / V - d.M_alpha,
        ]
    )


def pitch_rate_tf(d: DimensionalDerivatives, V: float) -> RationalTransferFunction:
    """q / delta_e."""
    numerator = Polynomial([d.M_delta, d.Z_delta * d.M_alpha - d.Z_alpha * d.M_delta])
    return RationalTransferFunction(numerator, _short_period_denominator(d, V))


def accel_per_pitch_rate_tf(
    d: DimensionalDerivatives, V: float
) -> RationalTransferFunction:
    """a_z / q."""
    numerator = Polynomial(
        [
            d.Z_delta,
            d.M_delta * d.Z_q - d.Z_delta * d.M_q,
            d.Z_alpha * d.M_delta - d.Z_delta * d.M_alpha,
        ]
    )
    return RationalTransferFunction(numerator, _short_period_denominator(d, V))


def roll_tf(d: DimensionalDerivatives, I_x: float) -> RationalTransferFunction:
    """p / delta_a."""
    if not I_x > 0:
        raise ConfigError(f"I_x must be positive, got {I_x}")
    return RationalTransferFunction.from_coefficients([d.L_delta_a], [I_x, -d.L_p])


def aero_forces(op: OperatingPoint, state: AeroState) -> Dict[str, float]:
    """Aerodynamic forces and moments; the x force is zero."""
    c = op.coefficients
    QS = op.Q * op.S
    QSD = QS * op.D
    rate_u = op.D / (2.0 * op.U) if op.U else 0.0
    rate_v = op.D / (2.0 * op.V)
    return {
        "X": 0.0,
        "Y": QS
        * (
            c.C_y_beta * state.beta
            + c.C_y_delta_r * state.delta_r
            + c.C_y_r * rate_u * state.r_rate
        ),
        "Z": QS
        * (
            c.C_z_alpha * state.alpha
            + c.C_z_delta_e * state.delta_e
            + c.C_z_q * rate_u * state.q_rate
        ),
        "L": QSD * (c.C_l_delta_a * state.delta_a + c.C_l_p * rate_v * state.p_rate),
        "M": QSD
        * (
            c.C_m_alpha * state.alpha
            + c.C_m_delta_e * state.delta_e
            + c.C_m_q * rate_u * state.q_rate
        ),
        "N": QSD
        * (
            c.C_n_beta * state.beta
            + c.C_n_delta_r * state.delta_r
            + c.C_n_r * rate_u * state.r_rate
        ),
    }


def open_loop_plant(
    op: OperatingPoint, actuator: ActuatorParams, k_q: float
) -> RationalTransferFunction:
    """a_z / command through the pitch-rate inner loop closed with gain k_q."""
    d = dimensional_derivatives(op)
    inner_forward = series(k_q, series(actuator_tf(actuator), pitch_rate_tf(d, op.V)))
    return series(feedback_unity(inner_forward), accel_per_pitch_rate_tf(d, op.V))


def reference_plant(
    gain: float = REFERENCE_PLANT_GAIN,
) -> RationalTransferFunction:
    """863878246(s-30)(s+25)/((s+121)(s+3)(s^2+20s+7933)) with an overridable gain."""
    numerator = Polynomial(gain * np.polymul([1.0, -30.0], [1.0, 25.0]))
    denominator = Polynomial(
        np.polymul(np.polymul([1.0, 121.0], [1.0, 3.0]), [1.0, 20.0, 7933.0])
    )
    return RationalTransferFunction(numerator, denominator)


def load_envelope(source) -> List[OperatingPoint]:
    """Validated operating points from a config document or a list of point dicts."""
    if isinstance(source, Mapping):
        section = source.get("envelope", source)
        raw_points = section.get("operating_points", [])
    else:
        raw_points = source
    raw_points = [p.toDict() if hasattr(p, "toDict") else dict(p) for p in raw_points]
    if len(raw_points) == 0:
        raise ConfigError(
            "envelope must contain >= 1 point",
            [("envelope.operating_points", "envelope must contain >= 1 point")],
        )
    diagnostics = []
    seen = {}
    for index, raw in enumerate(raw_points):
        location = f"envelope.operating_points.{index}"
        diagnostics.extend(collect_schema_errors(raw, "operating_point", location))
        point_id = raw.get("id")
        if point_id in seen:
            diagnostics.append(
                (
                    f"{location}.id",
                    f"duplicate id '{point_id}' (first at index {seen[point_id]})",
                )
            )
        else:
            seen[point_id] = index
    if diagnostics:
        raise ConfigError("Invalid flight envelope", diagnostics)
    points = [OperatingPoint.from_dict(raw) for raw in raw_points]
    logger.debug(f"Loaded {len(points)} operating point(s)")
    return points
