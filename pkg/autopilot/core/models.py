from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from autopilot.constants import SCHEMA_VERSION
from autopilot.core.config import settings
from autopilot.services.lti import (
    RationalTransferFunction,
    StateSpaceSystem,
    factored_form,
)


class ReportHeader(BaseModel):
    schema_version: str = SCHEMA_VERSION
    tool: str = settings.tool_name
    tool_version: str = settings.tool_version
    config_hash: str
    seed: int


class TransferFunctionRecord(BaseModel):
    numerator: List[float]
    denominator: List[float]
    factored: str

    @classmethod
    def from_tf(cls, g: RationalTransferFunction) -> "TransferFunctionRecord":
        return cls(
            numerator=[float(c) for c in g.numerator.coefficients],
            denominator=[float(c) for c in g.denominator.coefficients],
            factored=factored_form(g),
        )

    def to_tf(self) -> RationalTransferFunction:
        return RationalTransferFunction.from_coefficients(
            self.numerator, self.denominator
        )


class StateSpaceRecord(BaseModel):
    A: List[List[float]]
    B: List[List[float]]
    C: List[List[float]]
    D: List[List[float]]

    @classmethod
    def from_system(cls, sys: StateSpaceSystem) -> "StateSpaceRecord":
        return cls(
            A=sys.A.tolist(), B=sys.B.tolist(), C=sys.C.tolist(), D=sys.D.tolist()
        )

    def to_system(self) -> StateSpaceSystem:
        n = len(self.A)
        m = np.atleast_2d(self.D).shape[1]
        p = len(self.D)
        return StateSpaceSystem(
            np.reshape(self.A, (n, n)) if n else np.zeros((0, 0)),
            np.reshape(self.B, (n, m)) if n else np.zeros((0, m)),
            np.reshape(self.C, (p, n)) if n else np.zeros((p, 0)),
            self.D,
        )


class PlantRecord(ReportHeader):
    id: str
    transfer_function: TransferFunctionRecord
    poles: List[List[float]]
    zeros: List[List[float]]
    stable: bool
    minimum_phase: bool
    dc_gain: Optional[float] = None


class VgapMatrixRecord(BaseModel):
    ids: List[str]
    values: List[List[float]]
    winding_ok: List[List[bool]]
    argmax_omega: List[List[Optional[float]]]


class EnvelopeReport(ReportHeader):
    ids: List[str]
    nominal_id: str
    nominal_index: int
    r_star: float
    ranking: List[str]
    row_max: List[float]
    winding_failures: List[List[str]]
    vgap: VgapMatrixRecord


class BoundCompliance(BaseModel):
    aggregate_pass: bool
    pass_fraction: float
    worst_violation_db: Optional[float] = None
    rolloff_pass: bool


class MarginRecord(BaseModel):
    plant_id: str
    b_opt: float
    b_achieved: float
    gamma: Optional[float] = None


class NominalAttempt(BaseModel):
    plant_id: str
    raw_r_star: float
    shaped_r_star: float
    b_achieved: float
    certified: bool


class PointVerdict(BaseModel):
    plant_id: str
    shaped_gap: float
    winding_ok: bool
    stable: bool


class DesignReport(ReportHeader):
    mode: str
    status: str
    stabilizing: bool
    nominal_id: str
    r_star: float
    shaped_r_star: float
    margin: MarginRecord
    bound_compliance: BoundCompliance
    envelope_certified: bool
    attempts: List[NominalAttempt]
    points: List[PointVerdict]
    weights: Dict[str, float] = {}


class ControllerRecord(ReportHeader):
    mode: str
    nominal_id: str
    gamma: Optional[float] = None
    w1: TransferFunctionRecord
    w2: TransferFunctionRecord
    core: StateSpaceRecord
    final: StateSpaceRecord
    fixed_structure: Optional[TransferFunctionRecord] = None


class VerifyReport(ReportHeader):
    verdict: str
    nominal_id: str
    b_achieved: float
    raw_r_star: float
    shaped_r_star: float
    certificate: bool
    all_stable: bool
    points: List[PointVerdict]
    disagreements: List[str]


class StepMetricsRecord(BaseModel):
    overshoot_time: float
    overshoot: float
    steady_state_error: float
    max_rate: float


class PointSimulation(BaseModel):
    plant_id: str
    settled: bool
    metrics: Optional[StepMetricsRecord] = None
    table1: Optional[Dict[str, bool]] = None


class SimulationReport(ReportHeader):
    t_final: float
    dt: float
    reference: float
    points: List[PointSimulation]
