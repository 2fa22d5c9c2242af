from pydantic import BaseModel

from autopilot import __version__


class Settings(BaseModel):
    tool_name: str = "autopilot"
    tool_version: str = __version__
    # pole/zero pairs closer than this (relative to max(1, |p|)) are cancelled
    cancellation_tol: float = 1e-7
    # closed loops need every pole real part below this
    stability_threshold: float = -1e-9
    # roots or evaluation points this close to the imaginary axis count as on it
    axis_tol: float = 1e-9
    hinf_rtol: float = 1e-6
    hinf_max_iter: int = 200
    care_residual_rtol: float = 1e-8
    vgap_tol: float = 1e-6
    default_gamma_factor: float = 1.05


settings = Settings()
