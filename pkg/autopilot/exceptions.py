from typing import List, Optional, Tuple


class AutopilotError(Exception):
    """Root of every error raised by the toolkit."""


class ConfigError(AutopilotError):
    def __init__(
        self, message: str, diagnostics: Optional[List[Tuple[str, str]]] = None
    ):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class LtiError(AutopilotError):
    pass


class ImproperTransferFunctionError(LtiError):
    pass


class AlgebraicLoopError(LtiError):
    pass


class DimensionError(LtiError):
    pass


class SynthesisError(AutopilotError):
    pass


class RiccatiError(SynthesisError):
    def __init__(self, message: str, mode: str):
        super().__init__(f"{message} [{mode}]")
        self.mode = mode


class GammaTooSmallError(SynthesisError):
    pass


class VgapError(AutopilotError):
    pass


class WeightError(AutopilotError):
    def __init__(self, parameter: str, message: str):
        super().__init__(f"{parameter}: {message}")
        self.parameter = parameter


class FitError(AutopilotError):
    pass


class SwarmConfigError(AutopilotError):
    pass


class DecodeError(AutopilotError):
    pass


class SteadyStateError(AutopilotError):
    pass
