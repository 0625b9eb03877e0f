"""
Exception hierarchy for the simulator.

The CLI maps these onto exit codes: ConfigError and GeometryError give 1,
NumericalError gives 2.
"""

from typing import Optional


class HolesError(Exception):
    """Base class for all simulator errors"""


class ConfigError(HolesError, ValueError):
    """Bad, missing or unknown configuration"""


class GeometryError(HolesError, ValueError):
    """Domain partition or hole placement is infeasible"""

    def __init__(self, message: str, cell: Optional[int] = None):
        super().__init__(message)
        self.cell = cell


class NumericalError(HolesError, RuntimeError):
    """A numerical stage failed"""


class SingularSystemError(NumericalError):
    """Dense matrix is numerically singular"""

    def __init__(self, message: str, condition_estimate: float = float('inf')):
        super().__init__(f"{message} (condition estimate ~ {condition_estimate:.3e})")
        self.condition_estimate = condition_estimate


class SeriesConvergenceError(NumericalError):
    """Partial-wave series did not converge at the requested order"""

    def __init__(self, message: str, suggested_order: int):
        super().__init__(f"{message}; try max_order >= {suggested_order}")
        self.suggested_order = suggested_order


class BoundViolationError(NumericalError):
    """An a-priori bound that should hold was violated numerically"""
