"""
Error hierarchy shared by every estimation, table and ingestion stage
"""

from typing import Any, Optional


class PredictabilityError(Exception):
    """Base class for all errors raised by the package"""

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        base = super().__str__()
        return f"[{self.stage}] {base}" if self.stage else base


class DomainError(PredictabilityError, ValueError):
    """Argument outside the mathematical domain of an operation"""


class AlignmentError(PredictabilityError):
    """Response and predictor cannot be aligned"""


class SampleTooSmallError(PredictabilityError):
    """Sample is below the estimation floor"""


class RankDeficiencyError(PredictabilityError):
    """Design matrix does not have full column rank"""


class ConvergenceError(PredictabilityError):
    """Iterative solver hit its iteration cap"""

    def __init__(self, message: str, best_iterate: Any = None, stage: Optional[str] = None):
        super().__init__(message, stage)
        self.best_iterate = best_iterate


class DegenerateSampleError(PredictabilityError):
    """Sample has no dispersion"""


class PrewhiteningError(PredictabilityError):
    """Recoloring matrix of a prewhitening filter is singular"""


class SandwichError(PredictabilityError):
    """Bread matrix of a sandwich covariance is singular"""


class DegenerateSEError(PredictabilityError):
    """Standard error collapses to zero"""


class TableError(PredictabilityError):
    """Critical-value table is missing, malformed or lacks a requested entry"""


class CalibrationError(PredictabilityError):
    """No first-stage level satisfies the size constraint"""


class ConfigError(PredictabilityError):
    """Configuration file or command-line settings are invalid"""


class IngestError(PredictabilityError):
    """Input data file cannot be turned into a sample"""


class ColumnError(IngestError):
    """Required column absent"""


class GapError(IngestError):
    """Missing value or calendar gap inside the sample span"""


class ParseError(IngestError):
    """Cell cannot be parsed as a number"""
