"""
Time-series containers and the t / t-1 alignment used by every estimator
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import AlignmentError, DomainError, SampleTooSmallError

MIN_T = 20


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Finite observations of one variable"""

    values: np.ndarray
    label: str = ""
    period: Optional[int] = None

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.ndim != 1:
            raise DomainError(f"{self.label or 'series'} must be one-dimensional")
        if arr.size < 2:
            raise SampleTooSmallError(f"{self.label or 'series'} needs at least 2 observations")
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"{self.label or 'series'} contains non-finite values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class PredictiveDataset:
    """Response y_t aligned with the lagged predictor x_{t-1} and the level x_t"""

    y: np.ndarray
    x_lag: np.ndarray
    x_level: np.ndarray
    label: str = ""
    enforce_floor: bool = field(default=True, repr=False)

    def __post_init__(self):
        y, x_lag, x_level = _frozen(self.y), _frozen(self.x_lag), _frozen(self.x_level)
        if not (y.size == x_lag.size == x_level.size):
            raise AlignmentError("y, x_lag and x_level must have equal length")
        if not np.array_equal(x_lag[1:], x_level[:-1]):
            raise AlignmentError("x_lag[t] must equal x_level[t-1]")
        if self.enforce_floor and y.size < MIN_T:
            raise SampleTooSmallError(f"T={y.size} is below the estimation floor {MIN_T}")
        for arr in (y, x_lag, x_level):
            if not np.all(np.isfinite(arr)):
                raise DomainError("dataset contains non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x_lag", x_lag)
        object.__setattr__(self, "x_level", x_level)

    @property
    def T(self) -> int:
        return self.y.size

    def design(self) -> np.ndarray:
        """Regressor matrix with rows z_{t-1} = (1, x_{t-1})'"""
        return np.column_stack([np.ones(self.T), self.x_lag])

    def predictor_path(self) -> np.ndarray:
        """Full predictor path x_0, ..., x_T (re-interleaves x_lag and x_level)"""
        return np.concatenate([self.x_lag[:1], self.x_level])

    def scaled(self, y_scale: float = 1.0, y_shift: float = 0.0, x_scale: float = 1.0) -> "PredictiveDataset":
        """Affine copy, used for equivariance checks"""
        return PredictiveDataset(
            y=self.y * y_scale + y_shift,
            x_lag=self.x_lag * x_scale,
            x_level=self.x_level * x_scale,
            label=self.label,
            enforce_floor=self.enforce_floor,
        )


def align_predictive(y: TimeSeries, x: TimeSeries, enforce_floor: bool = True) -> PredictiveDataset:
    """Pair y_t with x_{t-1}: T = L - 1 observations"""
    if len(y) != len(x):
        raise AlignmentError(f"length mismatch: y has {len(y)} observations, x has {len(x)}", stage="align")
    if y.period is not None and x.period is not None and y.period != x.period:
        raise AlignmentError(f"period mismatch: y starts at {y.period}, x at {x.period}", stage="align")
    if enforce_floor and len(y) < MIN_T + 1:
        raise SampleTooSmallError(f"need at least {MIN_T + 1} observations, got {len(y)}", stage="align")

    return PredictiveDataset(
        y=y.values[1:],
        x_lag=x.values[:-1],
        x_level=x.values[1:],
        label=f"{y.label}~{x.label}",
        enforce_floor=enforce_floor,
    )


def demean(s: Sequence[float]) -> np.ndarray:
    """Subtract the sample mean"""
    arr = np.asarray(s, dtype=float)
    if arr.size == 0:
        raise DomainError("cannot demean an empty sequence")
    if not np.all(np.isfinite(arr)):
        raise DomainError("cannot demean a non-finite sequence")
    return arr - arr.mean()
