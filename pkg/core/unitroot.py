"""
GLS-ADF (DF-GLS) unit-root statistic and its inversion into a confidence
interval for the local-to-unity parameter c
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from arch.unitroot import DFGLS
from arch.utility.exceptions import InfeasibleTestException

from .exceptions import DomainError, SampleTooSmallError
from .series import TimeSeries

logger = logging.getLogger(__name__)

# intercept-only GLS demeaning constant
C_BAR = -7.0
MIN_LENGTH = 30


@dataclass(frozen=True)
class DfGlsResult:
    t_stat: float
    phi_hat: float
    lags: int
    T: int
    # ADF-regression residuals and the x-index of each residual
    residuals: np.ndarray = field(default=None, repr=False)
    residual_index: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class LocalToUnityCI:
    c_lower: float
    c_upper: float
    alpha1: float
    source_table: str = ""
    clamped_lower: bool = False
    clamped_upper: bool = False

    def __post_init__(self):
        if self.c_lower > self.c_upper:
            raise DomainError(f"empty interval [{self.c_lower}, {self.c_upper}]")

    @property
    def degenerate(self) -> bool:
        return self.c_lower == self.c_upper

    def phi_bounds(self, T: int) -> Tuple[float, float]:
        """(1 + c_lower / T, 1 + c_upper / T)"""
        return 1.0 + self.c_lower / T, 1.0 + self.c_upper / T


def default_max_lags(T: int) -> int:
    """floor(12 (T / 100)^(1/4))"""
    return int(np.floor(12.0 * (T / 100.0) ** 0.25))


def gls_demean(x: np.ndarray, c_bar: float = C_BAR) -> np.ndarray:
    """Remove the quasi-differenced GLS estimate of the mean"""
    T = x.shape[-1]
    alpha = 1.0 + c_bar / T
    zd = np.concatenate([[1.0], np.full(T - 1, 1.0 - alpha)])
    first = x[..., :1]
    yd = np.concatenate([first, x[..., 1:] - alpha * x[..., :-1]], axis=-1)
    beta = yd @ zd / (zd @ zd)
    return x - np.expand_dims(beta, -1)


def dfgls(x: Union[TimeSeries, np.ndarray], max_lags: Optional[int] = None) -> DfGlsResult:
    """DF-GLS t-statistic with BIC lag choice over 0..max_lags"""
    values = x.values if isinstance(x, TimeSeries) else np.asarray(x, dtype=float)
    T = values.size
    if T < MIN_LENGTH:
        raise SampleTooSmallError(f"DF-GLS needs {MIN_LENGTH} observations, got {T}", stage="dfgls")
    max_lags = default_max_lags(T) if max_lags is None else int(max_lags)
    max_lags = max(0, min(max_lags, (T - 1) // 3))

    try:
        if max_lags == 0:
            test = DFGLS(values, lags=0, trend="c")
        else:
            test = DFGLS(values, trend="c", max_lags=max_lags, method="bic")
        t_stat = float(test.stat)
        regression = test.regression
    except InfeasibleTestException as e:
        raise SampleTooSmallError(f"DF-GLS regression is infeasible: {e}", stage="dfgls") from e

    lags = int(test.lags)
    resid = np.asarray(regression.resid, dtype=float)
    # the ADF regression explains dx_j for j = lags..T-2; residual j belongs to x_{j+1}
    index = np.arange(T - 1 - resid.size, T - 1) + 1

    logger.debug("DF-GLS: T=%d lags=%d t=%.4f", T, lags, t_stat)
    return DfGlsResult(
        t_stat=t_stat,
        phi_hat=float(1.0 + np.asarray(regression.params)[0]),
        lags=lags,
        T=T,
        residuals=resid,
        residual_index=index,
    )


def dfgls_batch(paths: np.ndarray, c_bar: float = C_BAR) -> np.ndarray:
    """Lag-0 DF-GLS t-statistics for each row of paths"""
    xt = gls_demean(paths, c_bar)
    lagged = xt[:, :-1]
    d = np.diff(xt, axis=1)
    sxx = np.sum(lagged ** 2, axis=1)
    rho = np.sum(lagged * d, axis=1) / sxx
    resid = d - rho[:, None] * lagged
    s2 = np.sum(resid ** 2, axis=1) / (d.shape[1] - 1)
    return rho / np.sqrt(s2 / sxx)


def invert_curves(t_obs, lower_q: np.ndarray, upper_q: np.ndarray, grid: np.ndarray):
    """Vectorized Stock inversion.

    lower_q / upper_q are the alpha1/2 and 1 - alpha1/2 quantile curves of the
    statistic, nondecreasing in c. Returns (c_lower, c_upper, clamp_lower,
    clamp_upper) arrays; an empty acceptance set collapses onto the nearest
    grid endpoint with both clamp flags set.
    """
    t = np.atleast_1d(np.asarray(t_obs, dtype=float))
    n = grid.size

    # first grid index where the upper curve reaches t
    i = np.searchsorted(upper_q, t, side="left")
    # last grid index where the lower curve is still at or below t
    j = np.searchsorted(lower_q, t, side="right") - 1

    c_lo = np.empty_like(t)
    c_hi = np.empty_like(t)
    clamp_lo = i == 0
    clamp_hi = j == n - 1

    inner_i = (i > 0) & (i < n)
    ii = i[inner_i]
    frac = (t[inner_i] - upper_q[ii - 1]) / (upper_q[ii] - upper_q[ii - 1])
    c_lo[inner_i] = grid[ii - 1] + frac * (grid[ii] - grid[ii - 1])
    c_lo[clamp_lo] = grid[0]

    inner_j = (j >= 0) & (j < n - 1)
    jj = j[inner_j]
    frac = (t[inner_j] - lower_q[jj]) / (lower_q[jj + 1] - lower_q[jj])
    c_hi[inner_j] = grid[jj] + frac * (grid[jj + 1] - grid[jj])
    c_hi[clamp_hi] = grid[-1]

    # t above every upper quantile: c beyond the top of the grid
    above = i >= n
    c_lo[above] = grid[-1]
    c_hi[above] = grid[-1]
    clamp_lo = clamp_lo | above
    clamp_hi = clamp_hi | above

    # t below every lower quantile: c beyond the bottom of the grid
    below = j < 0
    c_lo[below] = grid[0]
    c_hi[below] = grid[0]
    clamp_lo = clamp_lo | below
    clamp_hi = clamp_hi | below

    swap = c_lo > c_hi
    if np.any(swap):
        mid = 0.5 * (c_lo[swap] + c_hi[swap])
        c_lo[swap] = mid
        c_hi[swap] = mid
    return c_lo, c_hi, clamp_lo, clamp_hi


def stock_ci(result: DfGlsResult, alpha1: float, table) -> LocalToUnityCI:
    """{c : q_{alpha1/2}(c) <= t_obs <= q_{1-alpha1/2}(c)} on the table's c grid"""
    if not (0.0 < alpha1 < 1.0):
        raise DomainError(f"first-stage level must lie in (0, 1), got {alpha1}")
    lower_q = table.dfgls_curve(alpha1 / 2.0)
    upper_q = table.dfgls_curve(1.0 - alpha1 / 2.0)
    c_lo, c_hi, clamp_lo, clamp_hi = invert_curves(result.t_stat, lower_q, upper_q, table.c_grid)
    if clamp_lo[0] or clamp_hi[0]:
        logger.warning(
            "Confidence interval for c clamped at the table edge (t=%.3f, alpha1=%.2f)", result.t_stat, alpha1
        )
    return LocalToUnityCI(
        c_lower=float(c_lo[0]),
        c_upper=float(c_hi[0]),
        alpha1=alpha1,
        source_table=table.name,
        clamped_lower=bool(clamp_lo[0]),
        clamped_upper=bool(clamp_hi[0]),
    )
