"""
Fully modified quantile t-statistic, the Bonferroni scan over a first-stage
interval for c, and the switching rule between the scan and the plain HAC t
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from .exceptions import DegenerateSEError, DomainError
from .longrun import EIGEN_FLOOR, HacTStat, LongRunEstimates, estimate_long_run, hac_t
from .quantreg import QuantileFit, solve_qr
from .series import PredictiveDataset, demean
from .tables import C_MAX, SwitchThresholds, TableSet, lookup_alpha1
from .unitroot import DfGlsResult, LocalToUnityCI, dfgls, stock_ci

logger = logging.getLogger(__name__)

BONFERRONI_ONLY = "bonferroni_only"
INTERSECTION = "intersection"
T_ONLY = "t_only"

GRID_STEP = 0.25


@dataclass(frozen=True)
class FmPoint:
    c_star: float
    gamma1_plus: float
    se_plus: float
    t_plus: float = field(init=False)

    def __post_init__(self):
        if not self.se_plus > 0:
            raise DegenerateSEError(f"FM standard error {self.se_plus} at c*={self.c_star}", stage="fm")
        object.__setattr__(self, "t_plus", self.gamma1_plus / self.se_plus)


@dataclass(frozen=True)
class TailDecision:
    """One tail of the switching test"""

    tail: str
    branch: str
    alpha1: float
    ci_c: LocalToUnityCI
    # critical value of the plain HAC t in this tail
    t_critical: float
    # critical value applied to the scanned FM statistics
    fm_critical: float
    fm_extreme: float
    reject_fm: bool
    reject_t: bool
    points: Tuple[FmPoint, ...]

    @property
    def reject(self) -> bool:
        if self.branch == BONFERRONI_ONLY:
            return self.reject_fm
        if self.branch == T_ONLY:
            return self.reject_t
        return self.reject_fm and self.reject_t


@dataclass(frozen=True)
class SwitchingFMResult:
    tau: float
    fit: QuantileFit
    long_run: LongRunEstimates
    hac: HacTStat
    unit_root: DfGlsResult
    right: TailDecision
    left: TailDecision
    thresholds: SwitchThresholds
    alpha2: float
    gamma1_lower: float
    gamma1_upper: float
    conflict: bool = False
    notes: Tuple[str, ...] = ()

    @property
    def reject_right(self) -> bool:
        return self.right.reject and not self.conflict

    @property
    def reject_left(self) -> bool:
        return self.left.reject and not self.conflict

    @property
    def reject_two_sided(self) -> bool:
        return self.reject_right or self.reject_left

    @property
    def critical_right(self) -> float:
        return self.right.t_critical

    @property
    def bonferroni_points(self) -> Tuple[FmPoint, ...]:
        return self.right.points

    @property
    def branch(self) -> dict:
        return {"right": self.right.branch, "left": self.left.branch}


def _sxx(data: PredictiveDataset) -> Tuple[np.ndarray, float]:
    xm = demean(data.x_lag)
    sxx = float(xm @ xm)
    if sxx <= 0:
        raise DomainError("lagged predictor has no variation", stage="fm")
    return xm, sxx


def fm_point(fit: QuantileFit, data: PredictiveDataset, lr: LongRunEstimates, c_star: float) -> FmPoint:
    """gamma1_hat minus the endogeneity bias implied by c*, with its standard error"""
    delta = lr.delta_tau
    if not abs(delta) < 1:
        raise DegenerateSEError(f"|delta_tau| = {abs(delta)} leaves no conditional variance", stage="fm")
    xm, sxx = _sxx(data)

    correction = 0.0
    if delta != 0:
        phi = 1.0 + c_star / data.T
        lam = 0.0 if np.isnan(lr.lambda_vv) else lr.lambda_vv
        deviation = xm @ (data.x_level - phi * data.x_lag) - data.T * lam
        correction = lr.omega_psi / lr.omega_v * delta / (fit.f_hat * sxx) * deviation

    se = lr.omega_psi * np.sqrt(1.0 - delta ** 2) / fit.f_hat / np.sqrt(sxx)
    return FmPoint(c_star=float(c_star), gamma1_plus=float(fit.gamma1 - correction), se_plus=float(se))


def bonferroni_scan(
    fit: QuantileFit,
    data: PredictiveDataset,
    lr: LongRunEstimates,
    ci_c: LocalToUnityCI,
    grid_step: float = GRID_STEP,
) -> Tuple[FmPoint, ...]:
    """FmPoint on a uniform c* grid over the interval, endpoints included"""
    if grid_step <= 0:
        raise DomainError(f"grid step must be positive, got {grid_step}")
    hi = min(ci_c.c_upper, C_MAX)
    lo = min(ci_c.c_lower, hi)
    if hi == lo:
        grid = np.array([lo])
    else:
        grid = np.linspace(lo, hi, int(np.ceil((hi - lo) / grid_step)) + 1)
    return tuple(fm_point(fit, data, lr, c) for c in grid)


def branch_for(ci_c: LocalToUnityCI, threshold: float) -> str:
    if ci_c.c_lower > threshold:
        return BONFERRONI_ONLY
    if ci_c.c_upper < threshold:
        return T_ONLY
    return INTERSECTION


def _tail(
    tail: str,
    fit: QuantileFit,
    data: PredictiveDataset,
    lr: LongRunEstimates,
    hac: HacTStat,
    ci_c: LocalToUnityCI,
    threshold: float,
    t_critical: float,
    z_normal: float,
    grid_step: float,
) -> TailDecision:
    points = bonferroni_scan(fit, data, lr, ci_c, grid_step)
    t_plus = np.array([p.t_plus for p in points])
    if tail == "right":
        extreme = float(t_plus.min())
        reject_fm = extreme >= z_normal
        reject_t = hac.t_value >= t_critical
        fm_critical = z_normal
    else:
        extreme = float(t_plus.max())
        reject_fm = extreme <= -z_normal
        reject_t = hac.t_value <= t_critical
        fm_critical = -z_normal
    return TailDecision(
        tail=tail,
        branch=branch_for(ci_c, threshold),
        alpha1=ci_c.alpha1,
        ci_c=ci_c,
        t_critical=t_critical,
        fm_critical=fm_critical,
        fm_extreme=extreme,
        reject_fm=bool(reject_fm),
        reject_t=bool(reject_t),
        points=points,
    )


def gamma1_ci(fit: QuantileFit, hac: HacTStat, right: TailDecision, left: TailDecision) -> Tuple[float, float]:
    """(lower, upper) bounds on gamma1 matching each tail's decision.

    The lower bound comes from the right tail and the upper from the left:
    scan bounds gamma1+ -/+ z se+, plain bounds gamma1_hat -/+ z se_hac, and the
    intersection branch takes the weaker of the two.
    """
    scan_lower = min(p.gamma1_plus - right.fm_critical * p.se_plus for p in right.points)
    plain_lower = fit.gamma1 - right.t_critical * hac.se
    scan_upper = max(p.gamma1_plus - left.fm_critical * p.se_plus for p in left.points)
    plain_upper = fit.gamma1 - left.t_critical * hac.se

    def pick(branch, scan, plain, weaker):
        if branch == BONFERRONI_ONLY:
            return scan
        if branch == T_ONLY:
            return plain
        return weaker(scan, plain)

    return (
        float(pick(right.branch, scan_lower, plain_lower, min)),
        float(pick(left.branch, scan_upper, plain_upper, max)),
    )


def switching_test(
    data: PredictiveDataset,
    tau: float,
    tables: TableSet,
    thresholds: SwitchThresholds = SwitchThresholds(),
    alpha2: Optional[float] = None,
    grid_step: float = GRID_STEP,
    kernel: str = "parzen",
    lag_constant: float = 1.3,
    prewhiten_sigma: bool = True,
    eigen_floor: float = EIGEN_FLOOR,
    unit_root: Optional[DfGlsResult] = None,
) -> SwitchingFMResult:
    """Run the full switching-FM pipeline at one quantile level.

    ``unit_root`` lets callers share one DF-GLS fit across quantile levels.
    """
    alpha2 = thresholds.alpha2 if alpha2 is None else alpha2
    if not (0.0 < alpha2 < 1.0):
        raise DomainError(f"alpha2 must lie in (0, 1), got {alpha2}")
    dfgls_table = tables.require_dfgls()

    fit = solve_qr(data, tau)
    lr = estimate_long_run(fit, data, kernel, lag_constant, prewhiten_sigma, eigen_floor)
    hac = hac_t(fit, data, lr)
    unit_root = dfgls(data.predictor_path()) if unit_root is None else unit_root

    notes = []
    if not lr.prewhitened:
        notes.append("omega: plain HAC fallback")
    if lr.floor_events:
        notes.append(f"eigenvalue floor applied {lr.floor_events}x")

    alpha1_left, alpha1_right = lookup_alpha1(tables.alpha1, lr.delta_tau)
    ci_right = stock_ci(unit_root, alpha1_right, dfgls_table)
    ci_left = stock_ci(unit_root, alpha1_left, dfgls_table)
    for ci in (ci_right, ci_left):
        if ci.clamped_lower or ci.clamped_upper:
            notes.append(f"CI on c at alpha1={ci.alpha1:.2f} clamped at the table edge")

    z_normal = float(norm.ppf(1.0 - alpha2 / 2.0))
    z_right = tables.z.z_percentile(thresholds.c_bar_L, -1.0, 1.0 - alpha2 / 2.0)

    right = _tail("right", fit, data, lr, hac, ci_right, thresholds.c_bar_L, z_right, z_normal, grid_step)
    left = _tail("left", fit, data, lr, hac, ci_left, thresholds.c_under_L, -z_normal, z_normal, grid_step)

    lower, upper = gamma1_ci(fit, hac, right, left)
    conflict = right.reject and left.reject
    if conflict:
        logger.warning("tau=%.2f: both tails reject; reporting no rejection", tau)
        notes.append("conflicting one-sided rejections")
    if lower > upper:
        logger.warning("tau=%.2f: gamma1 bounds cross (%.4g > %.4g)", tau, lower, upper)
        notes.append("gamma1 bounds crossed")
        lower, upper = upper, lower

    logger.debug(
        "tau=%.2f branch=%s/%s reject=%s/%s", tau, right.branch, left.branch, right.reject, left.reject
    )
    return SwitchingFMResult(
        tau=tau,
        fit=fit,
        long_run=lr,
        hac=hac,
        unit_root=unit_root,
        right=right,
        left=left,
        thresholds=thresholds,
        alpha2=alpha2,
        gamma1_lower=lower,
        gamma1_upper=upper,
        conflict=conflict,
        notes=tuple(notes),
    )
