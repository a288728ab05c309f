"""
Quantile regression by a Frisch-Newton interior point method, the quantile
score psi_tau and the kernel estimate of the sparsity density f(0)
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from .exceptions import (
    ConvergenceError,
    DegenerateSampleError,
    DomainError,
    RankDeficiencyError,
    SandwichError,
)
from .series import PredictiveDataset

logger = logging.getLogger(__name__)

GAP_TOL = 1e-10
MAX_ITER = 200
STEP_DAMPING = 0.99995
# residuals this close to zero (relative to the response scale) are exact fits
ZERO_TOL = 1e-9


@dataclass(frozen=True)
class QuantileFit:
    """Estimated conditional quantile line and its by-products"""

    tau: float
    gamma0: float
    gamma1: float
    residuals: np.ndarray
    psi: np.ndarray
    f_hat: float
    bandwidth_h: float
    objective: float = float("nan")
    iterations: int = 0

    @property
    def T(self) -> int:
        return self.residuals.size


def _check_tau(tau: float) -> None:
    if not (0.0 < tau < 1.0):
        raise DomainError(f"quantile level must lie in (0, 1), got {tau}")


def check_loss(u, tau: float):
    """rho_tau(u) = u * (tau - I(u < 0)); works elementwise on arrays"""
    _check_tau(tau)
    u = np.asarray(u, dtype=float)
    loss = u * (tau - (u < 0))
    return float(loss) if loss.ndim == 0 else loss


def psi_score(residuals: np.ndarray, tau: float) -> np.ndarray:
    """psi_tau(u) = tau - I(u < 0); an exact zero maps to tau"""
    return tau - (np.asarray(residuals) < 0).astype(float)


def _step_bound(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not neg.any():
        return 1e20
    return float(np.min(-v[neg] / dv[neg]))


def frisch_newton(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    tol: float = GAP_TOL,
    max_iter: int = MAX_ITER,
) -> Tuple[np.ndarray, int]:
    """Solve min_b sum rho_tau(y - X b) through its bounded dual LP.

    Mehrotra predictor-corrector on
        max y'd  s.t.  X'd = (1 - tau) X'1,  0 <= d <= 1,
    stopping when the duality gap drops below tol * (1 + objective).
    Returns (coefficients, iterations).
    """
    _check_tau(tau)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if np.linalg.matrix_rank(X) < p:
        raise RankDeficiencyError("design matrix is rank deficient", stage="quantreg")

    a = X.T
    c = -y
    b = (1.0 - tau) * X.sum(axis=0)
    u = np.ones(n)
    x = np.full(n, 1.0 - tau)
    s = u - x

    dual = -np.linalg.lstsq(X, y, rcond=None)[0]
    r = c - a.T @ dual
    small = 1e-3 * tol
    z = np.maximum(r, 0.0) + small
    w = np.maximum(-r, 0.0) + small

    def objective(coef):
        res = y - X @ coef
        return float(np.sum(res * (tau - (res < 0))))

    gap = c @ x - dual @ b + w @ u
    it = 0
    while gap > tol * (1.0 + abs(objective(-dual))):
        if it >= max_iter:
            raise ConvergenceError(
                f"interior point stopped after {max_iter} iterations with gap {gap:.3e}",
                best_iterate=-dual,
                stage="quantreg",
            )
        it += 1

        q = 1.0 / (z / x + w / s)
        r = z - w
        aq = a * q
        aqa = aq @ a.T
        rhs = aq @ r
        dy = np.linalg.solve(aqa, rhs)
        dx = q * (a.T @ dy - r)
        ds = -dx
        dz = -z * (dx / x + 1.0)
        dw = -w * (ds / s + 1.0)

        fp = min(STEP_DAMPING * min(_step_bound(x, dx), _step_bound(s, ds)), 1.0)
        fd = min(STEP_DAMPING * min(_step_bound(w, dw), _step_bound(z, dz)), 1.0)

        if min(fp, fd) < 1.0:
            # corrector
            mu = z @ x + w @ s
            g = (z + fd * dz) @ (x + fp * dx) + (w + fd * dw) @ (s + fp * ds)
            mu = mu * (g / mu) ** 3 / (2.0 * n)
            dxdz = dx * dz
            dsdw = ds * dw
            xinv = 1.0 / x
            sinv = 1.0 / s
            xi = mu * (xinv - sinv)
            rhs = rhs + aq @ (dxdz - dsdw - xi)
            dy = np.linalg.solve(aqa, rhs)
            dx = q * (a.T @ dy + xi - r - dxdz + dsdw)
            ds = -dx
            dz = mu * xinv - z - xinv * z * dx - dxdz
            dw = mu * sinv - w - sinv * w * ds - dsdw

            fp = min(STEP_DAMPING * min(_step_bound(x, dx), _step_bound(s, ds)), 1.0)
            fd = min(STEP_DAMPING * min(_step_bound(w, dw), _step_bound(z, dz)), 1.0)

        x = x + fp * dx
        s = s + fp * ds
        dual = dual + fd * dy
        w = w + fd * dw
        z = z + fd * dz
        gap = c @ x - dual @ b + w @ u

    return -dual, it


def silverman_bandwidth(residuals) -> float:
    """h = 0.9 * min(sd, IQR / 1.34) * T^(-1/5)"""
    res = np.asarray(residuals, dtype=float)
    if res.size < 2:
        raise DegenerateSampleError("bandwidth needs at least two residuals", stage="quantreg")
    sd = float(np.std(res, ddof=1))
    q75, q25 = np.percentile(res, [75, 25])
    scale = min(sd, (q75 - q25) / 1.34)
    if scale <= 0:
        # IQR collapses when more than half the residuals coincide
        logger.warning("Residual IQR is zero; bandwidth falls back to the standard deviation (sd=%.4g)", sd)
        scale = sd
    if scale <= 0:
        raise DegenerateSampleError("residuals have zero dispersion", stage="quantreg")
    return 0.9 * scale * res.size ** (-0.2)


def density_at_zero(residuals, h: float) -> float:
    """Gaussian kernel estimate (1 / Th) sum phi(u_t / h)"""
    if h <= 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    res = np.asarray(residuals, dtype=float)
    if res.size == 0:
        raise DomainError("density estimate needs at least one residual")
    return float(np.sum(norm.pdf(res / h)) / (res.size * h))


def solve_qr(data: PredictiveDataset, tau: float) -> QuantileFit:
    """Fit Q_tau(y_t | x_{t-1}) = gamma0 + gamma1 x_{t-1}"""
    _check_tau(tau)
    if np.ptp(data.x_lag) == 0:
        raise RankDeficiencyError("lagged predictor is constant", stage="quantreg")

    X = data.design()
    coef, iterations = frisch_newton(X, data.y, tau)

    residuals = data.y - X @ coef
    scale = max(1.0, float(np.max(np.abs(data.y))))
    residuals[np.abs(residuals) <= ZERO_TOL * scale] = 0.0
    residuals.setflags(write=False)

    psi = psi_score(residuals, tau)
    psi.setflags(write=False)
    h = silverman_bandwidth(residuals)
    f_hat = density_at_zero(residuals, h)

    return QuantileFit(
        tau=tau,
        gamma0=float(coef[0]),
        gamma1=float(coef[1]),
        residuals=residuals,
        psi=psi,
        f_hat=f_hat,
        bandwidth_h=h,
        objective=float(np.sum(check_loss(residuals, tau))),
        iterations=iterations,
    )


def delta_fz(fit: QuantileFit, data: PredictiveDataset) -> np.ndarray:
    """(1 / Th) sum phi(u_t / h) z_{t-1} z_{t-1}'"""
    Z = data.design()
    weights = norm.pdf(fit.residuals / fit.bandwidth_h) / (data.T * fit.bandwidth_h)
    mat = (Z * weights[:, None]).T @ Z
    return 0.5 * (mat + mat.T)


def sandwich_se(bread: np.ndarray, meat: np.ndarray, T: int) -> float:
    """sqrt of the (2,2) entry of T^-1 bread^-1 meat bread^-1"""
    try:
        inv = np.linalg.inv(bread)
    except np.linalg.LinAlgError as e:
        raise SandwichError(f"singular Delta_fz: {e}", stage="sandwich") from e
    cov = inv @ meat @ inv / T
    var = cov[1, 1]
    if not np.isfinite(var) or var <= 0:
        raise SandwichError(f"non-positive slope variance {var}", stage="sandwich")
    return float(np.sqrt(var))


def standard_t(fit: QuantileFit, data: PredictiveDataset, bread: Optional[np.ndarray] = None) -> float:
    """Slope t-statistic with the iid score variance tau(1 - tau) Z'Z / T"""
    Z = data.design()
    bread = delta_fz(fit, data) if bread is None else bread
    meat = fit.tau * (1.0 - fit.tau) * (Z.T @ Z) / data.T
    return fit.gamma1 / sandwich_se(bread, meat, data.T)
