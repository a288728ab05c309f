"""
Long-run covariance estimation: kernel HAC, Andrews bandwidth, HVAR
prewhitening of (psi, v), the sandwich pieces and the HAC t-statistic
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
import statsmodels.api as sm

from .exceptions import DomainError, PrewhiteningError, SampleTooSmallError
from .quantreg import QuantileFit, delta_fz, sandwich_se
from .series import PredictiveDataset

logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-12
HVAR_MIN_LENGTH = 30
HVAR_QUARTER = 3
HVAR_YEAR = 12
# Andrews-Monahan cap on the prewhitening VAR
SINGULAR_VALUE_CAP = 0.97


def bartlett(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    return np.where(ax <= 1.0, 1.0 - ax, 0.0)


def parzen(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    inner = 1.0 - 6.0 * ax ** 2 + 6.0 * ax ** 3
    outer = 2.0 * (1.0 - ax) ** 3
    return np.where(ax <= 0.5, inner, np.where(ax <= 1.0, outer, 0.0))


def quadratic_spectral(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0
    arg = 6.0 * np.pi * x[nz] / 5.0
    out[nz] = 25.0 / (12.0 * np.pi ** 2 * x[nz] ** 2) * (np.sin(arg) / arg - np.cos(arg))
    return out


KERNELS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "bartlett": bartlett,
    "parzen": parzen,
    "quadratic_spectral": quadratic_spectral,
}


@dataclass(frozen=True)
class LongRunEstimates:
    """Omega_tau components plus the sandwich pieces behind the HAC t"""

    omega_psi2: float
    omega_psi_v: float
    omega_v2: float
    delta_tau: float
    lambda_vv: float = float("nan")
    sigma_hat: Optional[np.ndarray] = None
    delta_fz_hat: Optional[np.ndarray] = None
    bandwidth_m: Optional[int] = None
    kernel_name: str = "parzen"
    prewhitened: bool = True
    floor_events: int = 0
    omega_bandwidth: float = 0.0

    @property
    def omega_psi(self) -> float:
        return float(np.sqrt(self.omega_psi2))

    @property
    def omega_v(self) -> float:
        return float(np.sqrt(self.omega_v2))


@dataclass(frozen=True)
class HacTStat:
    t_value: float
    se: float
    tau: float
    gamma1_hat: float


def default_lag(T: int, constant: float = 1.3) -> int:
    """m = floor(constant * T^(1/3))"""
    return int(np.floor(constant * T ** (1.0 / 3.0)))


def autocovariance(g: np.ndarray, lag: int) -> np.ndarray:
    """T^-1 sum_t g_{t+lag} g_t'"""
    T = g.shape[0]
    if lag == 0:
        return g.T @ g / T
    return g[lag:].T @ g[: T - lag] / T


def kernel_hac(g: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_l w_|l| Gamma(l) over l = -(L-1)..(L-1) with L = len(weights)"""
    g = np.atleast_2d(g.T).T
    out = weights[0] * autocovariance(g, 0)
    for lag in range(1, len(weights)):
        if weights[lag] == 0.0:
            continue
        gamma = autocovariance(g, lag)
        out = out + weights[lag] * (gamma + gamma.T)
    return 0.5 * (out + out.T)


def truncated_weights(kernel: str, m: int) -> np.ndarray:
    """Weights k(l / (m + 1)) for l = 0..m"""
    if kernel not in KERNELS:
        raise DomainError(f"unknown kernel '{kernel}'")
    if m < 0:
        raise DomainError(f"lag length must be nonnegative, got {m}")
    lags = np.arange(m + 1, dtype=float)
    return KERNELS[kernel](lags / (m + 1))


def andrews_bandwidth(e: np.ndarray) -> float:
    """AR(1) plug-in bandwidth for the quadratic-spectral kernel"""
    e = np.atleast_2d(e.T).T
    T = e.shape[0]
    num = 0.0
    den = 0.0
    for col in e.T:
        lagged, current = col[:-1], col[1:]
        ss = lagged @ lagged
        if ss <= 0:
            continue
        rho = float(np.clip((lagged @ current) / ss, -SINGULAR_VALUE_CAP, SINGULAR_VALUE_CAP))
        sigma2 = float(np.mean((current - rho * lagged) ** 2))
        num += 4.0 * rho ** 2 * sigma2 ** 2 / (1.0 - rho) ** 8
        den += sigma2 ** 2 / (1.0 - rho) ** 4
    if den <= 0:
        return 0.0
    return 1.3221 * (num / den * T) ** 0.2


def qs_hac(e: np.ndarray) -> Tuple[np.ndarray, float]:
    """Quadratic-spectral HAC with Andrews bandwidth; returns (matrix, bandwidth)"""
    e = np.atleast_2d(e.T).T
    e = e - e.mean(axis=0)
    bw = andrews_bandwidth(e)
    T = e.shape[0]
    if bw <= 0:
        weights = np.ones(1)
    else:
        weights = quadratic_spectral(np.arange(T, dtype=float) / bw)
    return kernel_hac(e, weights), bw


def floor_psd(mat: np.ndarray, floor: float = EIGEN_FLOOR) -> Tuple[np.ndarray, bool]:
    """Raise eigenvalues below floor * trace; returns (matrix, floored?)"""
    sym = 0.5 * (mat + mat.T)
    trace = float(np.trace(sym))
    if trace <= 0:
        trace = 1.0
    vals, vecs = np.linalg.eigh(sym)
    lo = floor * trace
    if np.all(vals >= lo):
        return sym, False
    vals = np.maximum(vals, lo)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T), True


def recolor(omega_eps: np.ndarray, phis) -> np.ndarray:
    """A^-1 Omega_eps A^-T with A = I - sum(phis)"""
    k = omega_eps.shape[0]
    A = np.eye(k)
    for phi in phis:
        A = A - phi
    if abs(np.linalg.det(A)) < 1e-10:
        raise PrewhiteningError("lag polynomial has a root at one", stage="hvar")
    A_inv = np.linalg.inv(A)
    return A_inv @ omega_eps @ A_inv.T


def hvar_filter(U: np.ndarray):
    """Restricted HVAR(1, 3, 12) fit of U_t = (psi_t, v_t)'.

    psi loads on its own daily / quarterly / yearly means only; v loads on
    (psi_{t-1}, v_{t-1}) only. Returns (residuals, [Phi_m, Phi_q, Phi_y]).
    """
    frame = pd.DataFrame(U, columns=["psi", "v"])
    lag1 = frame.shift(1)
    quarter = frame.rolling(HVAR_QUARTER).mean().shift(1)
    year = frame.rolling(HVAR_YEAR).mean().shift(1)
    rows = slice(HVAR_YEAR, len(frame))

    ones = np.ones(len(frame))[rows]
    X_psi = np.column_stack([ones, lag1["psi"].values[rows], quarter["psi"].values[rows], year["psi"].values[rows]])
    X_v = np.column_stack([ones, lag1["psi"].values[rows], lag1["v"].values[rows]])
    psi_t = frame["psi"].values[rows]
    v_t = frame["v"].values[rows]

    fit_psi = sm.OLS(psi_t, X_psi).fit()
    fit_v = sm.OLS(v_t, X_v).fit()
    b_psi, b_v = fit_psi.params, fit_v.params

    phi_m = np.array([[b_psi[1], 0.0], [b_v[1], b_v[2]]])
    phi_q = np.array([[b_psi[2], 0.0], [0.0, 0.0]])
    phi_y = np.array([[b_psi[3], 0.0], [0.0, 0.0]])
    resid = np.column_stack([fit_psi.resid, fit_v.resid])
    return resid, [phi_m, phi_q, phi_y]


def _omega_fields(omega: np.ndarray, floor: float) -> dict:
    omega, floored = floor_psd(omega, floor)
    if floored:
        logger.warning("Long-run covariance floored at %.1e x trace", floor)
    w_psi2, w_v2 = float(omega[0, 0]), float(omega[1, 1])
    w_psi_v = float(omega[0, 1])
    delta = float(np.clip(w_psi_v / np.sqrt(w_psi2 * w_v2), -1.0, 1.0))
    return dict(
        omega_psi2=w_psi2,
        omega_psi_v=w_psi_v,
        omega_v2=w_v2,
        delta_tau=delta,
        floor_events=int(floored),
    )


def hvar_prewhitened_omega(psi, v, floor: float = EIGEN_FLOOR) -> LongRunEstimates:
    """Omega_tau of (psi, v) by HVAR prewhitening, QS-HAC and recoloring"""
    psi = np.asarray(psi, dtype=float)
    v = np.asarray(v, dtype=float)
    if psi.size != v.size:
        raise DomainError("psi and v must have equal length")
    if psi.size < HVAR_MIN_LENGTH:
        raise SampleTooSmallError(f"HVAR prewhitening needs {HVAR_MIN_LENGTH} observations", stage="hvar")

    U = np.column_stack([psi, v])
    try:
        resid, phis = hvar_filter(U)
        omega_eps, bw = qs_hac(resid)
        omega = recolor(omega_eps, phis)
        prewhitened = True
    except (PrewhiteningError, np.linalg.LinAlgError) as e:
        logger.warning("HVAR prewhitening failed (%s); using plain HAC", e)
        omega, bw = qs_hac(U)
        prewhitened = False

    return LongRunEstimates(prewhitened=prewhitened, omega_bandwidth=bw, **_omega_fields(omega, floor))


def lambda_vv(v, omega_v2: float) -> float:
    """One-sided long-run covariance (omega_v^2 - var(v)) / 2"""
    v = np.asarray(v, dtype=float)
    return 0.5 * (omega_v2 - float(np.var(v)))


def ar1_residuals(data: PredictiveDataset) -> np.ndarray:
    """v_t from the OLS AR(1) with intercept x_t = a + b x_{t-1} + v_t"""
    return np.asarray(sm.OLS(data.x_level, data.design()).fit().resid)


def score_matrix(fit: QuantileFit, data: PredictiveDataset) -> np.ndarray:
    """Rows z_{t-1} psi_tau(u_t)"""
    return data.design() * fit.psi[:, None]


def sigma_hat(fit: QuantileFit, data: PredictiveDataset, kernel: str = "parzen", m: Optional[int] = None) -> np.ndarray:
    """Sigma(tau) = sum_{|l| <= m} k(l / (m + 1)) Gamma(l)"""
    m = default_lag(data.T) if m is None else m
    if m >= data.T:
        raise DomainError(f"lag length {m} must be below T={data.T}")
    return kernel_hac(score_matrix(fit, data), truncated_weights(kernel, m))


def prewhitened_sigma_hat(
    fit: QuantileFit, data: PredictiveDataset, kernel: str = "parzen", m: Optional[int] = None
) -> np.ndarray:
    """Sigma(tau) after VAR(1) prewhitening of z_{t-1} psi_t and recoloring"""
    m = default_lag(data.T) if m is None else m
    if m >= data.T - 1:
        raise DomainError(f"lag length {m} must be below T-1={data.T - 1}")
    g = score_matrix(fit, data)
    prev, cur = g[:-1], g[1:]
    sxx = prev.T @ prev
    try:
        A = (cur.T @ prev) @ np.linalg.inv(sxx)
    except np.linalg.LinAlgError:
        logger.warning("Score VAR(1) is singular; Sigma left unwhitened")
        return sigma_hat(fit, data, kernel, m)
    u_svd, s_svd, vt_svd = np.linalg.svd(A)
    if np.any(s_svd > SINGULAR_VALUE_CAP):
        A = (u_svd * np.minimum(s_svd, SINGULAR_VALUE_CAP)) @ vt_svd
    e = cur - prev @ A.T
    sigma_e = kernel_hac(e, truncated_weights(kernel, m))
    out = recolor(sigma_e, [A])
    return 0.5 * (out + out.T)


def estimate_long_run(
    fit: QuantileFit,
    data: PredictiveDataset,
    kernel: str = "parzen",
    lag_constant: float = 1.3,
    prewhiten_sigma: bool = True,
    floor: float = EIGEN_FLOOR,
) -> LongRunEstimates:
    """Every long-run object the HAC and FM statistics need, on one sample"""
    v = ar1_residuals(data)
    lr = hvar_prewhitened_omega(fit.psi, v, floor)
    m = default_lag(data.T, lag_constant)
    if prewhiten_sigma:
        sig = prewhitened_sigma_hat(fit, data, kernel, m)
    else:
        sig = sigma_hat(fit, data, kernel, m)
    sig, floored = floor_psd(sig, floor)
    if floored:
        logger.warning("Sigma(tau) floored at %.1e x trace", floor)
    return replace(
        lr,
        lambda_vv=lambda_vv(v, lr.omega_v2),
        sigma_hat=sig,
        delta_fz_hat=delta_fz(fit, data),
        bandwidth_m=m,
        kernel_name=kernel,
        floor_events=lr.floor_events + int(floored),
    )


def hac_t(fit: QuantileFit, data: PredictiveDataset, lr: LongRunEstimates) -> HacTStat:
    """gamma1_hat over sqrt of the (2,2) entry of T^-1 Delta^-1 Sigma Delta^-1"""
    bread = lr.delta_fz_hat if lr.delta_fz_hat is not None else delta_fz(fit, data)
    meat = lr.sigma_hat if lr.sigma_hat is not None else sigma_hat(fit, data, lr.kernel_name, lr.bandwidth_m)
    se = sandwich_se(bread, meat, data.T)
    return HacTStat(t_value=fit.gamma1 / se, se=se, tau=fit.tau, gamma1_hat=fit.gamma1)
