"""
Simulation designs: a local-to-unity AR(1) predictor, correlated Gaussian or
Student-t innovations, a GJR-GARCH(1,1)-t volatility component, and the
random-coefficient return process used for size and power experiments
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.signal import lfilter
from scipy.stats import norm, t as student_t

from . import streams
from .exceptions import DomainError
from .series import PredictiveDataset, TimeSeries, align_predictive

logger = logging.getLogger(__name__)

INNOVATION_KINDS = ("gaussian", "student_t", "t_only", "gjr_mix", "gjr_only")
B_KINDS = ("zero", "identity")
MIN_T = 50
GJR_BURN_IN = 500


@dataclass(frozen=True)
class GjrParams:
    """sigma2_t = omega + alpha u^2 + gamma I(u < 0) u^2 + beta sigma2_{t-1}"""

    omega: float = 0.0001
    alpha: float = 0.0558
    gamma: float = 0.1382
    beta: float = 0.8226

    def __post_init__(self):
        if self.omega <= 0 or min(self.alpha, self.gamma, self.beta) < 0:
            raise DomainError(f"GJR coefficients must be nonnegative with omega > 0: {self}")
        if self.persistence >= 1:
            raise DomainError(f"GJR persistence {self.persistence:.4f} is not below one")

    @property
    def persistence(self) -> float:
        return self.alpha + self.gamma / 2.0 + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)


@dataclass(frozen=True)
class DgpSpec:
    T: int = 400
    c: float = 0.0
    delta: float = -0.95
    innovation_kind: str = "gaussian"
    nu: Optional[float] = None
    gamma0: float = 0.0
    gamma1: float = 0.0
    kappa: float = 0.25
    zeta1: float = 0.0
    zeta2: float = 0.0
    b_kind: str = "zero"
    mu_x: float = 0.0
    seed: int = 0
    # zeta values already carry the T^(kappa-1) factor
    prescaled: bool = True
    gjr: GjrParams = field(default_factory=GjrParams)

    def __post_init__(self):
        if self.T < MIN_T:
            raise DomainError(f"T must be at least {MIN_T}, got {self.T}")
        if abs(self.delta) > 1:
            raise DomainError(f"|delta| must not exceed 1, got {self.delta}")
        if self.innovation_kind not in INNOVATION_KINDS:
            raise DomainError(f"unknown innovation kind {self.innovation_kind!r}")
        if self.innovation_kind != "gaussian" and (self.nu is None or self.nu <= 2):
            raise DomainError(f"{self.innovation_kind} innovations need degrees of freedom nu > 2")
        if self.b_kind not in B_KINDS:
            raise DomainError(f"unknown b kind {self.b_kind!r}")
        if self.zeta1 < 0:
            raise DomainError(f"zeta1 must be nonnegative, got {self.zeta1}")
        if self.zeta1 > 0 and not (0.0 < self.kappa < 0.5):
            raise DomainError(f"kappa must lie in (0, 1/2), got {self.kappa}")
        if isinstance(self.gjr, dict):
            object.__setattr__(self, "gjr", GjrParams(**self.gjr))

    @property
    def alternative_scale(self) -> float:
        return 1.0 if self.prescaled else self.T ** (self.kappa - 1.0)


def standardized_t(rng: np.random.Generator, nu: float, size) -> np.ndarray:
    """Student-t draws rescaled to unit variance"""
    return rng.standard_t(nu, size) * np.sqrt((nu - 2.0) / nu)


def correlated_pair(rng: np.random.Generator, n: int, delta: float, nu: Optional[float] = None):
    """(v, e) with correlation delta; a common chi-square mixing makes the pair multivariate t"""
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    v = z1
    e = delta * z1 + np.sqrt(1.0 - delta ** 2) * z2
    if nu is not None:
        w = np.sqrt(nu / rng.chisquare(nu, n)) * np.sqrt((nu - 2.0) / nu)
        v = v * w
        e = e * w
    return v, e


def gjr_recursion(eps: np.ndarray, params: GjrParams, sigma2_0: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """u_t = sigma_t eps_t with GJR variance; returns (u, sigma2)"""
    n = eps.size
    u = np.empty(n)
    sigma2 = np.empty(n)
    s2 = params.unconditional_variance if sigma2_0 is None else sigma2_0
    for i in range(n):
        sigma2[i] = s2
        u[i] = np.sqrt(s2) * eps[i]
        s2 = params.omega + (params.alpha + params.gamma * (u[i] < 0)) * u[i] ** 2 + params.beta * s2
    return u, sigma2


def gjr_component(rng: np.random.Generator, n: int, nu: float, params: GjrParams, burn_in: int = GJR_BURN_IN):
    eps = standardized_t(rng, nu, n + burn_in)
    u, _ = gjr_recursion(eps, params)
    return u[burn_in:]


def draw_innovations(spec: DgpSpec, rng: np.random.Generator, n: int):
    """(v, e) of length n for the chosen innovation kind"""
    kind = spec.innovation_kind
    if kind == "gaussian":
        return correlated_pair(rng, n, spec.delta)
    if kind in ("student_t", "t_only"):
        return correlated_pair(rng, n, spec.delta, spec.nu)

    v, u1 = correlated_pair(rng, n, spec.delta, spec.nu)
    u2 = gjr_component(rng, n, spec.nu, spec.gjr)
    if kind == "gjr_only":
        return v, u2
    return v, u1 + u2 / np.sqrt(spec.gjr.unconditional_variance)


def simulate(spec: DgpSpec, rng: Optional[np.random.Generator] = None) -> PredictiveDataset:
    """Draw x_0..x_T and y_0..y_T, then align into T observations"""
    rng = streams.stream(spec.seed, streams.DGP) if rng is None else rng
    n = spec.T + 1
    v, e = draw_innovations(spec, rng, n)

    phi = 1.0 + spec.c / spec.T
    x = np.empty(n)
    x[0] = 0.0
    x[1:] = lfilter([1.0], [1.0, -phi], v[1:])
    x += spec.mu_x

    y = np.zeros(n)
    y[1:] = spec.gamma0 + e[1:] + spec.gamma1 * x[:-1]
    if spec.b_kind == "identity" and (spec.zeta1 != 0 or spec.zeta2 != 0):
        y[1:] += spec.alternative_scale * e[1:] * np.abs(spec.zeta1 * x[:-1] + spec.zeta2)

    return align_predictive(TimeSeries(y, label="y"), TimeSeries(x, label="x"))


@lru_cache(maxsize=32)
def _gjr_quantile(kind: str, nu: float, tau: float, params: GjrParams, draws: int = 200_000) -> float:
    rng = streams.stream(0, streams.DGP, 9999)
    spec = DgpSpec(T=MIN_T, delta=0.0, innovation_kind=kind, nu=nu, gjr=params)
    _, e = draw_innovations(spec, rng, draws)
    return float(np.quantile(e, tau))


def innovation_quantile(spec: DgpSpec, tau: float) -> float:
    """Q_e(tau) of the return innovation; every kind is symmetric about zero"""
    if not (0.0 < tau < 1.0):
        raise DomainError(f"quantile level must lie in (0, 1), got {tau}")
    if tau == 0.5:
        return 0.0
    kind = spec.innovation_kind
    if kind == "gaussian":
        return float(norm.ppf(tau))
    if kind in ("student_t", "t_only"):
        return float(student_t.ppf(tau, spec.nu) * np.sqrt((spec.nu - 2.0) / spec.nu))
    return _gjr_quantile(kind, spec.nu, tau, spec.gjr)


def population_quantile_slope(spec: DgpSpec, tau: float) -> float:
    """gamma1 + scale * zeta1 * b(Q_e(tau)), taking zeta1 x + zeta2 > 0"""
    if spec.b_kind == "zero" or spec.zeta1 == 0:
        return spec.gamma1
    return spec.gamma1 + spec.alternative_scale * spec.zeta1 * innovation_quantile(spec, tau)
