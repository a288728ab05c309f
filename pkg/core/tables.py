"""
Simulated lookup tables: percentiles of Z(c, delta), DF-GLS quantile curves
over c, and the calibrated first-stage levels of the switching test
"""

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import isotonic_regression
from scipy.signal import lfilter
from scipy.stats import norm

from . import __version__, streams
from .exceptions import CalibrationError, DomainError, TableError
from .output import write_atomic
from .parallel import map_ordered
from .unitroot import dfgls_batch, invert_curves

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

Z_PERCENTILES = "z_percentiles"
DFGLS_QUANTILES = "dfgls_quantiles"
ALPHA1_LEVELS = "alpha1_levels"
KINDS = (Z_PERCENTILES, DFGLS_QUANTILES, ALPHA1_LEVELS)

FILE_NAMES = {
    Z_PERCENTILES: "z_percentiles.tbl",
    DFGLS_QUANTILES: "dfgls_quantiles.tbl",
    ALPHA1_LEVELS: "alpha1_levels.tbl",
}

Z_C_GRID = np.array([-190.0, -160.0, -130.0] + list(np.arange(-120.0, -10.0, 10.0)) + [-10.0, -5.0, 0.0, 5.0])
Z_DELTA_GRID = np.array([-1.0, -0.9, -0.6, -0.3, 0.0])
Z_LEVELS = np.array([0.01, 0.025, 0.03, 0.05, 0.10, 0.90, 0.95, 0.97, 0.975, 0.99])

DFGLS_C_GRID = np.concatenate([np.arange(-250.0, -59.0, 10.0), np.arange(-58.0, 5.0, 2.0)])
DFGLS_LEVELS = np.round(np.arange(1, 200) * 0.005, 3)

ALPHA1_SCAN = np.round(np.arange(1, 99) * 0.01, 2)
ALPHA1_DELTA_GRID = np.array([
    -0.797, -0.758, -0.718, -0.678, -0.638, -0.598, -0.558, -0.518, -0.478, -0.439,
    -0.399, -0.359, -0.319, -0.279, -0.239, -0.199, -0.159, -0.119, -0.080, -0.040, 0.0,
])
QC_GRID = np.append(np.arange(-120.0, 1.0, 10.0), 4.0)

THRESHOLD_CANDIDATES = np.arange(-120.0, -29.0, 10.0)
THRESHOLD_EVAL_C = np.arange(-200.0, 1.0, 20.0)
THRESHOLD_DELTAS = np.array([-0.797, -0.598, -0.399, -0.199, 0.0])

# candidate c values above this are explosive and excluded
C_MAX = 4.0

MIN_SIM_T = 500
MIN_REPS = 10_000


@dataclass(frozen=True)
class SwitchThresholds:
    c_bar_L: float = -90.0
    c_under_L: float = -100.0
    alpha2: float = 0.1
    epsilon: float = 0.04

    def __post_init__(self):
        if self.c_bar_L >= 0 or self.c_under_L >= 0:
            raise DomainError(f"switch thresholds must be negative, got {self.c_bar_L}, {self.c_under_L}")
        if not (0.0 < self.alpha2 < 1.0):
            raise DomainError(f"alpha2 must lie in (0, 1), got {self.alpha2}")
        if not (0.0 <= self.epsilon < self.alpha2):
            raise DomainError(f"epsilon must lie in [0, alpha2), got {self.epsilon}")

    @property
    def alpha2_tilde(self) -> float:
        return self.alpha2 - self.epsilon


def _strictly_sorted(arr: np.ndarray) -> bool:
    return arr.size < 2 or bool(np.all(np.diff(arr) > 0))


@dataclass(frozen=True)
class CriticalValueTable:
    """Immutable simulated lookup table.

    values layout by kind:
      z_percentiles    (c, delta, level)
      dfgls_quantiles  (c, level)
      alpha1_levels    (delta_tau, [left, right])
    """

    kind: str
    c_grid: np.ndarray
    delta_grid: np.ndarray
    alpha_grid: np.ndarray
    values: np.ndarray
    sim_T: int
    replications: int
    seed: int
    version: int = FORMAT_VERSION
    source: str = "generated"
    digest: str = ""
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TableError(f"unknown table kind {self.kind!r}")
        for name in ("c_grid", "delta_grid", "alpha_grid", "values"):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("c_grid", "delta_grid", "alpha_grid"):
            if not _strictly_sorted(getattr(self, name)):
                raise TableError(f"{self.kind}: {name} must be strictly increasing")

        expected = {
            Z_PERCENTILES: (self.c_grid.size, self.delta_grid.size, self.alpha_grid.size),
            DFGLS_QUANTILES: (self.c_grid.size, self.alpha_grid.size),
            ALPHA1_LEVELS: (self.delta_grid.size, 2),
        }[self.kind]
        if self.values.shape != expected:
            raise TableError(f"{self.kind}: values shape {self.values.shape}, expected {expected}")

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.source}:{self.digest or self.seed}"

    def require_kind(self, kind: str) -> None:
        if self.kind != kind:
            raise TableError(f"expected a {kind} table, got {self.kind}")

    def _level_index(self, level: float) -> int:
        hits = np.nonzero(np.isclose(self.alpha_grid, level, rtol=0.0, atol=1e-9))[0]
        if hits.size == 0:
            raise TableError(f"{self.name} has no level {level:g}")
        return int(hits[0])

    def has_level(self, level: float) -> bool:
        return bool(np.any(np.isclose(self.alpha_grid, level, rtol=0.0, atol=1e-9)))

    def dfgls_curve(self, level: float) -> np.ndarray:
        """DF-GLS quantile at `level` across the c grid"""
        self.require_kind(DFGLS_QUANTILES)
        return self.values[:, self._level_index(level)]

    def z_percentile(self, c: float, delta: float, level: float) -> float:
        """Percentile of Z(c, delta), linear in c between grid rows"""
        self.require_kind(Z_PERCENTILES)
        hits = np.nonzero(np.isclose(self.delta_grid, delta, rtol=0.0, atol=1e-9))[0]
        if hits.size == 0:
            raise TableError(f"{self.name} has no delta {delta:g}")
        if not (self.c_grid[0] <= c <= self.c_grid[-1]):
            raise TableError(f"c={c:g} outside [{self.c_grid[0]:g}, {self.c_grid[-1]:g}] of {self.name}")
        curve = self.values[:, hits[0], self._level_index(level)]
        return float(np.interp(c, self.c_grid, curve))

    def to_frame(self) -> pd.DataFrame:
        if self.kind == ALPHA1_LEVELS:
            return pd.DataFrame({
                "delta_tau": self.delta_grid,
                "alpha1_left": self.values[:, 0],
                "alpha1_right": self.values[:, 1],
            })
        level_cols = [f"q{a:g}" for a in self.alpha_grid]
        if self.kind == DFGLS_QUANTILES:
            frame = pd.DataFrame(self.values, columns=level_cols)
            frame.insert(0, "c", self.c_grid)
            return frame
        nc, nd, na = self.values.shape
        frame = pd.DataFrame(self.values.reshape(nc * nd, na), columns=level_cols)
        frame.insert(0, "delta", np.tile(self.delta_grid, nc))
        frame.insert(0, "c", np.repeat(self.c_grid, nd))
        return frame


# File format

def _fmt_grid(arr: np.ndarray) -> str:
    return ",".join(f"{v:.6g}" for v in arr)


def _parse_grid(text: str) -> np.ndarray:
    text = text.strip()
    return np.array([float(v) for v in text.split(",")]) if text else np.empty(0)


def save_table(table: CriticalValueTable, path) -> Path:
    """Write header lines then a CSV body; the target appears atomically"""
    header = [
        f"# version={table.version}",
        f"# tool_version={__version__}",
        f"# kind={table.kind}",
        f"# sim_T={table.sim_T}",
        f"# replications={table.replications}",
        f"# seed={table.seed}",
        f"# source={table.source}",
        f"# c_grid={_fmt_grid(table.c_grid)}",
        f"# delta_grid={_fmt_grid(table.delta_grid)}",
        f"# alpha_grid={_fmt_grid(table.alpha_grid)}",
    ]
    header += [f"# meta.{k}={v}" for k, v in sorted(table.meta.items())]
    body = table.to_frame().to_csv(index=False, float_format="%.6g", lineterminator="\n")

    path = write_atomic(path, "\n".join(header) + "\n" + body)
    logger.info("Wrote %s (%s)", path, table.kind)
    return path


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:12]


def load_table(path) -> CriticalValueTable:
    path = Path(path)
    if not path.exists():
        raise TableError(f"table file not found: {path}", stage="load")

    header: Dict[str, str] = {}
    with open(path) as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()

    required = ("version", "kind", "sim_T", "replications", "seed", "c_grid", "delta_grid", "alpha_grid")
    missing = [k for k in required if k not in header]
    if missing:
        raise TableError(f"{path}: header lacks {', '.join(missing)}", stage="load")
    if int(header["version"]) != FORMAT_VERSION:
        raise TableError(f"{path}: unsupported format version {header['version']}", stage="load")

    try:
        frame = pd.read_csv(path, comment="#")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TableError(f"{path}: unreadable body: {e}", stage="load") from e

    kind = header["kind"]
    c_grid = _parse_grid(header["c_grid"])
    delta_grid = _parse_grid(header["delta_grid"])
    alpha_grid = _parse_grid(header["alpha_grid"])
    try:
        if kind == ALPHA1_LEVELS:
            values = frame[["alpha1_left", "alpha1_right"]].to_numpy(dtype=float)
        else:
            cols = [f"q{a:g}" for a in alpha_grid]
            values = frame[cols].to_numpy(dtype=float)
            if kind == Z_PERCENTILES:
                values = values.reshape(c_grid.size, delta_grid.size, alpha_grid.size)
    except (KeyError, ValueError) as e:
        raise TableError(f"{path}: body does not match header: {e}", stage="load") from e

    meta = {k[len("meta."):]: v for k, v in header.items() if k.startswith("meta.")}
    return CriticalValueTable(
        kind=kind,
        c_grid=c_grid,
        delta_grid=delta_grid,
        alpha_grid=alpha_grid,
        values=values,
        sim_T=int(header["sim_T"]),
        replications=int(header["replications"]),
        seed=int(header["seed"]),
        source=header.get("source", "generated"),
        digest=file_digest(path),
        meta=meta,
    )


# Local-to-unity simulation

def _check_scale(sim_T: int, reps: int) -> None:
    if sim_T < MIN_SIM_T:
        raise DomainError(f"sim_T must be at least {MIN_SIM_T}, got {sim_T}")
    if reps < MIN_REPS:
        raise DomainError(f"reps must be at least {MIN_REPS}, got {reps}")


def local_to_unity_paths(c: float, sim_T: int, size: int, rng: np.random.Generator):
    """x_t = (1 + c/T) x_{t-1} + v_t, x_0 = 0; returns (x_1..x_T, v_1..v_T)"""
    v = rng.standard_normal((size, sim_T))
    x = lfilter([1.0], [1.0, -(1.0 + c / sim_T)], v, axis=1)
    return x, v


def df_functional(x: np.ndarray, v: np.ndarray):
    """D = sum x^mu_{t-1} v_t / sqrt(Sxx) and sqrt(Sxx), Sxx = sum (x^mu_{t-1})^2"""
    lagged = np.concatenate([np.zeros((x.shape[0], 1)), x[:, :-1]], axis=1)
    xm = lagged - lagged.mean(axis=1, keepdims=True)
    root = np.sqrt(np.sum(xm ** 2, axis=1))
    return np.sum(xm * v, axis=1) / root, root


def _z_draws(c: float, c_index: int, sim_T: int, reps: int, seed: int):
    d_parts, z_parts = [], []
    for index, size in streams.blocks(reps):
        rng = streams.stream(seed, streams.Z_TABLE, c_index, index)
        x, v = local_to_unity_paths(c, sim_T, size, rng)
        D, _ = df_functional(x, v)
        d_parts.append(D)
        z_parts.append(rng.standard_normal(size))
    return np.concatenate(d_parts), np.concatenate(z_parts)


def simulate_z_percentile(
    c: float,
    delta: float,
    alphas: Sequence[float],
    sim_T: int,
    reps: int,
    seed: int,
    c_index: int = 0,
) -> np.ndarray:
    """Empirical quantiles of delta * D + sqrt(1 - delta^2) * Z"""
    if abs(delta) > 1:
        raise DomainError(f"|delta| must not exceed 1, got {delta}")
    _check_scale(sim_T, reps)
    D, Z = _z_draws(c, c_index, sim_T, reps, seed)
    stat = delta * D + np.sqrt(1.0 - delta ** 2) * Z
    return np.quantile(stat, np.asarray(alphas, dtype=float))


def _z_task(task) -> np.ndarray:
    c, c_index, deltas, alphas, sim_T, reps, seed = task
    D, Z = _z_draws(c, c_index, sim_T, reps, seed)
    out = np.empty((len(deltas), len(alphas)))
    for j, delta in enumerate(deltas):
        stat = delta * D + np.sqrt(1.0 - delta ** 2) * Z
        out[j] = np.quantile(stat, alphas)
    return out


def _normal_row_check(row: np.ndarray, alphas: np.ndarray, reps: int) -> bool:
    """delta = 0 row against N(0,1) quantiles within 3 Monte Carlo SEs"""
    z = norm.ppf(alphas)
    se = np.sqrt(alphas * (1.0 - alphas) / reps) / norm.pdf(z)
    return bool(np.all(np.abs(row - z) <= 3.0 * se))


def build_z_table(
    c_grid: Sequence[float] = Z_C_GRID,
    delta_grid: Sequence[float] = Z_DELTA_GRID,
    alphas: Sequence[float] = Z_LEVELS,
    sim_T: int = 2000,
    reps: int = 200_000,
    seed: int = 0,
    threads: int = 1,
) -> CriticalValueTable:
    c_grid = np.asarray(c_grid, dtype=float)
    delta_grid = np.asarray(delta_grid, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    if np.any(np.abs(delta_grid) > 1):
        raise DomainError("delta grid must lie in [-1, 1]")
    _check_scale(sim_T, reps)

    logger.info("Simulating Z(c, delta) percentiles: %d c values, T=%d, reps=%d", c_grid.size, sim_T, reps)
    tasks = [(c, i, delta_grid, alphas, sim_T, reps, seed) for i, c in enumerate(c_grid)]
    values = np.stack(map_ordered(_z_task, tasks, threads))

    meta = {}
    zero = np.nonzero(np.isclose(delta_grid, 0.0))[0]
    if zero.size:
        ok = all(_normal_row_check(values[i, zero[0]], alphas, reps) for i in range(c_grid.size))
        meta["normal_check"] = "pass" if ok else "fail"
        if not ok:
            logger.warning("delta=0 percentiles deviate from N(0,1) by more than 3 Monte Carlo SEs")

    return CriticalValueTable(
        kind=Z_PERCENTILES,
        c_grid=c_grid,
        delta_grid=delta_grid,
        alpha_grid=alphas,
        values=values,
        sim_T=sim_T,
        replications=reps,
        seed=seed,
        meta=meta,
    )


def _dfgls_task(task) -> np.ndarray:
    c, c_index, alphas, sim_T, reps, seed = task
    parts = []
    for index, size in streams.blocks(reps):
        rng = streams.stream(seed, streams.DFGLS_TABLE, c_index, index)
        x, _ = local_to_unity_paths(c, sim_T, size, rng)
        parts.append(dfgls_batch(x))
    return np.quantile(np.concatenate(parts), alphas)


def smooth_isotonic(raw: np.ndarray) -> np.ndarray:
    """Nondecreasing in c per level, then nondecreasing in level per c"""
    out = np.column_stack([isotonic_regression(raw[:, j], increasing=True).x for j in range(raw.shape[1])])
    return np.maximum.accumulate(out, axis=1)


def simulate_dfgls_quantiles(
    c_grid: Sequence[float] = DFGLS_C_GRID,
    alphas: Sequence[float] = DFGLS_LEVELS,
    sim_T: int = 2000,
    reps: int = 100_000,
    seed: int = 0,
    threads: int = 1,
) -> CriticalValueTable:
    c_grid = np.asarray(c_grid, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    _check_scale(sim_T, reps)

    logger.info("Simulating DF-GLS quantiles: %d c values, T=%d, reps=%d", c_grid.size, sim_T, reps)
    tasks = [(c, i, alphas, sim_T, reps, seed) for i, c in enumerate(c_grid)]
    raw = np.stack(map_ordered(_dfgls_task, tasks, threads))
    values = smooth_isotonic(raw)
    adjusted = float(np.max(np.abs(values - raw)))
    logger.debug("Isotonic smoothing moved quantiles by at most %.4f", adjusted)

    return CriticalValueTable(
        kind=DFGLS_QUANTILES,
        c_grid=c_grid,
        delta_grid=np.empty(0),
        alpha_grid=alphas,
        values=values,
        sim_T=sim_T,
        replications=reps,
        seed=seed,
        meta={"isotonic_max_shift": f"{adjusted:.6g}"},
    )


# Asymptotic switching-test simulator

@dataclass(frozen=True)
class AsymptoticDraws:
    """Per-replication ingredients of the switching test at one true c"""

    c: float
    t_dfgls: np.ndarray
    D: np.ndarray
    z_psi: np.ndarray
    # sqrt(Sxx) / T
    kappa: np.ndarray


def asymptotic_draws(task) -> AsymptoticDraws:
    c, c_index, sim_T, reps, seed, purpose = task
    t_parts, d_parts, z_parts, k_parts = [], [], [], []
    for index, size in streams.blocks(reps):
        rng = streams.stream(seed, purpose, c_index, index)
        x, v = local_to_unity_paths(c, sim_T, size, rng)
        D, root = df_functional(x, v)
        t_parts.append(dfgls_batch(x))
        d_parts.append(D)
        z_parts.append(rng.standard_normal(size))
        k_parts.append(root / sim_T)
    return AsymptoticDraws(
        c=c,
        t_dfgls=np.concatenate(t_parts),
        D=np.concatenate(d_parts),
        z_psi=np.concatenate(z_parts),
        kappa=np.concatenate(k_parts),
    )


def switching_rejection_rate(
    draws: AsymptoticDraws,
    delta: float,
    alpha1: float,
    tail: str,
    threshold: float,
    level: float,
    z_right_critical: float,
    dfgls_table: CriticalValueTable,
) -> float:
    """Null rejection frequency of one tail of the switching test.

    The HAC t is delta * D + sqrt(1 - delta^2) * Z and the FM t at c* is
    Z - delta * (c - c*) * sqrt(Sxx) / (T sqrt(1 - delta^2)), which is affine
    in c* so the scan reduces to the interval endpoints.
    """
    if abs(delta) >= 1:
        raise DomainError(f"|delta| must be below 1, got {delta}")
    lower_q = dfgls_table.dfgls_curve(alpha1 / 2.0)
    upper_q = dfgls_table.dfgls_curve(1.0 - alpha1 / 2.0)
    c_lo, c_hi, _, _ = invert_curves(draws.t_dfgls, lower_q, upper_q, dfgls_table.c_grid)
    c_lo = np.minimum(c_lo, C_MAX)
    c_hi = np.minimum(c_hi, C_MAX)

    rho = np.sqrt(1.0 - delta ** 2)
    t_hac = delta * draws.D + rho * draws.z_psi
    t_lo = draws.z_psi - delta * (draws.c - c_lo) * draws.kappa / rho
    t_hi = draws.z_psi - delta * (draws.c - c_hi) * draws.kappa / rho
    z_n = norm.ppf(1.0 - level / 2.0)

    if tail == "right":
        fm = np.minimum(t_lo, t_hi) >= z_n
        plain = t_hac >= z_right_critical
    elif tail == "left":
        fm = np.maximum(t_lo, t_hi) <= -z_n
        plain = t_hac <= -z_n
    else:
        raise DomainError(f"tail must be 'right' or 'left', got {tail!r}")

    reject = np.where(c_lo > threshold, fm, np.where(c_hi < threshold, plain, fm & plain))
    return float(np.mean(reject))


def right_critical(
    z_table: Optional[CriticalValueTable],
    c: float,
    level: float,
    sim_T: int = 2000,
    reps: int = 200_000,
    seed: int = 0,
) -> float:
    """z_level(c) at delta = -1, simulated on the spot when the table lacks it"""
    if z_table is not None and z_table.has_level(level):
        try:
            return z_table.z_percentile(c, -1.0, level)
        except TableError:
            pass
    logger.info("Simulating z_%.3f(%g) at delta=-1", level, c)
    return float(simulate_z_percentile(c, -1.0, [level], sim_T, reps, seed)[0])


def _calibrate_one(
    draws: List[AsymptoticDraws],
    delta: float,
    tail: str,
    threshold: float,
    thresholds: SwitchThresholds,
    z_right: float,
    dfgls_table: CriticalValueTable,
) -> Tuple[float, float]:
    """Largest scanned alpha1 whose worst-case rejection stays within alpha2_tilde / 2"""
    level = thresholds.alpha2_tilde
    target = level / 2.0
    best, best_rate = float("nan"), float("nan")
    for alpha1 in ALPHA1_SCAN:
        worst = max(
            switching_rejection_rate(d, delta, alpha1, tail, threshold, level, z_right, dfgls_table)
            for d in draws
        )
        if worst <= target:
            best, best_rate = float(alpha1), worst
    if np.isnan(best):
        raise CalibrationError(f"no first-stage level keeps the {tail} tail within {target:.3f} at delta={delta:g}")
    return best, best_rate


def calibrate_alpha1(
    dfgls_table: CriticalValueTable,
    z_table: Optional[CriticalValueTable] = None,
    delta_tau_grid: Sequence[float] = ALPHA1_DELTA_GRID,
    thresholds: SwitchThresholds = SwitchThresholds(),
    Qc: Sequence[float] = QC_GRID,
    sim_T: int = 5000,
    reps: int = 10_000,
    seed: int = 0,
    threads: int = 1,
) -> CriticalValueTable:
    """Adjusted (left, right) first-stage levels for each delta_tau"""
    dfgls_table.require_kind(DFGLS_QUANTILES)
    delta_grid = np.asarray(delta_tau_grid, dtype=float)
    Qc = np.asarray(Qc, dtype=float)
    level = thresholds.alpha2_tilde
    z_right = right_critical(z_table, thresholds.c_bar_L, 1.0 - level / 2.0, seed=seed)

    logger.info("Calibrating first-stage levels over %d delta values, %d c values", delta_grid.size, Qc.size)
    tasks = [(c, i, sim_T, reps, seed, streams.ALPHA1_TABLE) for i, c in enumerate(Qc)]
    draws = map_ordered(asymptotic_draws, tasks, threads)

    values = np.full((delta_grid.size, 2), np.nan)
    failures = []
    for i, delta in enumerate(delta_grid):
        for j, (tail, threshold) in enumerate((("left", thresholds.c_under_L), ("right", thresholds.c_bar_L))):
            try:
                values[i, j], rate = _calibrate_one(draws, delta, tail, threshold, thresholds, z_right, dfgls_table)
                logger.debug("delta=%.3f %s alpha1=%.2f worst rate=%.4f", delta, tail, values[i, j], rate)
            except CalibrationError as e:
                logger.warning("%s", e)
                failures.append(f"{delta:g}/{tail}")

    return CriticalValueTable(
        kind=ALPHA1_LEVELS,
        c_grid=Qc,
        delta_grid=delta_grid,
        alpha_grid=ALPHA1_SCAN,
        values=values,
        sim_T=sim_T,
        replications=reps,
        seed=seed,
        meta={
            "c_bar_L": f"{thresholds.c_bar_L:g}",
            "c_under_L": f"{thresholds.c_under_L:g}",
            "alpha2": f"{thresholds.alpha2:g}",
            "epsilon": f"{thresholds.epsilon:g}",
            "failures": ";".join(failures) or "none",
        },
    )


def lookup_alpha1(table: CriticalValueTable, delta_tau: float) -> Tuple[float, float]:
    """Nearest-row (left, right) levels; out-of-grid values clamp to the end rows"""
    table.require_kind(ALPHA1_LEVELS)
    valid = ~np.any(np.isnan(table.values), axis=1)
    if not valid.any():
        raise TableError(f"{table.name} holds no calibrated rows")
    grid = np.where(valid, table.delta_grid, np.inf)
    # ties resolve to the smaller (more conservative) delta_tau
    row = int(np.argmin(np.abs(grid - delta_tau)))
    return float(table.values[row, 0]), float(table.values[row, 1])


def select_switch_threshold(
    dfgls_table: CriticalValueTable,
    z_table: Optional[CriticalValueTable] = None,
    candidates: Sequence[float] = THRESHOLD_CANDIDATES,
    deltas: Sequence[float] = THRESHOLD_DELTAS,
    eval_c: Sequence[float] = THRESHOLD_EVAL_C,
    Qc: Sequence[float] = QC_GRID,
    alpha2: float = 0.1,
    epsilon: float = 0.04,
    sim_T: int = 5000,
    reps: int = 10_000,
    seed: int = 0,
    threads: int = 1,
) -> Tuple[SwitchThresholds, pd.DataFrame]:
    """Pick, per tail, the threshold with the smallest average under-rejection.

    For each candidate the first-stage level is calibrated on Qc, then the
    shortfall alpha2/2 - rejection is averaged over eval_c and deltas.
    Returns the chosen thresholds and the per-candidate averages.
    """
    Qc = np.asarray(Qc, dtype=float)
    eval_c = np.asarray(eval_c, dtype=float)
    all_c = np.union1d(Qc, eval_c)
    tasks = [(c, i, sim_T, reps, seed, streams.THRESHOLD) for i, c in enumerate(all_c)]
    draws = dict(zip(all_c, map_ordered(asymptotic_draws, tasks, threads)))
    q_draws = [draws[c] for c in Qc]
    e_draws = [draws[c] for c in eval_c]

    rows = []
    for cand in candidates:
        th = SwitchThresholds(c_bar_L=float(cand), c_under_L=float(cand), alpha2=alpha2, epsilon=epsilon)
        level = th.alpha2_tilde
        z_right = right_critical(z_table, cand, 1.0 - level / 2.0, seed=seed)
        for tail in ("right", "left"):
            shortfalls = []
            for delta in deltas:
                try:
                    alpha1, _ = _calibrate_one(q_draws, delta, tail, cand, th, z_right, dfgls_table)
                except CalibrationError as e:
                    logger.warning("candidate %g: %s", cand, e)
                    shortfalls = [np.nan]
                    break
                shortfalls += [
                    alpha2 / 2.0
                    - switching_rejection_rate(d, delta, alpha1, tail, cand, level, z_right, dfgls_table)
                    for d in e_draws
                ]
            rows.append({"candidate": cand, "tail": tail, "under_rejection": float(np.mean(shortfalls))})

    frame = pd.DataFrame(rows)
    best = {}
    for tail in ("right", "left"):
        sub = frame[frame["tail"] == tail].dropna()
        if sub.empty:
            raise CalibrationError(f"no admissible {tail}-tail threshold among {list(candidates)}")
        best[tail] = float(sub.loc[sub["under_rejection"].idxmin(), "candidate"])
    chosen = SwitchThresholds(c_bar_L=best["right"], c_under_L=best["left"], alpha2=alpha2, epsilon=epsilon)
    logger.info("Selected thresholds c_bar_L=%g c_under_L=%g", chosen.c_bar_L, chosen.c_under_L)
    return chosen, frame


# Table sets

@dataclass(frozen=True)
class TableSet:
    z: CriticalValueTable
    alpha1: CriticalValueTable
    dfgls: Optional[CriticalValueTable] = None

    def require_dfgls(self) -> CriticalValueTable:
        if self.dfgls is None:
            raise TableError(
                "DF-GLS quantile table missing; run `gen-tables --kind dfgls` first",
                stage="tables",
            )
        return self.dfgls

    def provenance(self) -> Dict[str, str]:
        tables = {"z": self.z, "alpha1": self.alpha1, "dfgls": self.dfgls}
        return {k: t.name for k, t in tables.items() if t is not None}


def load_table_set(tables_dir, alpha1_source: str = "paper", z_source: str = "paper") -> TableSet:
    """Generated tables come from tables_dir; the `paper` source selects the built-in ones"""
    from .paper_tables import paper_alpha1_table, paper_z_table

    for name, source in (("alpha1", alpha1_source), ("z", z_source)):
        if source not in ("paper", "generated"):
            raise TableError(f"{name} source must be 'paper' or 'generated', got {source!r}")

    tables_dir = Path(tables_dir) if tables_dir else None

    def from_dir(kind):
        if tables_dir is None:
            raise TableError(f"no tables directory configured for the {kind} table")
        return load_table(tables_dir / FILE_NAMES[kind])

    dfgls = None
    if tables_dir is not None and (tables_dir / FILE_NAMES[DFGLS_QUANTILES]).exists():
        dfgls = from_dir(DFGLS_QUANTILES)

    z = paper_z_table() if z_source == "paper" else from_dir(Z_PERCENTILES)
    alpha1 = paper_alpha1_table() if alpha1_source == "paper" else from_dir(ALPHA1_LEVELS)
    logger.debug("Loaded tables: %s", TableSet(z=z, alpha1=alpha1, dfgls=dfgls).provenance())
    return TableSet(z=z, alpha1=alpha1, dfgls=dfgls)
