"""
Monte Carlo size and power experiments for the quantile predictability tests
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import norm

from . import streams
from .dgp import DgpSpec, population_quantile_slope, simulate
from .exceptions import ConfigError, DomainError, PredictabilityError, TableError
from .fmtest import switching_test
from .longrun import estimate_long_run, hac_t
from .output import provenance_header, write_report
from .parallel import map_ordered
from .quantreg import solve_qr, standard_t
from .tables import SwitchThresholds, TableSet, load_table_set
from .unitroot import dfgls

logger = logging.getLogger(__name__)

TEST_KINDS = ("standard_t", "standard_t_hac", "switching_fm")
ALTERNATIVES = ("none", "gamma1", "zeta1")
DECILES = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

# cells whose failure share exceeds this are flagged invalid
MAX_FAILURE_SHARE = 0.01
REP_BLOCK = 100
# DgpSpec fields an experiment grid takes from configuration
GRID_DGP_FIELDS = ("T", "innovation_kind", "nu", "b_kind", "kappa", "zeta2")


@dataclass(frozen=True)
class ExperimentGrid:
    taus: Tuple[float, ...] = DECILES
    c_values: Tuple[float, ...] = (0.0, -5.0, -10.0, -25.0, -50.0, -200.0)
    delta_values: Tuple[float, ...] = (-0.95, -0.5)
    T: int = 400
    replications: int = 2000
    test_kind: str = "switching_fm"
    alternative: str = "none"
    alternative_values: Tuple[float, ...] = (0.0,)
    innovation_kind: str = "gaussian"
    nu: Optional[float] = None
    b_kind: str = "zero"
    kappa: float = 0.25
    zeta2: float = 0.0
    seed: int = 0
    alpha2: float = 0.1
    tables_dir: Optional[str] = None
    alpha1_source: str = "paper"
    z_source: str = "paper"
    threads: int = 1
    label: str = ""

    def __post_init__(self):
        for name in ("taus", "c_values", "delta_values", "alternative_values"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.replications < 100:
            raise DomainError(f"replications must be at least 100, got {self.replications}")
        if not all(0.0 < t < 1.0 for t in self.taus):
            raise DomainError(f"quantile levels must lie in (0, 1): {self.taus}")
        if self.test_kind not in TEST_KINDS:
            raise DomainError(f"unknown test kind {self.test_kind!r}")
        if self.alternative not in ALTERNATIVES:
            raise DomainError(f"unknown alternative axis {self.alternative!r}")
        if self.alternative == "none" and any(v != 0 for v in self.alternative_values):
            raise DomainError("a grid without an alternative axis takes alternative_values=(0,)")

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return len(self.c_values), len(self.delta_values), len(self.alternative_values), len(self.taus)

    def spec_for(self, c: float, delta: float, alternative_value: float = 0.0) -> DgpSpec:
        kwargs = dict(
            T=self.T,
            c=c,
            delta=delta,
            innovation_kind=self.innovation_kind,
            nu=self.nu,
            b_kind=self.b_kind,
            kappa=self.kappa,
            zeta2=self.zeta2,
            seed=self.seed,
        )
        if self.alternative == "gamma1":
            kwargs["gamma1"] = alternative_value
        elif self.alternative == "zeta1":
            kwargs["zeta1"] = alternative_value
        return DgpSpec(**kwargs)


@dataclass(frozen=True)
class RejectionReport:
    """Counts per (c, delta, alternative, tau) cell"""

    grid: ExperimentGrid
    rejections: np.ndarray
    failures: np.ndarray
    population_slopes: np.ndarray
    provenance: Dict[str, str] = field(default_factory=dict)

    @property
    def valid(self) -> np.ndarray:
        return self.grid.replications - self.failures

    @property
    def rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.valid > 0, self.rejections / np.maximum(self.valid, 1), np.nan)

    @property
    def standard_errors(self) -> np.ndarray:
        p = self.rates
        return np.sqrt(p * (1.0 - p) / np.maximum(self.valid, 1))

    @property
    def invalid(self) -> np.ndarray:
        return self.failures > MAX_FAILURE_SHARE * self.grid.replications

    @property
    def simulated(self) -> int:
        """Replications that produced a decision"""
        return int(self.valid.sum())

    def to_frame(self) -> pd.DataFrame:
        g = self.grid
        rows = []
        for ci, c in enumerate(g.c_values):
            for di, delta in enumerate(g.delta_values):
                for ai, alt in enumerate(g.alternative_values):
                    for ti, tau in enumerate(g.taus):
                        slope = self.population_slopes[ai, ti]
                        rows.append({
                            "c": c,
                            "delta": delta,
                            g.alternative if g.alternative != "none" else "alternative": alt,
                            "tau": tau,
                            "rate": self.rates[ci, di, ai, ti],
                            "se": self.standard_errors[ci, di, ai, ti],
                            "rejections": int(self.rejections[ci, di, ai, ti]),
                            "failures": int(self.failures[ci, di, ai, ti]),
                            "invalid": bool(self.invalid[ci, di, ai, ti]),
                            "population_slope": slope,
                            "region": "size" if abs(slope) < 1e-12 else ("power" if slope > 0 else "negative"),
                        })
        return pd.DataFrame(rows)

    def layout(self, value: str = "rate") -> pd.DataFrame:
        """Wide table: size grids as c by tau per delta, power grids as tau by alternative per (c, delta)"""
        frame = self.to_frame()
        alt_col = frame.columns[2]
        if self.grid.alternative == "none":
            return frame.pivot_table(index=["delta", "c"], columns="tau", values=value, sort=False)
        return frame.pivot_table(index=["c", "delta", "tau"], columns=alt_col, values=value, sort=False)

    def header_lines(self) -> List[str]:
        g = self.grid
        lines = provenance_header(
            g.seed,
            label=g.label,
            test_kind=g.test_kind,
            T=g.T,
            replications=g.replications,
            innovation=g.innovation_kind + (f"({g.nu:g})" if g.nu else ""),
            common_random_numbers="across test kinds and alternative values",
            failures=int(self.failures.sum()),
        )
        lines += [f"# table.{k}={v}" for k, v in sorted(self.provenance.items())]
        return lines

    def write(self, path) -> Tuple[Path, Path]:
        """Rates file plus an `.se` companion with Monte Carlo standard errors"""
        path = Path(path)
        se_path = path.with_name(path.stem + ".se" + path.suffix)
        for target, value in ((path, "rate"), (se_path, "se")):
            body = self.layout(value).to_csv(float_format="%.4f", lineterminator="\n")
            write_report(target, self.header_lines(), body)
        return path, se_path


def _rejects(grid: ExperimentGrid, data, tau: float, tables: Optional[TableSet], cache: dict) -> bool:
    z = norm.ppf(1.0 - grid.alpha2 / 2.0)
    if grid.test_kind == "standard_t":
        return standard_t(solve_qr(data, tau), data) >= z
    if grid.test_kind == "standard_t_hac":
        fit = solve_qr(data, tau)
        return hac_t(fit, data, estimate_long_run(fit, data)).t_value >= z
    if "unit_root" not in cache:
        cache["unit_root"] = dfgls(data.predictor_path())
    thresholds = SwitchThresholds(alpha2=grid.alpha2)
    return switching_test(data, tau, tables, thresholds, unit_root=cache["unit_root"]).reject_right


def _run_block(task):
    grid, tables, ci, di, start, count = task
    c, delta = grid.c_values[ci], grid.delta_values[di]
    _, _, na, nt = grid.shape
    rejections = np.zeros((na, nt), dtype=int)
    failures = np.zeros((na, nt), dtype=int)
    specs = [grid.spec_for(c, delta, alt) for alt in grid.alternative_values]

    for rep in range(start, start + count):
        for ai, spec in enumerate(specs):
            # same key for every alternative value and test kind
            data = simulate(spec, streams.stream(grid.seed, streams.HARNESS, ci, di, rep))
            cache = {}
            for ti, tau in enumerate(grid.taus):
                try:
                    rejections[ai, ti] += bool(_rejects(grid, data, tau, tables, cache))
                except PredictabilityError as e:
                    failures[ai, ti] += 1
                    logger.debug("c=%g delta=%g rep=%d tau=%.2f failed: %s", c, delta, rep, tau, e)
    return ci, di, rejections, failures


def _load_tables(grid: ExperimentGrid) -> Optional[TableSet]:
    if grid.test_kind != "switching_fm":
        return None
    try:
        tables = load_table_set(grid.tables_dir, grid.alpha1_source, grid.z_source)
        tables.require_dfgls()
    except TableError as e:
        raise ConfigError(f"switching_fm experiments need critical-value tables: {e}", stage="harness") from e
    return tables


def _run(grid: ExperimentGrid) -> RejectionReport:
    tables = _load_tables(grid)
    nc, nd, na, nt = grid.shape
    logger.info(
        "Running %s: %d cells x %d replications (T=%d)", grid.label or grid.test_kind, nc * nd * na * nt,
        grid.replications, grid.T,
    )

    tasks = [
        (grid, tables, ci, di, start, min(REP_BLOCK, grid.replications - start))
        for ci in range(nc)
        for di in range(nd)
        for start in range(0, grid.replications, REP_BLOCK)
    ]
    rejections = np.zeros(grid.shape, dtype=int)
    failures = np.zeros(grid.shape, dtype=int)
    for ci, di, rej, fail in map_ordered(_run_block, tasks, grid.threads):
        rejections[ci, di] += rej
        failures[ci, di] += fail

    spec0 = grid.spec_for(grid.c_values[0], grid.delta_values[0])
    slopes = np.array([
        [population_quantile_slope(replace(spec0, **_alt_kwargs(grid, alt)), tau) for tau in grid.taus]
        for alt in grid.alternative_values
    ])

    report = RejectionReport(
        grid=grid,
        rejections=rejections,
        failures=failures,
        population_slopes=slopes,
        provenance=tables.provenance() if tables is not None else {},
    )
    n_invalid = int(report.invalid.sum())
    if failures.any():
        logger.warning("%d replications failed; %d cells exceed the failure limit", int(failures.sum()), n_invalid)
    return report


def _alt_kwargs(grid: ExperimentGrid, value: float) -> dict:
    if grid.alternative == "gamma1":
        return {"gamma1": value}
    if grid.alternative == "zeta1":
        return {"zeta1": value}
    return {}


def run_size(grid: ExperimentGrid) -> RejectionReport:
    """Null rejection rates of the right-tailed test"""
    if grid.alternative != "none":
        raise DomainError("run_size takes a grid without an alternative axis; use run_power")
    return _run(grid)


def run_power(grid: ExperimentGrid) -> RejectionReport:
    """Rejection rates along an alternative axis; cells with zero population slope count as size"""
    if grid.alternative == "none":
        raise DomainError("run_power needs an alternative axis (gamma1 or zeta1)")
    return _run(grid)


# Published experiment designs

SIZE_C = (0.0, -5.0, -10.0, -25.0, -50.0, -200.0)
POWER_C = (-5.0, -10.0, -25.0)
POWER_DELTA = (-0.95, -0.5)
POWER_TAUS = (0.1, 0.3, 0.5, 0.7, 0.9)
GAMMA1_STEPS = (0.0, 0.0125, 0.025, 0.0375, 0.05, 0.0625)
ZETA1_STEPS = (0.0, 2.236, 4.472, 6.708, 8.944, 11.180)


def presets(table: int, **overrides) -> List[ExperimentGrid]:
    """Experiment grids reproducing a published size or power table"""
    common = dict(T=400)
    if table == 3:
        grids = [ExperimentGrid(test_kind="standard_t", c_values=SIZE_C, label="table3", **common)]
    elif table == 4:
        grids = [ExperimentGrid(test_kind="switching_fm", c_values=SIZE_C, label="table4", **common)]
    elif table == 5:
        panels = (("A", "gjr_mix", 8.0), ("B", "gjr_only", 8.0), ("C", "t_only", 3.0))
        grids = [
            ExperimentGrid(
                test_kind="switching_fm", c_values=SIZE_C, delta_values=(-0.95,), innovation_kind=kind, nu=nu,
                label=f"table5{panel}", **common,
            )
            for panel, kind, nu in panels
        ]
    elif table == 6:
        grids = [ExperimentGrid(
            test_kind="switching_fm", c_values=POWER_C, delta_values=POWER_DELTA, taus=POWER_TAUS,
            alternative="gamma1", alternative_values=GAMMA1_STEPS, label="table6", **common,
        )]
    elif table == 7:
        grids = [ExperimentGrid(
            test_kind="switching_fm", c_values=POWER_C, delta_values=POWER_DELTA, taus=(0.5, 0.7, 0.9),
            alternative="zeta1", alternative_values=ZETA1_STEPS, b_kind="identity", kappa=0.25, zeta2=100.0,
            label="table7", **common,
        )]
    else:
        raise ConfigError(f"no experiment preset for table {table}; choose 3, 4, 5, 6 or 7")
    return [replace(g, **overrides) for g in grids]


def run_grid(grid: ExperimentGrid) -> RejectionReport:
    return run_size(grid) if grid.alternative == "none" else run_power(grid)
