"""
Configuration management for the quantile predictability toolkit
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Tuple

from core.dgp import DgpSpec
from core.exceptions import ConfigError
from core.harness import GRID_DGP_FIELDS
from core.longrun import KERNELS
from core.output import write_atomic
from core.tables import SwitchThresholds

logger = logging.getLogger(__name__)

DEFAULT_COLUMN_MAP = {
    "date": "yyyymm",
    "price": "Index",
    "dividends": "D12",
    "earnings": "E12",
    "book_to_market": "b/m",
    "riskfree": "Rfree",
    "market_return": "CRSP_SPvw",
}

# (sim_T, replications) per table kind at desk and published scale
TABLE_SCALES = {
    "z": {"desk": (2000, 200_000), "paper": (10_000, 1_000_000)},
    "dfgls": {"desk": (2000, 100_000), "paper": (5000, 200_000)},
    "alpha1": {"desk": (5000, 10_000), "paper": (5000, 10_000)},
    "thresholds": {"desk": (5000, 10_000), "paper": (5000, 10_000)},
}


@dataclass
class Config:
    """Application configuration settings"""

    # Estimation Settings
    kernel: str = "parzen"
    lag_constant: float = 1.3
    prewhiten_sigma: bool = True
    eigen_floor: float = 1e-12
    grid_step: float = 0.25
    alpha2: float = 0.1
    taus: List[float] = None
    c_bar_L: float = -90.0
    c_under_L: float = -100.0
    epsilon: float = 0.04

    # Table Settings
    tables_dir: str = "tables"
    alpha1_source: str = "paper"
    z_source: str = "paper"
    table_scales: Dict[str, Dict[str, List[int]]] = None

    # Data Settings
    input_path: str = ""
    output_path: str = ""
    predictor: str = "dp"
    custom_column: str = ""
    column_map: Dict[str, str] = None
    date_span: List[int] = None

    # Monte Carlo Settings
    replications: int = 2000
    paper_replications: int = 10_000
    seed: int = 0
    threads: int = 1
    dgp: Dict[str, Any] = None

    def __post_init__(self):
        if self.taus is None:
            self.taus = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        if self.column_map is None:
            self.column_map = dict(DEFAULT_COLUMN_MAP)
        else:
            self.column_map = {**DEFAULT_COLUMN_MAP, **self.column_map}
        if self.table_scales is None:
            self.table_scales = {k: {s: list(v) for s, v in d.items()} for k, d in TABLE_SCALES.items()}
        if self.dgp is None:
            self.dgp = {}
        self.validate()

    def validate(self):
        """Reject settings no stage could run with"""
        taus = list(self.taus)
        if not taus or not all(0.0 < t < 1.0 for t in taus):
            raise ConfigError(f"taus must lie in (0, 1): {taus}", stage="config")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ConfigError(f"taus must be strictly increasing: {taus}", stage="config")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {sorted(KERNELS)}, got {self.kernel!r}", stage="config")
        if not (0.0 < self.alpha2 < 1.0):
            raise ConfigError(f"alpha2 must lie in (0, 1), got {self.alpha2}", stage="config")
        for name in ("alpha1_source", "z_source"):
            if getattr(self, name) not in ("paper", "generated"):
                raise ConfigError(f"{name} must be 'paper' or 'generated'", stage="config")
        if self.predictor not in ("dp", "ep", "bm", "custom"):
            raise ConfigError(f"predictor must be dp, ep, bm or custom, got {self.predictor!r}", stage="config")
        if self.predictor == "custom" and not self.custom_column:
            raise ConfigError("predictor=custom needs custom_column", stage="config")
        if self.date_span is not None and len(self.date_span) != 2:
            raise ConfigError("date_span takes [first yyyymm, last yyyymm]", stage="config")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}", stage="config")

    @classmethod
    def load(cls, config_path: str = "config.json") -> "Config":
        """Load configuration from JSON file; a missing file yields defaults"""
        if not os.path.exists(config_path):
            logger.debug("No config file at %s, using defaults", config_path)
            return cls()
        try:
            with open(config_path, "r") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read {config_path}: {e}", stage="config") from e

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown keys in {config_path}: {', '.join(unknown)}", stage="config")
        return cls(**data)

    def save(self, config_path: str = "config.json"):
        """Save configuration to JSON file"""
        write_atomic(config_path, json.dumps(asdict(self), indent=2))

    def set(self, key: str, value: Any, validate: bool = True):
        """Set configuration value"""
        if key not in {f.name for f in fields(self)}:
            raise ConfigError(f"unknown setting {key!r}", stage="config")
        setattr(self, key, value)
        if validate:
            self.validate()

    def thresholds(self) -> SwitchThresholds:
        return SwitchThresholds(
            c_bar_L=self.c_bar_L, c_under_L=self.c_under_L, alpha2=self.alpha2, epsilon=self.epsilon
        )

    def table_scale(self, kind: str, paper_scale: bool = False) -> Tuple[int, int]:
        try:
            sim_T, reps = self.table_scales[kind]["paper" if paper_scale else "desk"]
        except KeyError as e:
            raise ConfigError(f"no table scale configured for {kind!r}", stage="config") from e
        return int(sim_T), int(reps)

    def mc_replications(self, paper_scale: bool = False) -> int:
        return self.paper_replications if paper_scale else self.replications

    def dgp_spec(self) -> DgpSpec:
        try:
            return DgpSpec(**{"seed": self.seed, **self.dgp})
        except TypeError as e:
            raise ConfigError(f"invalid dgp section: {e}", stage="config") from e

    def grid_overrides(self) -> Dict[str, Any]:
        """Experiment-grid settings taken from the dgp section"""
        spec = self.dgp_spec()
        ignored = sorted(set(self.dgp) - set(GRID_DGP_FIELDS))
        if ignored:
            logger.warning("dgp settings %s are set per experiment and ignored", ", ".join(ignored))
        return {k: getattr(spec, k) for k in GRID_DGP_FIELDS if k in self.dgp}
