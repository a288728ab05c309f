"""
Shared fixtures: seeded generators, small synthetic datasets and critical-value tables
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import norm

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core import streams  # noqa: E402
from core.paper_tables import paper_alpha1_table, paper_z_table  # noqa: E402
from core.series import TimeSeries, align_predictive  # noqa: E402
from core.tables import (  # noqa: E402
    DFGLS_C_GRID,
    DFGLS_LEVELS,
    DFGLS_QUANTILES,
    FILE_NAMES,
    CriticalValueTable,
    TableSet,
    save_table,
    simulate_dfgls_quantiles,
)

# synthetic DF-GLS quantiles: SHIFT + SLOPE * c + Phi^-1(level), exact under linear interpolation
DFGLS_SHIFT = -0.5
DFGLS_SLOPE = 0.05


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run Monte Carlo acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo acceptance test, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def make_dfgls_table(shift: float = DFGLS_SHIFT, slope: float = DFGLS_SLOPE) -> CriticalValueTable:
    values = shift + slope * DFGLS_C_GRID[:, None] + norm.ppf(DFGLS_LEVELS)[None, :]
    return CriticalValueTable(
        kind=DFGLS_QUANTILES,
        c_grid=DFGLS_C_GRID,
        delta_grid=np.empty(0),
        alpha_grid=DFGLS_LEVELS,
        values=values,
        sim_T=2000,
        replications=100_000,
        seed=0,
        source="synthetic",
    )


def predictive_data(T=300, phi=0.95, delta=-0.5, gamma1=0.0, seed=1):
    """AR(1) predictor with innovations correlated with the return noise"""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(T + 1)
    e = delta * v + np.sqrt(1.0 - delta ** 2) * rng.standard_normal(T + 1)
    x = np.zeros(T + 1)
    for t in range(1, T + 1):
        x[t] = phi * x[t - 1] + v[t]
    y = np.zeros(T + 1)
    y[1:] = gamma1 * x[:-1] + e[1:]
    return TimeSeries(y, label="y"), TimeSeries(x, label="x")


@pytest.fixture
def rng():
    return streams.stream(12345, 99)


@pytest.fixture
def dfgls_table():
    return make_dfgls_table()


@pytest.fixture
def table_set(dfgls_table):
    return TableSet(z=paper_z_table(), alpha1=paper_alpha1_table(), dfgls=dfgls_table)


@pytest.fixture
def series_pair():
    return predictive_data()


@pytest.fixture
def dataset(series_pair):
    y, x = series_pair
    return align_predictive(y, x)


@pytest.fixture(scope="session")
def simulated_dfgls_table():
    """Desk-scale DF-GLS quantiles, built once for the Monte Carlo acceptance tests"""
    return simulate_dfgls_quantiles(seed=0, threads=4)


@pytest.fixture(scope="session")
def simulated_tables_dir(tmp_path_factory, simulated_dfgls_table):
    path = tmp_path_factory.mktemp("tables")
    save_table(simulated_dfgls_table, path / FILE_NAMES[DFGLS_QUANTILES])
    return path
