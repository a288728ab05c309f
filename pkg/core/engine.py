"""
Empirical engine: per-quantile switching-FM results and preliminary
persistence indicators for one return / predictor pair
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
import statsmodels.api as sm

from .exceptions import PredictabilityError, TableError
from .fmtest import SwitchingFMResult, switching_test
from .output import provenance_header, write_report
from .quantreg import standard_t
from .series import PredictiveDataset, TimeSeries, align_predictive
from .tables import TableSet, load_table_set
from .unitroot import dfgls, stock_ci

logger = logging.getLogger(__name__)

INDICATOR_ALPHA1 = 0.05

# row order of the per-quantile report
REPORT_ROWS = [
    "gamma1_hat", "t_std", "t_hac", "delta_tau",
    "cL_right", "cU_right", "cL_left", "cU_left",
    "gamma1_lower", "gamma1_upper",
]


class PredictabilityEngine:
    """Runs the switching-FM test across quantile levels"""

    def __init__(self, config, tables: Optional[TableSet] = None):
        self.config = config
        self._tables = tables
        self.results: List[SwitchingFMResult] = []

    @property
    def tables(self) -> TableSet:
        if self._tables is None:
            self._tables = load_table_set(
                self.config.tables_dir, self.config.alpha1_source, self.config.z_source
            )
        return self._tables

    def dataset(self, y: TimeSeries, x: TimeSeries) -> PredictiveDataset:
        return align_predictive(y, x)

    def run_test(self, y: TimeSeries, x: TimeSeries, taus=None) -> pd.DataFrame:
        """One row per quantile level with estimates, intervals and decisions"""
        data = self.dataset(y, x)
        taus = list(self.config.taus if taus is None else taus)
        tables = self.tables
        tables.require_dfgls()
        unit_root = dfgls(data.predictor_path())
        logger.info("T=%d, DF-GLS t=%.4f (lags=%d)", data.T, unit_root.t_stat, unit_root.lags)

        self.results = []
        rows = []
        for tau in taus:
            try:
                result = switching_test(
                    data,
                    tau,
                    tables,
                    thresholds=self.config.thresholds(),
                    grid_step=self.config.grid_step,
                    kernel=self.config.kernel,
                    lag_constant=self.config.lag_constant,
                    prewhiten_sigma=self.config.prewhiten_sigma,
                    eigen_floor=self.config.eigen_floor,
                    unit_root=unit_root,
                )
                t_std = standard_t(result.fit, data, result.long_run.delta_fz_hat)
            except PredictabilityError as e:
                e.stage = f"tau={tau:.2f}/{e.stage or 'test'}"
                raise
            self.results.append(result)
            rows.append(self._row(result, t_std))
        return pd.DataFrame(rows)

    def _row(self, r: SwitchingFMResult, t_std: float) -> Dict:
        marker = ">" if r.reject_right else ("<" if r.reject_left else "")
        return {
            "tau": r.tau,
            "gamma1_hat": r.fit.gamma1,
            "t_std": t_std,
            "t_hac": r.hac.t_value,
            "delta_tau": r.long_run.delta_tau,
            "alpha1_left": r.left.alpha1,
            "alpha1_right": r.right.alpha1,
            "cL_right": r.right.ci_c.c_lower,
            "cU_right": r.right.ci_c.c_upper,
            "cL_left": r.left.ci_c.c_lower,
            "cU_left": r.left.ci_c.c_upper,
            "branch_right": r.right.branch,
            "branch_left": r.left.branch,
            "gamma1_lower": r.gamma1_lower,
            "gamma1_upper": r.gamma1_upper,
            "reject_right": r.reject_right,
            "reject_left": r.reject_left,
            "marker": marker,
            "notes": "; ".join(r.notes),
        }

    @staticmethod
    def layout(report: pd.DataFrame) -> pd.DataFrame:
        """Statistics down the rows, quantile levels across the columns"""
        wide = report.set_index("tau")[REPORT_ROWS + ["marker"]].T
        wide.columns = [f"{t:.1f}" for t in wide.columns]
        return wide

    def preliminary_indicators(self, y: TimeSeries, x: TimeSeries) -> pd.Series:
        """Persistence and endogeneity summary of the predictor"""
        data = self.dataset(y, x)
        unit_root = dfgls(data.predictor_path())

        values = {
            "T": data.T,
            "dfgls_t": unit_root.t_stat,
            "phi_hat": unit_root.phi_hat,
            "lags": unit_root.lags,
        }
        if self._tables is not None or self.config.tables_dir:
            try:
                ci = stock_ci(unit_root, INDICATOR_ALPHA1, self.tables.require_dfgls())
                phi_l, phi_u = ci.phi_bounds(data.T)
                values.update({"cL_0.95": ci.c_lower, "cU_0.95": ci.c_upper, "phiL_0.95": phi_l, "phiU_0.95": phi_u})
            except PredictabilityError as e:
                logger.warning("Skipping the interval on c: %s", e)

        values["residual_corr"] = self._residual_correlation(data, unit_root)
        return pd.Series(values, name=x.label)

    @staticmethod
    def _residual_correlation(data: PredictiveDataset, unit_root) -> float:
        """corr(ADF-regression residual, OLS return residual) on shared dates"""
        u = np.asarray(sm.OLS(data.y, data.design()).fit().resid)
        # predictor path index k pairs with dataset position k - 1
        positions = np.asarray(unit_root.residual_index) - 1
        keep = (positions >= 0) & (positions < data.T)
        return float(np.corrcoef(unit_root.residuals[keep], u[positions[keep]])[0, 1])

    def _header(self, extra: Optional[Dict[str, str]] = None) -> List[str]:
        entries = {"alpha2": f"{self.config.alpha2:g}"}
        try:
            entries.update({f"table.{k}": v for k, v in sorted(self.tables.provenance().items())})
        except TableError as e:
            logger.debug("No table provenance for the header: %s", e)
        entries.update(sorted((extra or {}).items()))
        return provenance_header(self.config.seed, **entries)

    def write_report(self, report: pd.DataFrame, path, extra: Optional[Dict[str, str]] = None) -> Path:
        """Per-quantile report with a provenance header"""
        body = report.to_csv(index=False, float_format="%.6g", lineterminator="\n")
        return write_report(path, self._header(extra), body)

    def write_indicators(self, summary: pd.Series, path, extra: Optional[Dict[str, str]] = None) -> Path:
        """One-row indicator summary with the same provenance header"""
        body = summary.to_frame().T.to_csv(index=False, float_format="%.6g", lineterminator="\n")
        return write_report(path, self._header(extra), body)
