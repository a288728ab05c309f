#!/usr/bin/env python3
"""
Quantile Predictability Toolkit - command-line application
Switching-FM predictive quantile regression tests, critical-value tables
and Monte Carlo experiments
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config import Config
from core import __version__
from core import tables as cv
from core.data_feeds import EmpiricalConfig, GoyalWelchFeed
from core.engine import PredictabilityEngine
from core.exceptions import ConfigError, PredictabilityError
from core.harness import presets, run_grid
from core.output import provenance_header, write_report

logger = logging.getLogger("predictability")

TABLE_KINDS = ("z", "dfgls", "alpha1", "thresholds", "all")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="predictability", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="config.json", help="JSON config file")
    common.add_argument("--tables-dir", help="directory holding generated table files")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--alpha2", type=float, help="nominal two-sided level")
    common.add_argument("--alpha1-source", choices=("paper", "generated"))
    common.add_argument("--z-source", choices=("paper", "generated"))
    scale = common.add_mutually_exclusive_group()
    scale.add_argument("--paper-scale", action="store_true", help="use the published simulation sizes")
    scale.add_argument(
        "--desk-scale", dest="paper_scale", action="store_false", default=False, help="use the desk-scale sizes (default)"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", help="monthly CSV file")
    data.add_argument("--predictor", choices=("dp", "ep", "bm", "custom"))
    data.add_argument("--custom-column")
    data.add_argument("--span", nargs=2, type=int, metavar=("FIRST", "LAST"), help="yyyymm bounds")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", parents=[common, data], help="switching-FM test at each quantile level")
    p.add_argument("--tau-list", help="comma-separated quantile levels")
    p.add_argument("--output", help="report path (stdout when omitted)")

    p = sub.add_parser("indicators", parents=[common, data], help="persistence and endogeneity summary")
    p.add_argument("--output")

    sub.add_parser("ingest-check", parents=[common, data], help="validate the input file")

    p = sub.add_parser("gen-tables", parents=[common], help="simulate critical-value tables")
    p.add_argument("--kind", choices=TABLE_KINDS, default="all")

    p = sub.add_parser("mc", parents=[common], help="size and power experiments")
    p.add_argument("--table", type=int, required=True, choices=(3, 4, 5, 6, 7))
    p.add_argument("--reps", type=int, help="replications per cell")
    p.add_argument("--output-dir", default="results")
    return parser


def parse_taus(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise ConfigError(f"bad --tau-list {text!r}", stage="config") from e


def setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


class PredictabilityApp:
    def __init__(self, argv: Optional[List[str]] = None):
        self.args = build_parser().parse_args(argv)
        setup_logging(self.args.verbose)
        self.config: Optional[Config] = None

    def apply_overrides(self):
        """Command-line flags take precedence over the config file"""
        a = self.args
        overrides = {
            "tables_dir": a.tables_dir,
            "seed": a.seed,
            "threads": a.threads,
            "alpha2": a.alpha2,
            "alpha1_source": a.alpha1_source,
            "z_source": a.z_source,
            "input_path": getattr(a, "input", None),
            "predictor": getattr(a, "predictor", None),
            "custom_column": getattr(a, "custom_column", None),
            "date_span": list(a.span) if getattr(a, "span", None) else None,
            "output_path": getattr(a, "output", None),
        }
        if getattr(a, "tau_list", None):
            overrides["taus"] = parse_taus(a.tau_list)
        for key, value in overrides.items():
            if value is not None:
                self.config.set(key, value, validate=False)
        self.config.validate()

    def run(self) -> int:
        """Dispatch the sub-command; nonzero exit on any failed stage"""
        try:
            self.config = Config.load(self.args.config)
            self.apply_overrides()
            handler = {
                "test": self.cmd_test,
                "indicators": self.cmd_indicators,
                "ingest-check": self.cmd_ingest_check,
                "gen-tables": self.cmd_gen_tables,
                "mc": self.cmd_mc,
            }[self.args.command]
            return handler()
        except PredictabilityError as e:
            module = type(e).__module__.rsplit(".", 1)[-1]
            logger.error("%s/%s: %s", module, e.stage or self.args.command, e.args[0] if e.args else e)
            return 1
        except OSError as e:
            logger.error("io/%s: %s", self.args.command, e)
            return 1

    # Data Commands

    def _feed(self) -> GoyalWelchFeed:
        if not self.config.input_path:
            raise ConfigError("--input is required", stage="ingest")
        return GoyalWelchFeed(EmpiricalConfig.from_config(self.config))

    def cmd_ingest_check(self) -> int:
        feed = self._feed()
        frame = feed.load()
        y, x = feed.ingest()
        print(f"rows read:    {feed.rows_read}")
        print(f"rows trimmed: {feed.rows_trimmed}")
        print(f"span:         {int(frame['date'].iloc[0])}-{int(frame['date'].iloc[-1])}")
        print(f"predictor:    {x.label}")
        print(f"T:            {len(y) - 1}")
        return 0

    def cmd_test(self) -> int:
        y, x = self._feed().ingest()
        engine = PredictabilityEngine(self.config)
        report = engine.run_test(y, x)
        if self.config.output_path:
            engine.write_report(report, self.config.output_path, {"predictor": x.label, "input": self.config.input_path})
        else:
            print(engine.layout(report).to_string(float_format=lambda v: f"{v:.4f}"))
        return 0

    def cmd_indicators(self) -> int:
        y, x = self._feed().ingest()
        engine = PredictabilityEngine(self.config)
        summary = engine.preliminary_indicators(y, x)
        if self.config.output_path:
            engine.write_indicators(summary, self.config.output_path, {"predictor": x.label, "input": self.config.input_path})
        else:
            print(summary.to_string())
        return 0

    # Simulation Commands

    def cmd_gen_tables(self) -> int:
        cfg = self.config
        out = Path(cfg.tables_dir)
        out.mkdir(parents=True, exist_ok=True)
        kinds = ("z", "dfgls", "alpha1", "thresholds") if self.args.kind == "all" else (self.args.kind,)
        paper = self.args.paper_scale

        z_table = None
        if "z" in kinds:
            sim_T, reps = cfg.table_scale("z", paper)
            z_table = cv.build_z_table(sim_T=sim_T, reps=reps, seed=cfg.seed, threads=cfg.threads)
            cv.save_table(z_table, out / cv.FILE_NAMES[cv.Z_PERCENTILES])

        if "dfgls" in kinds:
            sim_T, reps = cfg.table_scale("dfgls", paper)
            table = cv.simulate_dfgls_quantiles(sim_T=sim_T, reps=reps, seed=cfg.seed, threads=cfg.threads)
            cv.save_table(table, out / cv.FILE_NAMES[cv.DFGLS_QUANTILES])

        if "alpha1" in kinds or "thresholds" in kinds:
            tables = cv.load_table_set(out, alpha1_source="paper", z_source="generated" if z_table else cfg.z_source)
            dfgls_table = tables.require_dfgls()

            if "alpha1" in kinds:
                sim_T, reps = cfg.table_scale("alpha1", paper)
                table = cv.calibrate_alpha1(
                    dfgls_table, tables.z, thresholds=cfg.thresholds(),
                    sim_T=sim_T, reps=reps, seed=cfg.seed, threads=cfg.threads,
                )
                cv.save_table(table, out / cv.FILE_NAMES[cv.ALPHA1_LEVELS])

            if "thresholds" in kinds:
                sim_T, reps = cfg.table_scale("thresholds", paper)
                chosen, frame = cv.select_switch_threshold(
                    dfgls_table, tables.z, alpha2=cfg.alpha2, epsilon=cfg.epsilon,
                    sim_T=sim_T, reps=reps, seed=cfg.seed, threads=cfg.threads,
                )
                header = provenance_header(
                    cfg.seed, chosen_c_bar_L=f"{chosen.c_bar_L:g}", chosen_c_under_L=f"{chosen.c_under_L:g}"
                )
                write_report(out / "thresholds.csv", header, frame.to_csv(index=False, float_format="%.6g", lineterminator="\n"))
        return 0

    def cmd_mc(self) -> int:
        cfg = self.config
        reps = self.args.reps or cfg.mc_replications(self.args.paper_scale)
        grids = presets(
            self.args.table,
            replications=reps,
            seed=cfg.seed,
            threads=cfg.threads,
            alpha2=cfg.alpha2,
            tables_dir=cfg.tables_dir,
            alpha1_source=cfg.alpha1_source,
            z_source=cfg.z_source,
            **cfg.grid_overrides(),
        )
        out = Path(self.args.output_dir)
        for grid in grids:
            report = run_grid(grid)
            report.write(out / f"{grid.label}.csv")
        return 0


def main():
    """Application entry point"""
    app = PredictabilityApp()
    sys.exit(app.run())


if __name__ == "__main__":
    main()
