"""
Monthly market data ingestion for Goyal-Welch style CSV files
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .exceptions import ColumnError, GapError, IngestError, ParseError
from .indicators import PredictorBuilder
from .series import TimeSeries

logger = logging.getLogger(__name__)

MISSING_TOKENS = {"", "na", "nan", "null", "."}


@dataclass(frozen=True)
class EmpiricalConfig:
    """Everything the empirical test needs to know about the input file"""

    input_path: str
    predictor: str = "dp"
    column_map: Dict[str, str] = field(default_factory=dict)
    custom_column: str = ""
    date_span: Optional[Tuple[int, int]] = None
    taus: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    alpha2: float = 0.1
    tables_dir: str = "tables"
    output_path: str = ""

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if not taus or not all(0.0 < t < 1.0 for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
            raise IngestError(f"taus must be strictly increasing within (0, 1): {taus}", stage="config")
        object.__setattr__(self, "taus", taus)

    @classmethod
    def from_config(cls, config, **overrides) -> "EmpiricalConfig":
        values = dict(
            input_path=config.input_path,
            predictor=config.predictor,
            column_map=dict(config.column_map),
            custom_column=config.custom_column,
            date_span=tuple(config.date_span) if config.date_span else None,
            taus=tuple(config.taus),
            alpha2=config.alpha2,
            tables_dir=config.tables_dir,
            output_path=config.output_path,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def return_column(self) -> str:
        return self.column_map["market_return"]

    @property
    def riskfree_column(self) -> str:
        return self.column_map["riskfree"]


def month_index(yyyymm: pd.Series) -> pd.Series:
    """yyyymm -> consecutive month counter"""
    return (yyyymm // 100) * 12 + (yyyymm % 100) - 1


class GoyalWelchFeed:
    """Reads the monthly file and hands out aligned return and predictor series"""

    def __init__(self, config: EmpiricalConfig):
        self.config = config
        self.builder = PredictorBuilder(config)
        self.rows_read = 0
        self.rows_trimmed = 0

    def required_roles(self) -> List[str]:
        return ["date", "market_return", "riskfree"] + self.builder.required_roles()

    def _column(self, role: str) -> str:
        if role == "custom":
            return self.config.custom_column
        try:
            return self.config.column_map[role]
        except KeyError as e:
            raise ColumnError(f"no column mapped for role {role!r}", stage="ingest") from e

    def _read_raw(self) -> pd.DataFrame:
        path = Path(self.config.input_path)
        if not path.exists():
            raise IngestError(f"input file not found: {path}", stage="ingest")
        try:
            raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            raise IngestError(f"cannot parse {path}: {e}", stage="ingest") from e
        raw.columns = [c.strip() for c in raw.columns]
        self.rows_read = len(raw)
        return raw

    def _parse_numbers(self, raw: pd.DataFrame) -> pd.DataFrame:
        """Role-named numeric frame; missing entries become NaN, garbage raises"""
        out = {}
        for role in self.required_roles():
            column = self._column(role)
            if column not in raw.columns:
                raise ColumnError(f"column {column!r} (role {role}) not found in {self.config.input_path}", stage="ingest")
            text = raw[column].str.strip()
            missing = text.str.lower().isin(MISSING_TOKENS)
            numbers = pd.to_numeric(text.str.replace(",", "", regex=False).where(~missing), errors="coerce")
            bad = numbers.isna() & ~missing
            if bad.any():
                row = int(np.argmax(bad.to_numpy()))
                raise ParseError(
                    f"row {row + 2}: cannot parse {text.iloc[row]!r} in column {column!r}", stage="ingest"
                )
            out[role] = numbers
        frame = pd.DataFrame(out)
        if frame["date"].isna().any():
            row = int(np.argmax(frame["date"].isna().to_numpy()))
            raise ParseError(f"row {row + 2}: missing date", stage="ingest")
        frame["date"] = frame["date"].astype(np.int64)
        return frame

    def load(self) -> pd.DataFrame:
        """Numeric frame over the configured span, edge-trimmed and contiguity-checked"""
        frame = self._parse_numbers(self._read_raw())
        if self.config.date_span:
            first, last = self.config.date_span
            frame = frame[(frame["date"] >= first) & (frame["date"] <= last)]
        frame = frame.sort_values("date").reset_index(drop=True)
        if frame.empty:
            raise IngestError("no rows fall inside the requested span", stage="ingest")

        complete = frame.notna().all(axis=1).to_numpy()
        if not complete.any():
            raise GapError("no row has every required field", stage="ingest")
        start = int(np.argmax(complete))
        stop = len(complete) - int(np.argmax(complete[::-1]))
        self.rows_trimmed = len(frame) - (stop - start)
        if self.rows_trimmed:
            logger.info("Trimmed %d incomplete edge rows", self.rows_trimmed)
        frame = frame.iloc[start:stop].reset_index(drop=True)

        interior = ~frame.notna().all(axis=1)
        if interior.any():
            bad = frame.loc[interior.idxmax()]
            cols = [self._column(r) for r in self.required_roles() if pd.isna(bad[r])]
            raise GapError(f"missing {', '.join(cols)} at {int(bad['date'])} inside the sample", stage="ingest")

        months = month_index(frame["date"])
        jumps = np.nonzero(np.diff(months.to_numpy()) != 1)[0]
        if jumps.size:
            i = jumps[0]
            raise GapError(
                f"rows are not consecutive months: {frame['date'].iloc[i]} is followed by {frame['date'].iloc[i + 1]}",
                stage="ingest",
            )
        return frame

    def ingest(self) -> Tuple[TimeSeries, TimeSeries]:
        """Excess return y_t and the predictor x_t on the same months"""
        frame = self.load()
        excess = frame["market_return"] - frame["riskfree"]
        predictor = self.builder.build(frame)
        period = int(frame["date"].iloc[0])
        y = TimeSeries(excess.to_numpy(), label="excess_return", period=period)
        x = TimeSeries(predictor.to_numpy(), label=self.builder.label, period=period)
        logger.info(
            "Ingested %d months %d-%d, predictor %s", len(frame), period, int(frame["date"].iloc[-1]), x.label
        )
        return y, x
