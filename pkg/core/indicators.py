"""
Valuation-ratio predictors built from the monthly market file
"""

import numpy as np
import pandas as pd
from typing import List

from .exceptions import DomainError, IngestError


class PredictorBuilder:
    """Turn role-named price, dividend, earnings and book-to-market columns into predictors"""

    PREDICTORS = ("dp", "ep", "bm", "custom")
    ROLES = {
        "dp": ["price", "dividends"],
        "ep": ["price", "earnings"],
        "bm": ["book_to_market"],
        "custom": ["custom"],
    }

    def __init__(self, config):
        self.config = config
        if config.predictor not in self.PREDICTORS:
            raise IngestError(f"unknown predictor {config.predictor!r}", stage="ingest")

    @property
    def label(self) -> str:
        if self.config.predictor == "custom":
            return self.config.custom_column
        return self.config.predictor

    def required_roles(self) -> List[str]:
        return list(self.ROLES[self.config.predictor])

    def build(self, frame: pd.DataFrame) -> pd.Series:
        """Predictor series for the configured choice"""
        name = self.config.predictor
        if name == "dp":
            return self._log_ratio(frame["dividends"], frame["price"], "dividends")
        if name == "ep":
            return self._log_ratio(frame["earnings"], frame["price"], "earnings")
        if name == "bm":
            return frame["book_to_market"].astype(float)
        return frame["custom"].astype(float)

    def _log_ratio(self, numerator: pd.Series, price: pd.Series, what: str) -> pd.Series:
        """log(12-month sum / price)"""
        ratio = numerator / price
        if (ratio <= 0).any():
            row = int(np.argmax((ratio <= 0).to_numpy()))
            raise DomainError(f"non-positive {what}/price ratio at row {row}", stage="ingest")
        return np.log(ratio)
