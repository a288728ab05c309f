import numpy as np
import pytest

from config import DEFAULT_COLUMN_MAP, Config
from core.data_feeds import EmpiricalConfig, GoyalWelchFeed, month_index
from core.exceptions import ColumnError, DomainError, GapError, IngestError, ParseError
from core.indicators import PredictorBuilder

HEADER = "yyyymm,Index,D12,E12,b/m,Rfree,CRSP_SPvw,ntis"


def months(start_year, n):
    out = []
    year, month = start_year, 1
    for _ in range(n):
        out.append(year * 100 + month)
        month += 1
        if month > 12:
            year, month = year + 1, 1
    return out


def market_rows(n=40):
    rng = np.random.default_rng(0)
    rows = []
    for i, date in enumerate(months(1926, n)):
        price = 10.0 + i * 0.1
        rows.append([
            str(date), f"{price:.4f}", f"{0.5 + 0.01 * i:.4f}", f"{0.8 + 0.01 * i:.4f}", f"{0.6:.4f}",
            "0.003", f"{0.01 * rng.standard_normal():.5f}", f"{0.02 * i:.4f}",
        ])
    return rows


def write_csv(path, rows, header=HEADER):
    path.write_text(header + "\n" + "\n".join(",".join(r) for r in rows) + "\n")
    return path


def feed_for(path, **kw):
    values = dict(input_path=str(path), column_map=dict(DEFAULT_COLUMN_MAP))
    values.update(kw)
    return GoyalWelchFeed(EmpiricalConfig(**values))


def test_month_index_is_consecutive_across_years():
    import pandas as pd

    idx = month_index(pd.Series([192611, 192612, 192701]))
    assert list(np.diff(idx)) == [1, 1]


def test_dividend_price_ingest(tmp_path):
    rows = market_rows()
    y, x = feed_for(write_csv(tmp_path / "gw.csv", rows)).ingest()
    assert len(y) == len(x) == 40
    assert y.period == 192601
    assert y.values[0] == pytest.approx(float(rows[0][6]) - 0.003)
    assert x.values[0] == pytest.approx(np.log(0.5 / 10.0))
    assert x.label == "dp"


def test_earnings_price(tmp_path):
    rows = market_rows()
    _, x = feed_for(write_csv(tmp_path / "gw.csv", rows), predictor="ep").ingest()
    assert x.values[5] == pytest.approx(np.log(float(rows[5][3]) / float(rows[5][1])))


def test_custom_column_passes_through(tmp_path):
    rows = market_rows()
    _, x = feed_for(write_csv(tmp_path / "gw.csv", rows), predictor="custom", custom_column="ntis").ingest()
    np.testing.assert_allclose(x.values, [float(r[7]) for r in rows])
    assert x.label == "ntis"


def test_thousands_separators(tmp_path):
    rows = market_rows()
    rows[3][1] = '"1,234.5"'
    _, x = feed_for(write_csv(tmp_path / "gw.csv", rows)).ingest()
    assert x.values[3] == pytest.approx(np.log(float(rows[3][2]) / 1234.5))


def test_edge_rows_trimmed(tmp_path):
    rows = market_rows()
    rows[0][2] = "NaN"
    rows[-1][6] = ""
    feed = feed_for(write_csv(tmp_path / "gw.csv", rows))
    y, _ = feed.ingest()
    assert len(y) == 38
    assert y.period == 192602
    assert feed.rows_trimmed == 2
    assert feed.rows_read == 40


def test_interior_gap_names_the_month(tmp_path):
    rows = market_rows()
    rows[10][2] = ""
    with pytest.raises(GapError, match=rows[10][0]):
        feed_for(write_csv(tmp_path / "gw.csv", rows)).ingest()


def test_missing_month(tmp_path):
    rows = market_rows()
    del rows[12]
    with pytest.raises(GapError, match="consecutive"):
        feed_for(write_csv(tmp_path / "gw.csv", rows)).ingest()


def test_unparseable_value_names_row_and_column(tmp_path):
    rows = market_rows()
    rows[4][5] = "abc"
    with pytest.raises(ParseError, match=r"row 6.*Rfree"):
        feed_for(write_csv(tmp_path / "gw.csv", rows)).ingest()


def test_missing_dividend_column(tmp_path):
    rows = market_rows()
    path = write_csv(tmp_path / "gw.csv", rows, header=HEADER.replace("D12", "Div"))
    with pytest.raises(ColumnError, match="D12"):
        feed_for(path).ingest()


def test_renamed_columns_via_map(tmp_path):
    rows = market_rows()
    path = write_csv(tmp_path / "gw.csv", rows, header=HEADER.replace("D12", "Div"))
    column_map = {**DEFAULT_COLUMN_MAP, "dividends": "Div"}
    y, _ = feed_for(path, column_map=column_map).ingest()
    assert len(y) == 40


def test_span_filter(tmp_path):
    y, _ = feed_for(write_csv(tmp_path / "gw.csv", market_rows()), date_span=(192603, 192612)).ingest()
    assert len(y) == 10
    assert y.period == 192603


def test_missing_file(tmp_path):
    with pytest.raises(IngestError):
        feed_for(tmp_path / "absent.csv").ingest()


def test_empirical_config_from_config(tmp_path):
    config = Config(input_path="data.csv", predictor="bm", taus=[0.25, 0.75])
    emp = EmpiricalConfig.from_config(config, alpha2=0.05)
    assert (emp.predictor, emp.taus, emp.alpha2) == ("bm", (0.25, 0.75), 0.05)
    assert emp.return_column == "CRSP_SPvw"
    with pytest.raises(IngestError):
        EmpiricalConfig(input_path="x", taus=(0.5, 0.3))


def test_non_positive_ratio():
    import pandas as pd

    builder = PredictorBuilder(EmpiricalConfig(input_path="x"))
    frame = pd.DataFrame({"date": [192601, 192602], "price": [10.0, 10.0], "dividends": [0.5, 0.0]})
    with pytest.raises(DomainError, match="row 1"):
        builder.build(frame)
