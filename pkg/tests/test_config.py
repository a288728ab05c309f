import json

import pytest

from config import DEFAULT_COLUMN_MAP, Config
from core.exceptions import ConfigError, DomainError


def test_defaults():
    config = Config()
    assert config.taus == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    assert config.kernel == "parzen"
    assert config.column_map == DEFAULT_COLUMN_MAP
    assert config.table_scale("z") == (2000, 200_000)
    assert config.table_scale("z", paper_scale=True) == (10_000, 1_000_000)
    assert config.mc_replications() == 2000 and config.mc_replications(True) == 10_000


def test_missing_file_gives_defaults(tmp_path):
    assert Config.load(str(tmp_path / "none.json")) == Config()


def test_save_and_load(tmp_path):
    path = str(tmp_path / "config.json")
    config = Config(alpha2=0.05, column_map={"dividends": "Div"})
    config.save(path)
    loaded = Config.load(path)
    assert loaded.alpha2 == 0.05
    assert loaded.column_map["dividends"] == "Div"
    assert loaded.column_map["price"] == "Index"


def test_unknown_key(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"alpha2": 0.1, "colour": "blue"}))
    with pytest.raises(ConfigError, match="colour"):
        Config.load(str(path))


def test_bad_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        Config.load(str(path))


@pytest.mark.parametrize("field, value", [
    ("taus", [0.5, 0.4]),
    ("taus", [1.5]),
    ("kernel", "triangle"),
    ("alpha2", 0.0),
    ("alpha1_source", "web"),
    ("predictor", "cay"),
    ("threads", 0),
    ("date_span", [192601]),
])
def test_set_validates(field, value):
    config = Config()
    with pytest.raises(ConfigError):
        config.set(field, value)


def test_custom_predictor_needs_column():
    with pytest.raises(ConfigError):
        Config(predictor="custom")
    assert Config(predictor="custom", custom_column="ntis").custom_column == "ntis"


def test_set():
    config = Config()
    config.set("grid_step", 0.5)
    assert config.grid_step == 0.5
    with pytest.raises(ConfigError):
        config.set("missing", 1)
    with pytest.raises(ConfigError):
        config.set("alpha2", 2.0)


def test_set_defers_validation():
    config = Config()
    config.set("predictor", "custom", validate=False)
    config.set("custom_column", "ntis", validate=False)
    config.validate()
    assert config.custom_column == "ntis"


def test_thresholds_follow_config():
    th = Config(c_bar_L=-80.0, alpha2=0.05, epsilon=0.02).thresholds()
    assert (th.c_bar_L, th.c_under_L, th.alpha2, th.epsilon) == (-80.0, -100.0, 0.05, 0.02)


def test_dgp_section():
    spec = Config(seed=7, dgp={"T": 200, "innovation_kind": "student_t", "nu": 5.0}).dgp_spec()
    assert (spec.T, spec.seed, spec.nu) == (200, 7, 5.0)
    with pytest.raises(ConfigError):
        Config(dgp={"volatility": 1.0}).dgp_spec()


def test_grid_overrides_from_dgp_section(caplog):
    config = Config(dgp={"T": 200, "innovation_kind": "t_only", "nu": 3.0, "delta": -0.5})
    with caplog.at_level("WARNING", logger="config"):
        assert config.grid_overrides() == {"T": 200, "innovation_kind": "t_only", "nu": 3.0}
    assert "delta" in caplog.text
    assert Config().grid_overrides() == {}
    with pytest.raises(DomainError):
        Config(dgp={"innovation_kind": "student_t"}).grid_overrides()


def test_unknown_table_kind():
    with pytest.raises(ConfigError):
        Config().table_scale("beta")
