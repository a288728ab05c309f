import pytest

from core import __version__
from core.output import provenance_header, write_atomic, write_report


def test_header_leads_with_version_and_seed():
    lines = provenance_header(7, alpha2="0.05", **{"table.z": "z_percentiles:paper:0"})
    assert lines[:2] == [f"# version={__version__}", "# seed=7"]
    assert lines[2:] == ["# alpha2=0.05", "# table.z=z_percentiles:paper:0"]


def test_write_creates_parents_and_leaves_no_temp(tmp_path):
    path = write_atomic(tmp_path / "a" / "b" / "out.csv", "x,y\n1,2\n")
    assert path.read_text() == "x,y\n1,2\n"
    assert list(path.parent.iterdir()) == [path]


def test_failed_rename_keeps_previous_file(tmp_path, monkeypatch):
    path = write_atomic(tmp_path / "out.csv", "old\n")

    def refuse(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr("core.output.os.replace", refuse)
    with pytest.raises(OSError):
        write_atomic(path, "new\n")
    assert path.read_text() == "old\n"
    assert not list(tmp_path.glob("*.tmp"))


def test_report_puts_header_above_body(tmp_path):
    path = write_report(tmp_path / "r.csv", provenance_header(3, label="x"), "a,b\n1,2\n")
    lines = path.read_text().splitlines()
    assert lines == [f"# version={__version__}", "# seed=3", "# label=x", "a,b", "1,2"]
