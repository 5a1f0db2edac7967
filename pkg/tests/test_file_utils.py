import math

import pytest

from plasmon_qed.utils.file_utils import (
    format_value,
    get_file_sizes,
    print_file_summary,
    save_file,
    trim_bom,
    write_failures,
    write_meta,
    write_results_csv,
)


def test_trim_bom():
    assert trim_bom(b"\xef\xbb\xbfkey = 1") == b"key = 1"
    assert trim_bom("\ufeffkey = 1") == "key = 1"
    assert trim_bom(b"key") == b"key"
    assert trim_bom("") == ""


def test_save_file_creates_parents(tmp_path):
    path = tmp_path / "a" / "b" / "out.bin"
    assert save_file(path, b"\xef\xbb\xbfdata") == 4
    assert path.read_bytes() == b"data"
    assert save_file(path, b"\xef\xbb\xbfdata", remove_bom=False) == 7


def test_format_value():
    assert format_value(0.1) == "1.0000000000000001e-01"
    assert float(format_value(1 / 3)) == 1 / 3
    assert format_value(7) == "7"
    assert format_value("ok") == "ok"
    assert format_value(math.nan) == "nan"
    assert format_value(-math.inf) == "-inf"
    assert format_value(math.inf) == "inf"


def test_results_csv(tmp_path):
    path = tmp_path / "results.csv"
    assert write_results_csv(path, ("x", "y"), [(1.0, 2), (math.nan, 0.5)]) == 2
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,y"
    assert lines[1] == "1.0000000000000000e+00,2"
    assert lines[2].startswith("nan,")
    with pytest.raises(ValueError, match="columns"):
        write_results_csv(path, ("x", "y"), [(1.0,)])


def test_meta_and_failures(tmp_path):
    write_meta(tmp_path / "meta.txt", {"b": "2", "a": "1"})
    assert (tmp_path / "meta.txt").read_text(encoding="utf-8") == "b = 2\na = 1\n"
    write_failures(tmp_path / "failures.txt", [(3, "R_nm=25", "ParameterError: bad")])
    assert (tmp_path / "failures.txt").read_text(encoding="utf-8") == "3\tR_nm=25\tParameterError: bad\n"


def test_file_summary(tmp_path, capsys):
    (tmp_path / "results.csv").write_text("x\n1\n", encoding="utf-8")
    assert get_file_sizes(tmp_path, ["results.csv", "meta.txt"]) == {"results.csv": 4, "meta.txt": 0}
    print_file_summary(tmp_path, ["results.csv", "meta.txt"])
    out = capsys.readouterr().out
    assert f"Output files in {tmp_path}" in out
    assert "results.csv: 4 bytes" in out
    assert "meta.txt: not written" in out
