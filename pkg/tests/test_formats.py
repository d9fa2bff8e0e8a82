import csv
import json

import pytest

from layeredkc.avoidance import AvoidSet
from layeredkc.bitcore import DyadicWeight, bits
from layeredkc.errors import AvoidanceError, FormatError, RunValidationError
from layeredkc.layered_kc import LayeredRequest, layered_solve
from layeredkc.measures import LENGTH_PLUS_LOG
from layeredkc.utils.formats import (
    CodeFile,
    RunFile,
    format_avoid_set,
    format_code_file,
    format_lengths,
    format_measure_table,
    format_requests,
    format_run_file,
    format_snapshots,
    load_avoid_set,
    load_code_file,
    load_lengths,
    load_measure,
    load_measure_table,
    load_requests,
    load_run,
    load_run_file,
    load_snapshots,
    load_source,
    load_universe,
    read_lines,
    write_lines,
)
from layeredkc.utils.report_utils import convert_to_serializable, format_table, save_csv_report, save_json_report


def test_lengths_skip_comments_and_blanks():
    assert load_lengths(["# lengths", "2", "", "  3 ", "3"]) == [2, 3, 3]
    assert format_lengths([2, 3]) == ["2", "3"]
    with pytest.raises(FormatError) as info:
        load_lengths(["2", "two"])
    assert info.value.line == 2


def test_requests_file():
    lines = ["* 0", "0 2", "1 3 01", "# trailing comment"]
    requests = load_requests(lines)
    assert requests == [LayeredRequest(None, 0), LayeredRequest(0, 2), LayeredRequest(1, 3, bits("01"))]
    assert format_requests(requests) == ["* 0", "0 2", "1 3 01"]


@pytest.mark.parametrize("lines, line", [
    (["0 2"], 1),
    (["* 0", "* 3"], 2),
    (["* 0", "0"], 2),
    (["* 0", "0 x"], 2),
    (["* 0", "", "0 2 0a"], 3),
])
def test_requests_file_errors(lines, line):
    with pytest.raises(FormatError) as info:
        load_requests(lines)
    assert info.value.line == line


def test_empty_requests_file():
    with pytest.raises(FormatError):
        load_requests(["# nothing"])


def test_snapshots_roundtrip_through_text():
    snapshots = layered_solve([LayeredRequest(None, 0), LayeredRequest(0, 2), LayeredRequest(1, 3)])
    lines = format_snapshots(snapshots)
    assert lines[:2] == ["# stage 0", "S0: -"]
    assert load_snapshots(lines) == snapshots


def test_snapshot_errors():
    with pytest.raises(FormatError) as info:
        load_snapshots(["S0: -"])
    assert info.value.line == 1
    with pytest.raises(FormatError):
        load_snapshots(["# stage 0", "S1: 00"])


def test_avoid_set_file():
    q = load_avoid_set(["00", "# second member", "1"])
    assert q == AvoidSet((bits("00"), bits("1")))
    assert format_avoid_set(q) == ["00", "1"]
    with pytest.raises(AvoidanceError):
        load_avoid_set(["0", "01"])


def test_measure_table_file(tmp_path):
    measure = load_measure_table(["0 2", "01 3"])
    assert measure(bits("01")) == 3
    assert format_measure_table({bits("01"): 3, bits("1"): 2}) == ["1 2", "01 3"]
    with pytest.raises(FormatError) as info:
        load_measure_table(["0 2", "0 3"])
    assert info.value.line == 2

    path = write_lines(tmp_path / "m.txt", ["0 2", "1 2"])
    assert load_measure(path).identifier() == "table:m.txt"
    assert load_measure(LENGTH_PLUS_LOG).name == LENGTH_PLUS_LOG


def test_universe_and_source(tmp_path):
    assert load_universe(["0101", "", "11"]) == [bits("0101"), bits("11")]
    assert load_source("0110") == bits("0110")
    path = write_lines(tmp_path / "x.txt", ["# source", "0011"])
    assert load_source(path) == bits("0011")
    with pytest.raises(FormatError):
        load_source(write_lines(tmp_path / "empty.txt", []))


def test_code_file():
    code = CodeFile(bits("0110"), {"note": "extra", "n": "3", "measure": LENGTH_PLUS_LOG})
    lines = format_code_file(code)
    assert lines == [f"# measure={LENGTH_PLUS_LOG}", "# n=3", "# note=extra", "0110"]
    loaded = load_code_file(lines)
    assert loaded.y == bits("0110")
    assert loaded.get_int("n") == 3
    assert loaded.get_int("shift") is None
    with pytest.raises(FormatError):
        loaded.get_int("measure")
    dynamic = CodeFile(bits("01"), {"n": "2", "c": "1", "measure": "dynamic"})
    assert format_code_file(dynamic)[:3] == ["# measure=dynamic", "# c=1", "# n=2"]


@pytest.mark.parametrize("lines", [
    ["# measure", "01"],
    ["01", "10"],
    ["# n=1"],
])
def test_code_file_errors(lines):
    with pytest.raises(FormatError):
        load_code_file(lines)


def test_run_file():
    lines = ["c=2", "universe-maxlen=3", "0 4", "01 6", "@1 01 5"]
    spec = load_run_file(lines)
    assert spec == RunFile({bits("0"): 4, bits("01"): 6}, [(1, bits("01"), 5)], c=2, universe_maxlen=3)
    assert format_run_file(spec) == lines
    run = load_run(lines)
    assert run.c == 2
    assert run.final(bits("01")) == 5


@pytest.mark.parametrize("lines, line", [
    (["d=1"], 1),
    (["0 4", "@1 0"], 2),
    (["0 4", "0 5"], 2),
    (["0 four"], 1),
])
def test_run_file_errors(lines, line):
    with pytest.raises(FormatError) as info:
        load_run_file(lines)
    assert info.value.line == line


def test_run_file_checks_tail_inequality():
    with pytest.raises(RunValidationError):
        load_run(["0 2", "00 1", "01 1"])


def test_read_and_write_lines(tmp_path):
    path = write_lines(tmp_path / "lines.txt", ["a", "b"])
    assert read_lines(path) == ["a", "b"]


def test_serializable_conversion():
    data = {"codes": {bits("1"), bits("0")}, "pair": (1, bits("01")), "weight": DyadicWeight.power(2), 3: None}
    assert convert_to_serializable(data) == {
        "codes": ["0", "1"], "pair": [1, "01"], "weight": str(DyadicWeight.power(2)), "3": None}


def test_reports_on_disk(tmp_path):
    rows = [{"n": 1, "use": 5, "extra": "x"}, {"n": 2, "use": 6}]
    json_path = save_json_report({"rows": rows}, tmp_path / "out" / "report.json")
    with open(json_path, encoding="utf-8") as f:
        assert json.load(f)["rows"][1] == {"n": 2, "use": 6}

    csv_path = save_csv_report(rows, ["n", "use"], tmp_path / "report.csv")
    with open(csv_path, encoding="utf-8", newline="") as f:
        assert list(csv.DictReader(f)) == [{"n": "1", "use": "5"}, {"n": "2", "use": "6"}]

    assert save_json_report({}, tmp_path / "report.csv" / "nested.json") is None


def test_format_table_aligns_right():
    assert format_table([{"n": 1, "use": 100}], ["n", "use"]) == ["n  use", "1  100"]
