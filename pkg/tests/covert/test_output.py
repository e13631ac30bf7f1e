"""Tests for CSV and JSON renderers."""
import csv
import io
import json
import pytest

from covert.output import emit, format_value, write_csv, write_json

COLUMNS = ["blocklength", "p_star", "constraint_mode", "passed"]
ROWS = [
    {"blocklength": 100, "p_star": 0.020269612345678, "constraint_mode": "kl", "passed": True},
    {"blocklength": 200, "p_star": 1.0 / 3.0, "constraint_mode": "exact", "passed": False},
]


def test_format_value():
    assert format_value(100) == "100"
    assert format_value(True) == "1"
    assert format_value("kl") == "kl"
    assert format_value(1.0 / 3.0) == "0.333333333"
    assert format_value(1.0 / 3.0, precision=3) == "0.333"
    assert format_value(1.5e-12) == "1.5e-12"


def test_csv_layout():
    stream = io.StringIO()
    write_csv(ROWS, COLUMNS, stream)
    text = stream.getvalue()
    assert "\r" not in text
    lines = text.split("\n")
    assert lines[0] == "blocklength,p_star,constraint_mode,passed"
    assert lines[1] == "100,0.0202696123,kl,1"
    assert lines[2] == "200,0.333333333,exact,0"
    assert lines[3] == ""


def test_csv_round_trip_at_nine_digits():
    stream = io.StringIO()
    write_csv(ROWS, COLUMNS, stream)
    parsed = list(csv.DictReader(io.StringIO(stream.getvalue())))
    for row, original in zip(parsed, ROWS):
        assert float(row["p_star"]) == pytest.approx(original["p_star"], rel=1e-8)
        assert int(row["blocklength"]) == original["blocklength"]


def test_json_document():
    stream = io.StringIO()
    write_json(ROWS, COLUMNS, stream, {"tool": "covert-fbl", "version": "0.1.0"}, precision=4)
    document = json.loads(stream.getvalue())
    assert document["meta"]["tool"] == "covert-fbl"
    assert document["rows"][0] == {"blocklength": 100, "p_star": 0.02027, "constraint_mode": "kl", "passed": 1}
    assert document["rows"][1]["p_star"] == 0.3333


def test_emit_writes_file(tmp_path):
    path = tmp_path / "out.csv"
    emit(ROWS, COLUMNS, "csv", str(path), {})
    assert path.read_text(encoding="utf-8").startswith("blocklength,p_star")


def test_emit_defaults_to_stdout(capsys):
    emit(ROWS[:1], COLUMNS, "json", None, {"command": "design"})
    document = json.loads(capsys.readouterr().out)
    assert document["meta"] == {"command": "design"}
    assert len(document["rows"]) == 1
