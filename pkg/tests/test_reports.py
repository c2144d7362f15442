import json
import math
from fractions import Fraction

import numpy as np
import pytest

from qnnlab.reports import MANIFEST, Run, csv_text, format_value, read_csv, write_csv, write_json_atomic


@pytest.mark.parametrize("v,text", [
    (True, "true"), (np.bool_(False), "false"), (3, "3"), (np.int64(-2), "-2"),
    (0.1, "0.10000000000000001"), (Fraction(1, 4), "0.25"),
    (math.nan, "nan"), (-math.inf, "-inf"), ("x", "x"),
])
def test_format_value(v, text):
    assert format_value(v) == text


def test_floats_round_trip_bit_exactly(tmp_path):
    values = np.random.default_rng(0).normal(size=50) * 10.0 ** np.arange(-25, 25)
    path = write_csv(tmp_path / "t.csv", ["v"], ([v] for v in values))
    header, rows = read_csv(path)
    assert header == ["v"]
    assert np.array_equal([float(r[0]) for r in rows], values)


def test_csv_layout():
    text = csv_text(["a", "b"], [[1, 0.5], [2, "x,y"]])
    assert text == 'a,b\n1,0.5\n2,"x,y"\n'
    assert csv_text(["a"], []) == "a\n"
    with pytest.raises(ValueError):
        csv_text(["a", "b"], [[1]])


def test_json_atomic_leaves_no_temp_files(tmp_path):
    write_json_atomic(tmp_path / "d.json", {"x": np.float64(1.5), "f": Fraction(1, 2), "a": np.arange(2)})
    assert json.loads((tmp_path / "d.json").read_text()) == {"x": 1.5, "f": 0.5, "a": [0, 1]}
    assert [p.name for p in tmp_path.iterdir()] == ["d.json"]


def test_run_manifest(tmp_path):
    run = Run(tmp_path / "out", "demo", {"k": 1})
    run.csv("t.csv", ["a"], [[1]])
    run.text("n.txt", "hi\n")
    run.verdict("ok", True)
    run.verdict("also", np.bool_(False))
    run.summary["n"] = 2
    doc = json.loads(run.finish().read_text())
    assert doc["command"] == "demo" and doc["config"] == {"k": 1}
    assert doc["files"] == ["n.txt", "t.csv"]
    assert doc["verdicts"] == {"ok": True, "also": False} and doc["passed"] is False
    assert doc["summary"] == {"n": 2} and doc["wall_clock_seconds"] >= 0
    assert {"version", "started"} <= set(doc)


def test_run_refuses_to_overwrite(tmp_path):
    Run(tmp_path, "demo", {}).finish()
    with pytest.raises(FileExistsError):
        Run(tmp_path, "demo", {})
    run = Run(tmp_path, "demo", {}, force=True)
    run.finish()
    assert (tmp_path / MANIFEST).exists()


def test_run_refuses_existing_output_file(tmp_path):
    (tmp_path / "t.csv").write_text("old")
    run = Run(tmp_path, "demo", {})
    with pytest.raises(FileExistsError):
        run.csv("t.csv", ["a"], [])
    assert (tmp_path / "t.csv").read_text() == "old"
