import json

import numpy as np
import pytest

from nonlin_tomo import io
from nonlin_tomo.errors import ScenarioError
from nonlin_tomo.geometry import StarCurve


def test_json_handles_complex_and_arrays(tmp_path):
    path = io.write_json(str(tmp_path / "a" / "r.json"), {
        "schema": "x.v1",
        "w": 1.0 + 2.0j,
        "arr": np.array([1.0 + 0.5j, -1j]),
        "ints": np.arange(3),
        "curve": StarCurve.circle((0.1, 0.0), 0.2),
        "pair": (1, 2),
    })
    rec = io.read_json(path, "x.v1")
    assert rec["w"] == [1.0, 2.0]
    assert rec["arr"] == [[1.0, 0.5], [0.0, -1.0]]
    assert rec["ints"] == [0, 1, 2]
    assert rec["curve"] == {"center": [0.1, 0.0], "a": [0.2], "b": []}
    assert rec["pair"] == [1, 2]
    with pytest.raises(ScenarioError):
        io.read_json(path, "y.v1")


def test_csv_round_trip(tmp_path):
    path = io.write_csv(str(tmp_path / "t.csv"), ("name", "value"), [("a", 0.1), ("b", np.float64(1e-17))])
    rows = io.read_csv(path)
    assert rows == [{"name": "a", "value": 0.1}, {"name": "b", "value": 1e-17}]


def test_curves_csv_is_closed(tmp_path):
    path = io.write_curves_csv(str(tmp_path / "c.csv"), [StarCurve.circle((0.2, 0.0), 0.1)] * 2, samples=16)
    rows = io.read_csv(path)
    assert len(rows) == 2 * 17
    first, last = rows[0], rows[16]
    assert (first["x"], first["y"]) == pytest.approx((last["x"], last["y"]))
    assert first["x"] == pytest.approx(0.3)
    assert rows[17]["curve"] == 1.0


def test_measure_csv(tmp_path):
    path = io.write_measure_csv(str(tmp_path / "m.csv"), np.array([[0.1, -0.2]]), np.array([0.5 - 0.25j]))
    assert io.read_csv(path) == [{"x": 0.1, "y": -0.2, "re_lambda": 0.5, "im_lambda": -0.25}]


def test_gnuplot_script(tmp_path):
    path = io.write_gnuplot(str(tmp_path / "plot.gnuplot"), [
        {"title": "(a) point sources", "phantom": "p.csv", "points": "a.csv"},
        {"title": "(b) equivalent discs", "phantom": "p.csv", "curves": "b.csv"},
    ])
    text = open(path, encoding="utf-8").read()
    assert "set multiplot layout 1,2" in text
    assert sum(line.startswith("plot ") for line in text.splitlines()) == 2
    assert "'a.csv' skip 1 using 1:2 with points" in text
    assert "'b.csv' skip 1 using 3:4 with lines" in text


def test_manifest_provenance(tmp_path):
    out = tmp_path / "run"
    f = io.write_json(str(out / "report.json"), {"schema": "run_report.v1"})
    io.write_manifest(str(out), {"b": 1, "a": [1, 2]}, [f], {"seed": 3})
    man = io.read_json(str(out / "manifest.json"), "manifest.v1")
    assert man["files"] == ["report.json"]
    assert man["seed"] == 3
    assert man["provenance_sha256"] == io.sha256_of({"a": [1, 2], "b": 1})
    assert io.sha256_of({"a": 1}) != io.sha256_of({"a": 2})


def test_iter_reports_filters_by_schema(tmp_path):
    io.write_json(str(tmp_path / "one" / "report.json"), {"schema": "run_report.v1", "n": 1})
    io.write_json(str(tmp_path / "two" / "report.json"), {"schema": "other.v1", "n": 2})
    (tmp_path / "three").mkdir()
    (tmp_path / "three" / "report.json").write_text("{not json", encoding="utf-8")
    assert [r["n"] for r in io.iter_reports(str(tmp_path), "run_report.v1")] == [1]


def test_status_line_is_one_line():
    line = io.status_line({"status": "ok", "value": np.float64(0.5), "rows": [1, 2]})
    assert "\n" not in line
    assert json.loads(line) == {"status": "ok", "value": 0.5, "rows": [1, 2]}
