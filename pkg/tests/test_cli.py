import json

import pytest
import yaml

import main as cli
from conftest import SMALL_ABSTRACT, small_scenario_doc


def _last_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def _scenario_file(tmp_path, doc):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return str(path)


def test_parser_lists_every_stage():
    ap = cli.build_parser()
    for name in cli.COMMANDS:
        args = ap.parse_args([name])
        assert args.command == name
        assert callable(args.run)
    with pytest.raises(SystemExit):
        ap.parse_args([])


def test_missing_scenario_is_a_json_error(tmp_path, capsys):
    code = cli.main(["simulate", "--scenario", str(tmp_path / "missing.yaml")])
    rec = _last_json(capsys)
    assert code == 1
    assert rec["status"] == "error"
    assert rec["error"] == "FileNotFoundError"


def test_invalid_scenario_is_a_json_error(tmp_path, capsys):
    doc = small_scenario_doc(harmonics=5)
    code = cli.main(["simulate", "--scenario", _scenario_file(tmp_path, doc), "--out", str(tmp_path / "o")])
    assert code == 1
    assert _last_json(capsys)["error"] == "ScenarioError"


def test_simulate(tmp_path, capsys):
    out = tmp_path / "sim"
    code = cli.main(["simulate", "--scenario", _scenario_file(tmp_path, small_scenario_doc()), "--out", str(out),
                     "--seed", "3"])
    rec = _last_json(capsys)
    assert code == 0
    assert rec["status"] == "ok"
    assert rec["out"] == str(out)
    assert rec["norms"]["m2"] > 0
    assert (out / "data_m2_neumann.csv").exists()
    assert json.loads((out / "manifest.json").read_text(encoding="utf-8"))["seed"] == 3


def test_abstract(tmp_path, capsys):
    out = tmp_path / "abs"
    code = cli.main(["abstract", "--scenario", _scenario_file(tmp_path, SMALL_ABSTRACT), "--out", str(out)])
    rec = _last_json(capsys)
    assert code == 0
    assert rec["status"] == "ok"
    assert rec["max_range_defect"] < 1e-10
    assert set(rec["frozen_newton"]) == {"a", "b"}
    assert (out / "hankel.csv").exists()


def test_default_output_directory(tmp_path):
    from workers._common import out_dir

    args = cli.build_parser().parse_args(["diagnose"])
    cfg = {"scenario": {"name": "conditioning"}, "runtime": {"output_dir": str(tmp_path)}}
    assert out_dir(args, cfg, "diagnose") == str(tmp_path / "conditioning" / "diagnose")
