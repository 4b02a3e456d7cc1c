import json
from pathlib import Path

import pytest

from setpoint import cli

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(tmp_path, name, command="run", out="out"):
    code = cli.main([command, str(PROBLEMS / name), "-o", str(tmp_path / out)])
    return code, tmp_path / out


def test_dyad_solve(tmp_path):
    code, out = run(tmp_path, "dyad_solve.json")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["schema_version"] == cli.report_schema_version() == "1.0.0"
    assert report["result"]["fixed_point"] == 0
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert all(json.loads(line) for line in lines)


def test_empty_value_is_a_problem_error(tmp_path, capsys):
    assert cli.main(["validate", str(PROBLEMS / "empty_value.json")]) == 1
    assert "values.3: empty" in capsys.readouterr().err


@pytest.mark.parametrize("name", sorted(p.name for p in PROBLEMS.glob("*.json") if p.name != "empty_value.json"))
def test_every_problem_validates(name):
    assert cli.main(["validate", str(PROBLEMS / name)]) == 0


def test_scan_finds_no_violations(tmp_path):
    code, out = run(tmp_path, "scan_2_3.json", command="scan")
    assert code == 0
    result = json.loads((out / "report.json").read_text())["result"]
    assert result["violations"] == 0
    assert all(entry["violations"] == 0 for entry in result["pairs"].values())


def test_scan_command_rejects_other_tasks(tmp_path):
    code, _ = run(tmp_path, "dyad_solve.json", command="scan")
    assert code == 1


def test_reports_are_byte_identical(tmp_path, monkeypatch):
    for name in ("dyad_solve.json", "alternating_center.json", "dyad_graph_descent.json"):
        _, a = run(tmp_path, name, out=f"a_{name}")
        _, b = run(tmp_path, name, out=f"b_{name}")
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_scan_is_independent_of_worker_count(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")
    _, a = run(tmp_path, "scan_2_3.json", command="scan", out="w1")
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    _, b = run(tmp_path, "scan_2_3.json", command="scan", out="w3")
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_schema_mismatch_warns(tmp_path):
    path = tmp_path / "r.json"
    path.write_text(json.dumps({"schema_version": "0.9.0"}))
    with pytest.warns(UserWarning, match="schema_version"):
        cli.load_report(path)
    prob = json.loads((PROBLEMS / "dyad_solve.json").read_text())
    prob["schema_version"] = "0.1.0"
    with pytest.warns(UserWarning):
        cli.parse_problem(prob)


def test_malformed_json_and_bad_params(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["validate", str(bad)]) == 1
    prob = json.loads((PROBLEMS / "dyad_solve.json").read_text())
    prob["params"]["alpha"] = 1.5
    bad.write_text(json.dumps(prob))
    assert cli.main(["validate", str(bad)]) == 1
    assert "params" in capsys.readouterr().err


def test_internal_error_exits_2(tmp_path, monkeypatch):
    def boom(prob):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli._TASKS, "solve", boom)
    code, _ = run(tmp_path, "dyad_solve.json")
    assert code == 2
