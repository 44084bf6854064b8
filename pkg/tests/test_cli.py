import csv
import io
import json
import math

import pytest

from robust_tradeoffs import normal
from robust_tradeoffs.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_two_opt_reports(capsys):
    code, out, _ = run(capsys, "two-opt", "--mu-norm", "1", "--pi", "0.5", "--eps", "0.5")
    report = json.loads(out)
    assert code == 0 and report["schema_version"] == 1 and report["command"] == "two-opt"
    assert report["robust_risk"] == pytest.approx(normal.cdf(-0.5), abs=1e-11)
    code, out, _ = run(capsys, "two-opt", "--pi", "0.2", "--eps", "0")
    report = json.loads(out)
    assert report["robust_risk"] == report["bayes_risk"]


def test_precondition_exit_code(capsys):
    code, _, err = run(capsys, "two-opt", "--pi", "0.2", "--eps", "1.5")
    assert code == 2 and "nontrivial classification impossible" in err


@pytest.mark.parametrize("argv", [["two-opt", "--pi", "not-a-number"], ["no-such-command"]])
def test_usage_exit_code(argv):
    with pytest.raises(SystemExit) as stop:
        main(argv)
    assert stop.value.code == 64


def test_pareto_table(capsys, tmp_path):
    summary = tmp_path / "summary.json"
    code, out, _ = run(capsys, "pareto", "--summary", str(summary))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and list(rows[0]) == ["c", "std_risk", "robust_risk", "on_frontier"]
    assert len(rows) == 401
    info = json.loads(summary.read_text())["summary"]
    assert info["argmin_std_risk"] == pytest.approx(math.log(4) / 2, abs=5e-3)
    assert info["argmin_robust_risk"] == pytest.approx(math.log(4), abs=5e-3)
    code, out, _ = run(capsys, "pareto", "--pi", "0.5", "--grid-lo", "-1", "--grid-hi", "1", "--grid-n", "201")
    flagged = [r["c"] for r in csv.DictReader(io.StringIO(out)) if r["on_frontier"] == "true"]
    assert [float(c) for c in flagged] == [pytest.approx(0.0, abs=1e-12)]
    code, out, _ = run(capsys, "pareto", "--grid-n", "1")
    assert len(list(csv.DictReader(io.StringIO(out)))) == 1
    assert run(capsys, "pareto", "--grid-n", "0")[0] == 2


def test_three_phase_jump(capsys, tmp_path):
    summary = tmp_path / "s.json"
    code, out, _ = run(capsys, "three-phase", "--summary", str(summary))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and list(rows[0]) == ["pi0", "alpha", "case", "c_plus", "c_minus", "robust_risk"]
    by_pi0 = {round(float(r["pi0"]), 6): r for r in rows}
    assert by_pi0[0.42]["case"] == "RareZero"
    assert by_pi0[0.4201]["case"] == "FrequentZero"
    info = json.loads(summary.read_text())["summary"]
    assert 0.42 <= info["pi0_star"] < 0.4201


def test_three_phase_without_budget_is_continuous(capsys, tmp_path):
    summary = tmp_path / "s.json"
    code, out, _ = run(capsys, "three-phase", "--eps", "0", "--pi0-lo", "0.0", "--pi0-hi", "0.6",
                       "--steps", "601", "--summary", str(summary))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[0]["case"] == "RareZero"
    jump = json.loads(summary.read_text())["summary"]["jump"]
    assert abs(jump["c_plus_jump"]) < 1e-2 and jump["band_after"] < 1e-2


def test_outputs_are_deterministic(capsys):
    first = run(capsys, "mc-check", "--n", "20000", "--seed", "5")[1]
    second = run(capsys, "mc-check", "--n", "20000", "--seed", "5")[1]
    assert first == second
    report = json.loads(first)
    assert report["target"] == "two-class" and report["within_3se"]


def test_fixtures_pass(capsys):
    code, out, _ = run(capsys, "fixtures")
    assert code == 0


def test_json_format_for_tables(capsys):
    code, out, _ = run(capsys, "pareto", "--grid-n", "3", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and len(doc["rows"]) == 3 and "summary" in doc


def test_isoperimetry_command(capsys):
    code, out, _ = run(capsys, "isoperimetry", "--intervals=-1:1", "--eps", "0.1", "--bound", "1")
    report = json.loads(out)
    assert code == 0 and report["boundary_measure"] == pytest.approx(2 * normal.pdf(1.0))
    assert run(capsys, "isoperimetry", "--intervals=0:0.5,0.6:1", "--eps", "0.06", "--bound", "1")[0] == 2


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "three-opt", "--output", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["command"] == "three-opt"
