import csv
import io
import json
import subprocess
import sys

import pytest

from thetaexp import cli
from thetaexp.qfield import FieldSpec


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_expand_json(capsys):
    code, out, _ = run(["expand", "--m", "2", "--x", "sqrt(2)-1", "--n", "20", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"config", "results", "checks"}
    assert doc["results"]["digits"] == [3] + [4, 2] * 9 + [4]
    assert doc["results"]["x"]["exact"] == [-1, 1, 1]
    assert doc["config"]["x"] == "sqrt(2)-1"


def test_construct_csv(capsys):
    argv = ["construct", "--m", "2", "--M", "10", "--alpha", "4", "--gamma", "0.75", "--depth", "2000",
            "--base", "const:2", "--checkpoints", "auto", "--format", "csv"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# config: ") and lines[1].startswith("# checks: ")
    config = json.loads(lines[0][len("# config: "):])
    assert config["depth"] == 2000 and config["command"] == "construct"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[2:]))))
    assert list(rows[0]) == ["n", "L", "S", "R", "block_k", "env_low", "env_high", "inside"]
    inside = [r for r in rows if r["block_k"]]
    assert inside and all(r["inside"] == "True" for r in inside)


def test_dimension_json(capsys):
    code, out, _ = run(["dimension", "--m", "2", "--M", "10", "--depth", "3", "--tol", "1e-9"], capsys)
    assert code == 0
    res = json.loads(out)["results"]
    assert res["s_low"] <= res["s_exact"] <= res["s_high"]
    assert res["jarnik"]["lower"] < res["jarnik"]["upper"]


def test_output_file(tmp_path, capsys):
    target = tmp_path / "j.json"
    code, out, _ = run(["jarnik", "--m", "2", "--M", "10", "--output", str(target)], capsys)
    assert code == 0 and out == ""
    doc = json.loads(target.read_text())
    assert "output" not in doc["config"] and "jobs" not in doc["config"]


def test_verification_failure_exit_code(capsys):
    argv = ["verify-monotone", "--m", "2", "--M", "10", "--alpha", "1/2", "--N0", "1", "--depth", "100"]
    code, out, _ = run(argv, capsys)
    assert code == 1
    assert json.loads(out)["checks"]["at_least_M"] is False


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["expand", "--m", "2"],
    ["expand", "--m", "2", "--x", "sqrt(3)"],
    ["expand", "--m", "2", "--x", "__import__('os')"],
    ["expand", "--m", "4", "--x", "1/3"],
    ["expand", "--m", "2", "--x", "2"],
    ["dimension", "--m", "2", "--M", "5"],
    ["construct", "--m", "2", "--M", "10", "--alpha", "1", "--depth", "50", "--scan", "50"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        sys.exit(cli.main(argv))
    assert exc.value.code == 2


def test_floor_ambiguity_is_surfaced(monkeypatch, capsys):
    from thetaexp.intervals import FloorAmbiguityError

    def boom(args, out):
        raise FloorAmbiguityError("cannot decide floor of exp(7^3/4): enclosure straddles 1")

    monkeypatch.setattr(cli, "cmd_jarnik", boom)
    code, _, err = run(["jarnik", "--m", "2", "--M", "10"], capsys)
    assert code == 2
    assert "cannot decide floor of exp(7^3/4)" in err


@pytest.mark.parametrize("text, triple", [
    ("sqrt(2)-1", (-1, 1, 1)),
    ("1/2", (1, 0, 2)),
    ("0.25", (1, 0, 4)),
    ("theta", (0, 1, 2)),
    ("sqrt(8)/3", (0, 2, 3)),
    ("(1 + sqrt(2)) * (1 - sqrt(2))", (-1, 0, 1)),
    ("-sqrt(9) + 4", (1, 0, 1)),
])
def test_expression_grammar(text, triple):
    assert cli.parse_expr(text, FieldSpec(2)).triple == triple


@pytest.mark.parametrize("text", ["x + 1", "2 ** 3", "sqrt(1/2)", "sqrt(2, 3)", "1 if 1 else 2", "[1]"])
def test_expression_grammar_rejects(text):
    with pytest.raises(cli.UsageError):
        cli.parse_expr(text, FieldSpec(2))


def test_jobs_do_not_change_bytes():
    base = [sys.executable, "-m", "thetaexp", "dimension", "--m", "2", "--M", "10", "--depth", "4"]
    a = subprocess.run(base + ["--jobs", "1"], capture_output=True, check=True).stdout
    b = subprocess.run(base + ["--jobs", "3"], capture_output=True, check=True).stdout
    assert a == b


@pytest.mark.parametrize("argv", [
    ["orbit", "--m", "2", "--n", "30", "--format", "csv"],
    ["orbit", "--m", "2", "--x", "1/2", "--n", "10"],
    ["ratio", "--m", "2", "--digits", "2,3,4,5,6"],
    ["ratio", "--m", "2", "--random", "10,500,1", "--format", "csv"],
    ["conditions", "--m", "2", "--M", "10", "--alpha", "4", "--scan", "50", "--diagnostics", "10,100"],
    ["verify-metric", "--m", "5", "--words", "50"],
    ["verify-metric", "--m", "2", "--digits", "2,2", "--format", "csv"],
    ["verify-holder", "--m", "2", "--M", "10", "--alpha", "4", "--depth", "12", "--pairs", "20"],
    ["measure", "--m", "2", "--a", "0.1", "--b", "0.5"],
    ["sample", "--m", "2", "--count", "20000"],
])
def test_commands_succeed(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 0, err
    assert out
