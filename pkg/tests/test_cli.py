import io
import json

import pytest

from dcalc.cli import DEMO_JOBS, execute, main, run


def call(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_phi(capsys):
    code, out = call(capsys, "phi", "--p", "2", "--m", "0", "--r", "2")
    assert code == 0
    assert json.loads(out)["phi"] == {"eta^{1}": "X1", "eta^{2}": "1"}


def test_phi_not_divisible(capsys):
    code, out = call(capsys, "phi", "--p", "3", "--m", "0", "--r", "4")
    assert code == 3 and json.loads(out)["error"]["type"] == "NotDivisibleLevel"


def test_dop_commands(capsys):
    code, out = call(capsys, "dop-act", "--p", "2", "--m", "1", "--op", '{"2": "1"}', "--f", "x^3")
    assert code == 0 and json.loads(out) == {"result": "3*x1"}
    code, out = call(capsys, "dop-mul", "--p", "2", "--op1", '{"1": "1"}', "--op2", '{"0": "x"}')
    assert code == 0 and json.loads(out)["product"]


def test_bilateral_check(capsys):
    code, out = call(capsys, "bilateral-check", "--p", "2", "--m", "1", "--gens", "x^4")
    assert code == 0 and json.loads(out)["horizontal"] is True
    code, out = call(capsys, "bilateral-check", "--p", "2", "--m", "1", "--gens", "x^2")
    doc = json.loads(out)
    assert code == 0 and doc["horizontal"] is False and doc["failures"][0]["K"] == [2]
    code, _ = call(capsys, "bilateral-check", "--p", "2", "--m", "1", "--gens", "x^2", "--strict")
    assert code == 4


def test_tube_member(capsys):
    code, out = call(capsys, "tube-member", "--p", "2", "--N", "x^2", "--g", "1/2*x^3")
    doc = json.loads(out)
    assert code == 0 and doc["member"] is True and doc["witness"] == "x1*T1"
    code, out = call(capsys, "tube-member", "--p", "2", "--N", "x^2", "--g", "1/2*x")
    assert json.loads(out)["member"] is False
    code, out = call(capsys, "tube-member", "--p", "2", "--N", "x1*x2+x1", "--N", "x2^2", "--g", "x1/2")
    assert code == 3


def test_parse_error(capsys):
    code, out = call(capsys, "tube-member", "--p", "2", "--N", "x^^2", "--g", "x")
    assert code == 2 and json.loads(out)["error"]["exit_code"] == 2


def test_run_from_stdin(capsys, monkeypatch):
    job = json.dumps({"command": "phi", "p": 3, "m": 0, "r": 3})
    code, out = call(capsys, "run", "-", stdin=job, monkeypatch=monkeypatch)
    assert code == 0 and set(json.loads(out)["phi"]) == {"eta^{1}", "eta^{2}", "eta^{3}"}
    code, out = call(capsys, "run", "-", stdin="{not json", monkeypatch=monkeypatch)
    assert code == 2


def test_run_strict_module(capsys, monkeypatch):
    bad = {"command": "strat-check", "module": {"p": 3, "level": 0, "rank": 1, "nmax": 2,
                                                "theta": {"1": [["2"]], "2": [["5"]]}}}
    code, out = call(capsys, "run", "-", stdin=json.dumps(bad), monkeypatch=monkeypatch)
    assert code == 0 and json.loads(out)["cocycle"] is False
    code, _ = call(capsys, "run", "-", "--strict", stdin=json.dumps(bad), monkeypatch=monkeypatch)
    assert code == 4


def test_unknown_command_and_missing_fields():
    assert execute({"command": "nope"})[0] == 2
    assert execute({"command": "phi", "p": 2})[0] == 2


def test_text_format(capsys):
    code, out = call(capsys, "phi", "--p", "2", "--r", "2", "--format", "text")
    assert code == 0 and "eta^{2}: 1" in out


def test_strat_hom_and_frobenius():
    code, doc = execute(dict(DEMO_JOBS[12]))
    assert code == 0 and doc["dimension"] == 0
    code, doc = execute(dict(DEMO_JOBS[11]))
    assert code == 0 and doc["cocycle"] and doc["pullback"]["level"] == 1


def test_isoc_check():
    system = {"p": 2, "J": ["x"],
              "modules": {"0": {"p": 2, "level": 0, "nmax": 2}, "1": {"p": 2, "level": 1, "nmax": 2}},
              "transitions": {"0,1": [["x"]]}}
    code, doc = execute({"command": "isoc-check", "system": system})
    assert code == 0 and doc["compatible"] is False
    system["transitions"] = {"0,1": [["1"]]}
    assert execute({"command": "isoc-check", "system": system})[1]["compatible"] is True


def test_demo_is_deterministic():
    a = run({"command": "demo"})
    b = run({"command": "demo"})
    assert a == b and a[0] == 0
    doc = json.loads(a[1])
    assert all(j["exit_code"] == 0 for j in doc["jobs"])


@pytest.mark.parametrize("job", DEMO_JOBS, ids=lambda j: j["command"])
def test_demo_jobs_succeed(job):
    assert execute(dict(job))[0] == 0
