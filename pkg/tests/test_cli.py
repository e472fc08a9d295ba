import csv
import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

from stable_avoid import cli, suites


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out)
    return code, out.getvalue()


def table(text):
    lines = text.strip().splitlines()
    assert lines[0] == "input\tvalue\terr_estimate"
    return [line.split("\t") for line in lines[1:]]


SCHEMA = json.loads(resources.files("stable_avoid").joinpath(
    "schemas/verify_report.schema.json").read_text())


# -- eval -------------------------------------------------------------------


def test_eval_h_cauchy():
    code, text = run("eval", "h", "--alpha", "1", "--rho", "0.5", "--x", "2")
    assert code == 0
    (row,) = table(text)
    assert row[0] == "2" and float(row[1]) == pytest.approx(1.3169579, abs=5e-8)
    assert len(row[1].replace("-", "").replace(".", "").lstrip("0")) >= 15


def test_eval_psi():
    code, text = run("eval", "psi", "--alpha", "1", "--rho", "0.5", "--z", "1.4142136")
    assert code == 0
    value = float(table(text)[0][1])
    assert value == pytest.approx((1.4142136 ** 2 - 1.0) ** -0.5, rel=1e-14)
    # the input is sqrt(2) rounded to 8 digits, which moves the output by 5e-8
    assert value == pytest.approx(1.0, abs=1e-7)


def test_eval_several_points():
    code, text = run("eval", "avoid", "--alpha", "0.5", "--rho", "0.3", "--x", "2", "-3", "50")
    assert code == 0
    vals = [float(r[1]) for r in table(text)]
    assert len(vals) == 3 and all(0 < v < 1 for v in vals)


def test_eval_u_with_interval():
    code, unit = run("eval", "u", "--alpha", "1.5", "--rho", "0.5", "--x", "2", "--y", "3")
    code2, scaled = run("eval", "u", "--alpha", "1.5", "--rho", "0.5", "--x", "6", "--y", "8",
                        "--interval", "0", "4")
    assert code == code2 == 0
    # the interval [0, 4] has half width 2: u scales by 2^(alpha - 1)
    assert float(table(scaled)[0][1]) == pytest.approx(float(table(unit)[0][1]) * 2 ** 0.5,
                                                      rel=1e-12)


def test_eval_h_is_invariant_under_interval_reduction():
    _, a = run("eval", "h", "--alpha", "1.3", "--rho", "0.4", "--x", "3")
    _, b = run("eval", "h", "--alpha", "1.3", "--rho", "0.4", "--x", "5", "--interval", "1", "3")
    assert table(a)[0][1] == table(b)[0][1]


@pytest.mark.parametrize("argv", [
    ("eval", "h", "--alpha", "1.5", "--rho", "0.6667", "--x", "2"),
    ("eval", "h", "--alpha", "2.0", "--rho", "0.5", "--x", "2"),
    ("eval", "h", "--alpha", "1", "--rho", "0.3", "--x", "2"),
    ("eval", "h", "--alpha", "1.5", "--rho", "0.5", "--x", "0.5"),
    ("eval", "avoid", "--alpha", "1.5", "--rho", "0.5", "--x", "2"),
    ("eval", "u", "--alpha", "1.5", "--rho", "0.5", "--x", "2", "--y", "-3"),
    ("eval", "psi", "--alpha", "1", "--rho", "0.5"),
    ("eval", "g", "--alpha", "1.5", "--rho", "0.5", "--x", "5", "--interval", "0", "4"),
    ("eval", "h", "--alpha", "1.5", "--rho", "0.5", "--x", "2", "--interval", "3", "1"),
    ("eval", "nonsense", "--alpha", "1.5", "--rho", "0.5"),
    ("eval", "h", "--rho", "0.5", "--x", "2"),
])
def test_eval_errors_exit_2(argv, capsys):
    code, text = run(*argv)
    assert code == 2 and text == ""
    assert capsys.readouterr().err.strip()


def test_one_sided_diagnostic(capsys):
    run("eval", "h", "--alpha", "1.5", "--rho", "0.6667", "--x", "2")
    assert "SpectrallyOneSided" in capsys.readouterr().err


# -- verify -----------------------------------------------------------------


def test_verify_identities_cauchy():
    code, text = run("verify", "identities", "--alpha", "1", "--rho", "0.5")
    assert code == 0
    report = json.loads(text)
    jsonschema.validate(report, SCHEMA)
    ladder = [c for c in report["checks"] if c["name"].startswith("ladder_potential=2h")]
    assert ladder and all(c["pass"] for c in ladder)


@pytest.mark.parametrize("alpha,rho", [(0.5, 0.3), (1.5, 0.6)])
def test_verify_identities_other_regimes(alpha, rho, tmp_path):
    out = tmp_path / "r.json"
    code, text = run("verify", "identities", "--alpha", str(alpha), "--rho", str(rho),
                     "--out", str(out))
    assert code == 0 and text == ""
    jsonschema.validate(json.loads(out.read_text()), SCHEMA)


def test_verify_avoidance_small_budget():
    code, text = run("verify", "avoidance", "--alpha", "0.5", "--rho", "0.5", "--x", "2",
                     "--n", "5000", "--seed", "7")
    report = json.loads(text)
    jsonschema.validate(report, SCHEMA)
    assert code == 0 and report["seed"] == 7 and report["params"]["x"] == [2.0]


def test_verify_sampler_small_budget():
    code, text = run("verify", "sampler", "--alpha", "1.5", "--rho", "0.6",
                     "--n-samples", "100000")
    jsonschema.validate(json.loads(text), SCHEMA)
    assert code == 0


def test_verify_failure_exits_1(monkeypatch):
    def failing(p, xs, budget, seed):
        return [suites.close("impossible", 1.0, 0.0, 0.1)]

    monkeypatch.setitem(suites.RUNNERS, "identities", failing)
    code, text = run("verify", "identities", "--alpha", "1", "--rho", "0.5")
    report = json.loads(text)
    jsonschema.validate(report, SCHEMA)
    assert code == 1 and report["checks"][0]["pass"] is False


@pytest.mark.parametrize("argv", [
    ("verify", "harmonicity", "--alpha", "2.0", "--rho", "0.5"),
    ("verify", "avoidance", "--alpha", "1", "--rho", "0.5"),
    ("verify", "tail", "--alpha", "0.5", "--rho", "0.5", "--n", "10"),
    ("verify", "harmonicity", "--alpha", "1.5", "--rho", "0.5", "--n", "0"),
    ("verify", "bogus", "--alpha", "1.5", "--rho", "0.5"),
])
def test_verify_errors_exit_2(argv):
    assert run(*argv)[0] == 2


def test_check_serialisation():
    d = suites.Check("x", float("nan"), float("inf"), None, True).as_dict()
    assert d == {"name": "x", "observed": None, "expected": None, "tolerance": None, "pass": True}


# -- sample -----------------------------------------------------------------


def sample(*extra):
    return run("sample", "--alpha", "1.5", "--rho", "0.5", "--x", "2", "--t-max", "1", *extra)


def test_sample_csv_single_path():
    code, text = sample("--n", "1", "--seed", "3")
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["time", "position", "path_id"]
    t = np.array([float(r[0]) for r in rows[1:]])
    assert t[0] == 0.0 and np.all(np.diff(t) > 0)
    assert {r[2] for r in rows[1:]} == {"0"}
    assert float(rows[1][1]) == 2.0


def test_sample_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert sample("--n", "3", "--seed", "4", "--out", str(a))[0] == 0
    assert sample("--n", "3", "--seed", "4", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert sample("--n", "3", "--seed", "5", "--out", str(b))[0] == 0
    assert a.read_bytes() != b.read_bytes()


def test_sample_conditioned_avoids_interval():
    code, text = sample("--n", "200", "--conditioned", "--seed", "2")
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))[1:]
    pos = np.array([float(r[1]) for r in rows])
    assert pos.size == 200 * 11
    assert np.all(np.abs(pos) > 1.0)


def test_sample_json_with_interval():
    code, text = run("sample", "--alpha", "1.2", "--rho", "0.5", "--x", "10", "--t-max", "2",
                     "--n", "2", "--interval", "2", "6", "--format", "json", "--seed", "1")
    assert code == 0
    doc = json.loads(text)
    assert [p["path_id"] for p in doc["paths"]] == [0, 1]
    for p in doc["paths"]:
        pos = np.array(p["position"])
        assert p["time"][0] == 0.0 and pos[0] == 10.0
        assert not np.any((pos[:-1] >= 2.0) & (pos[:-1] <= 6.0))
        assert p["time"][-1] <= 2.0 * (1 + 1e-12)


def test_sample_workers_do_not_change_output(monkeypatch):
    _, one = sample("--n", "20", "--conditioned", "--seed", "8", "--workers", "1")
    _, four = sample("--n", "20", "--conditioned", "--seed", "8", "--workers", "4")
    monkeypatch.setenv("STABLE_AVOID_WORKERS", "3")
    _, env = sample("--n", "20", "--conditioned", "--seed", "8")
    assert one == four == env


@pytest.mark.parametrize("extra", [("--n", "0"), ("--x", "0.5"), ("--step-scale", "0"),
                                   ("--out", "/nonexistent/dir/file.csv")])
def test_sample_errors_exit_2(extra):
    assert sample(*extra)[0] == 2


def test_bad_workers_env(monkeypatch):
    monkeypatch.setenv("STABLE_AVOID_WORKERS", "many")
    assert sample()[0] == 2


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "stable_avoid", "eval", "h", "--alpha", "1",
                        "--rho", "0.5", "--x", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and "1.31695789692481" in r.stdout
    r = subprocess.run([sys.executable, "-m", "stable_avoid", "eval", "h", "--alpha", "1.5",
                        "--rho", "0.6667", "--x", "2"], capture_output=True, text=True)
    assert r.returncode == 2 and "SpectrallyOneSided" in r.stderr
