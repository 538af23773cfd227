"""Command-line surface: exit codes, document shape, determinism, CSV."""

import json
import os

import numpy as np
import pytest

from nlkpp.cli import dumps, main, validate_document
from nlkpp.errors import UsageError

LK1_DOC = {
    "family": "laplace", "mu": 1.0,
    "params": {"kappa_plus": 2.0, "m": 1.0, "kappa_local": 1.0,
               "kappa_nonlocal": 0.0},
}


@pytest.fixture()
def kernel_file(tmp_path):
    p = tmp_path / "lk1.json"
    p.write_text(json.dumps(LK1_DOC))
    return str(p)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


# ---------------------------------------------------------------------------
# serialization

def test_dumps_17_digits():
    text = dumps({"x": 1.0 / 3.0})
    assert text == '{"x":0.33333333333333331}'


def test_dumps_sorted_and_typed():
    text = dumps({"b": True, "a": 2, "c": [1.5, None, "s"],
                  "d": float("inf"), "e": float("nan")})
    assert text == '{"a":2,"b":true,"c":[1.5,null,"s"],"d":"inf","e":"nan"}'


def test_dumps_numpy_scalars():
    assert dumps({"v": np.float64(0.5)}) == '{"v":0.5}'
    assert dumps({"v": np.int64(3)}) == '{"v":3}'
    assert dumps({"v": np.array([1.0, 2.0])}) == '{"v":[1,2]}'


def test_validate_document():
    ok = {"manifest": {"command": "speed", "inputs": [], "params": {},
                       "tolerances": {}, "version": "0.1.0",
                       "duration_s": 0.1},
          "result": {}}
    validate_document(ok)
    with pytest.raises(UsageError):
        validate_document({"result": {}})
    both = dict(ok, error={"type": "X", "message": "y"})
    with pytest.raises(UsageError):
        validate_document(both)
    bare = {"manifest": dict(ok["manifest"])}
    with pytest.raises(UsageError):
        validate_document(bare)


def test_shipped_schema_parses():
    import nlkpp
    path = os.path.join(os.path.dirname(nlkpp.__file__), "schemas",
                        "result.schema.json")
    with open(path) as fh:
        schema = json.load(fh)
    assert schema["properties"]["manifest"]["required"] == [
        "command", "inputs", "params", "tolerances", "version", "duration_s"]


# ---------------------------------------------------------------------------
# happy paths

def test_speed_document(kernel_file, capsys):
    code, doc = run_cli(capsys, "speed", "--kernel", kernel_file)
    assert code == 0
    validate_document(doc)
    assert doc["manifest"]["command"] == "speed"
    assert doc["manifest"]["inputs"] == [kernel_file]
    assert abs(doc["result"]["c_star"] - 3.3301906767855614) < 1e-12
    assert doc["result"]["kernel_class"] == "V"


def test_speed_at_speed_block(kernel_file, capsys):
    code, doc = run_cli(capsys, "speed", "--kernel", kernel_file, "--c", "4.0")
    assert code == 0
    assert doc["result"]["at_speed"]["multiplicity"] == 1
    assert 0 < doc["result"]["at_speed"]["lambda_c"] < 1


def test_check_document(kernel_file, capsys):
    code, doc = run_cli(capsys, "check", "--kernel", kernel_file)
    assert code == 0
    statuses = {q: e["status"] for q, e in doc["result"]["assumptions"].items()}
    assert statuses == {f"Q{i}": "holds" for i in range(1, 8)}
    assert doc["result"]["theta"] == 1.0


def test_params_inline_override(kernel_file, capsys):
    code, doc = run_cli(capsys, "speed", "--kernel", kernel_file,
                        "--params", "kappa_plus=8,m=1,kappa_local=1")
    assert code == 0
    assert doc["manifest"]["params"]["kappa_plus"] == 8
    assert doc["result"]["c_star"] > 3.3302


def test_mu_star_document(capsys):
    code, doc = run_cli(capsys, "mu-star", "--q", "3")
    assert code == 0
    r = doc["result"]
    assert abs(r["mu_star"] - 0.9451431327) < 1e-8
    assert r["bracket"][0] < r["mu_star"] < r["bracket"][1]
    assert r["inside_bracket"] is True


def test_determinism_of_result_block(kernel_file, capsys):
    docs = []
    texts = []
    for _ in range(2):
        code = main(["classify", "--kernel", kernel_file])
        assert code == 0
        text = capsys.readouterr().out
        texts.append(text)
        docs.append(json.loads(text))
    # identical manifests give byte-identical result blocks; only the
    # duration field may move
    r0 = texts[0].split('"result":', 1)[1]
    r1 = texts[1].split('"result":', 1)[1]
    assert r0 == r1
    assert docs[0]["manifest"]["version"] == docs[1]["manifest"]["version"]


# ---------------------------------------------------------------------------
# exit codes and error documents

def test_usage_error_exit_1(capsys):
    code, doc = run_cli(capsys, "speed")
    assert code == 1
    assert doc["error"]["type"] == "UsageError"


def test_missing_file_exit_1(capsys, tmp_path):
    code, doc = run_cli(capsys, "speed", "--kernel",
                        str(tmp_path / "nope.json"))
    assert code == 1


def test_assumption_failure_exit_2(capsys, tmp_path):
    bad = dict(LK1_DOC, params={"kappa_plus": 0.5, "m": 1.0,
                                "kappa_local": 1.0})
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    code, doc = run_cli(capsys, "check", "--kernel", str(p))
    assert code == 2
    assert doc["error"]["label"] == "Q1"
    # the full report rides along for post-mortems
    assert doc["error"]["diagnostics"]["Q1"]["status"] == "fails"


def test_no_wave_exit_2(capsys, kernel_file):
    code, doc = run_cli(capsys, "profile", "--kernel", kernel_file,
                        "--c", "1.0")
    assert code == 2
    assert doc["error"]["label"] == "no-wave"


def test_zero_speed_exit_2(capsys, kernel_file):
    code, doc = run_cli(capsys, "profile", "--kernel", kernel_file,
                        "--c", "0.0")
    assert code == 2
    assert doc["error"]["label"] == "c-zero-unsupported"


def test_unknown_subcommand_exit_1(capsys):
    assert main(["frobnicate"]) == 1


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0


# ---------------------------------------------------------------------------
# file outputs

def test_out_dir_json_and_csv(kernel_file, capsys, tmp_path):
    out = str(tmp_path / "run")
    code, doc = run_cli(capsys, "speed", "--kernel", kernel_file,
                        "--csv", "--out", out)
    assert code == 0
    with open(os.path.join(out, "speed.json")) as fh:
        on_disk = json.load(fh)
    assert on_disk["result"] == doc["result"]
    with open(os.path.join(out, "dispersion.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "# manifest: speed.json"
    assert lines[1] == "lambda,G,T,h"
    cols = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    # the sampled G column sits above the true minimum and dips close to it
    assert cols[:, 1].min() >= doc["result"]["c_star"] - 1e-12
    assert cols[:, 1].min() - doc["result"]["c_star"] < 1e-2


def test_csv_without_out_rejected(kernel_file, capsys):
    code, doc = run_cli(capsys, "speed", "--kernel", kernel_file, "--csv")
    assert code == 1


def test_truncate_sweep_csv(kernel_file, capsys, tmp_path):
    out = str(tmp_path / "tr")
    code, doc = run_cli(capsys, "truncate-sweep", "--kernel", kernel_file,
                        "--radii", "2,5,10", "--csv", "--out", out)
    assert code == 0
    with open(os.path.join(out, "truncation.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[1] == "R,A_plus,theta_R,lambda_star_n,c_star_n,gap"
    assert len(lines) == 5
    gaps = [float(ln.split(",")[-1]) for ln in lines[2:]]
    assert gaps == sorted(gaps, reverse=True)


def test_evolve_front_csv(kernel_file, capsys, tmp_path):
    out = str(tmp_path / "ev")
    code, doc = run_cli(capsys, "evolve", "--kernel", kernel_file,
                        "--dt", "0.02", "--horizon", "2",
                        "--domain", "-15,15", "--csv", "--out", out)
    assert code == 0
    with open(os.path.join(out, "front.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[1] == "t,front_position"
    ts = [float(ln.split(",")[0]) for ln in lines[2:]]
    assert ts == sorted(ts)
    assert abs(ts[-1] - 2.0) < 1e-9


# ---------------------------------------------------------------------------
# sweep fan-out

def test_sweep_preserves_order(capsys, tmp_path):
    mus = [1.0, 2.0, 4.0]
    points = [dict(LK1_DOC, mu=mu) for mu in mus]
    p = tmp_path / "points.json"
    p.write_text(json.dumps(points))
    code, doc = run_cli(capsys, "sweep", "--points", str(p), "--task", "speed")
    assert code == 0
    rows = doc["result"]["points"]
    assert [r["index"] for r in rows] == [0, 1, 2]
    stars = [r["c_star"] for r in rows]
    # c* scales like 1/mu for the scaled two-sided exponential
    assert abs(stars[0] / stars[1] - 2.0) < 1e-9
    assert abs(stars[1] / stars[2] - 2.0) < 1e-9


def test_sweep_worker_pool_matches_serial(capsys, tmp_path, monkeypatch):
    points = [dict(LK1_DOC, mu=mu) for mu in (1.0, 1.5, 2.0, 3.0)]
    p = tmp_path / "points.json"
    p.write_text(json.dumps(points))
    code = main(["sweep", "--points", str(p), "--task", "classify"])
    serial = json.loads(capsys.readouterr().out)["result"]
    monkeypatch.setenv("NLKPP_WORKERS", "3")
    code = main(["sweep", "--points", str(p), "--task", "classify"])
    pooled = json.loads(capsys.readouterr().out)["result"]
    assert serial == pooled


def test_console_script_runs(tmp_path):
    import subprocess
    p = tmp_path / "k.json"
    p.write_text(json.dumps(LK1_DOC))
    r = subprocess.run(["nlkpp", "classify", "--kernel", str(p)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["result"]["kernel_class"] == "V"


def test_sweep_keeps_going_past_bad_point(capsys, tmp_path):
    points = [LK1_DOC,
              dict(LK1_DOC, params={"kappa_plus": 0.5, "m": 1.0,
                                    "kappa_local": 1.0}),
              dict(LK1_DOC, mu=2.0)]
    p = tmp_path / "points.json"
    p.write_text(json.dumps(points))
    code, doc = run_cli(capsys, "sweep", "--points", str(p), "--task", "speed")
    assert code == 0
    rows = doc["result"]["points"]
    assert "c_star" in rows[0]
    assert rows[1]["error"]["label"] == "Q1"
    assert "c_star" in rows[2]
