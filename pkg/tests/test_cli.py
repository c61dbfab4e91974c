import csv
import io
import json
import math
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from cfdim.cli import run

SCHEMA = json.loads(resources.files("cfdim").joinpath("schemas/run_record.schema.json").read_text())


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    doc = json.loads(out.getvalue())
    jsonschema.validate(doc, SCHEMA)
    return code, doc, err.getvalue()


def test_gr_both():
    code, doc, _ = call("gr", "--r", "3", "--s", "0.7", "--method", "both")
    assert code == 0
    assert doc["recursive"] == pytest.approx(0.4341772151898734, abs=1e-15)
    assert doc["diff"] < 1e-12


def test_dimension_with_oracle(tmp_path):
    path = tmp_path / "sweep.csv"
    code, doc, err = call(
        "dimension", "--r", "1", "--tau", "const:0.5", "--h", "logT", "--M-list", "50,100,200", "--oracle", "--csv", str(path)
    )
    assert code == 0
    s = [row[1] for row in doc["M_sequence"]]
    assert s == sorted(s)
    assert doc["oracle"] == pytest.approx(2 / 3, abs=1e-12)
    assert doc["extrapolation"]["heuristic"] is True
    assert any("heuristic" in w for w in doc["warnings"]) and "heuristic" in err
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["M", "s_M", "bracket_lo", "bracket_hi"] and len(rows) == 4


def test_pressure_single_branch():
    code, doc, _ = call("pressure", "--alphabet", "1..1", "--h", "logT", "--tau", "const:0", "--s", "1", "--method", "spectral")
    assert code == 0
    assert doc["value"] == pytest.approx(-2 * math.log((1 + math.sqrt(5)) / 2), abs=1e-10)


def test_pressure_both_methods():
    code, doc, _ = call("pressure", "--alphabet", "{1,2}", "--tau", "const:0", "--s", "0.8", "--method", "both", "--n", "14")
    assert code == 0
    assert doc["diff"] < 1e-3
    assert doc["brute"]["sequence"][-1]["n"] == 14


def test_budget_refusal():
    argv = ("pressure", "--alphabet", "1..9", "--h", "expr:1 + x", "--s", "0.8", "--method", "brute", "--n", "9")
    code, doc, err = call(*argv)
    assert code == 3 and doc["error"]["reason"] == "budget"
    assert "387420489" in doc["error"]["message"] and err.startswith("error:")


def test_sample_and_boxdim(tmp_path):
    pts = tmp_path / "points.csv"
    code, doc, _ = call("sample", "--r", "1", "--tau", "const:0.5", "--M", "20", "--depth", "4", "--count", "1500", "--seed", "3", "--emit", str(pts))
    assert code == 0 and doc["count"] == 1500 and "points" not in doc
    header = pts.open().readline().strip()
    assert header == "seed,depth,numerator,denominator,float64_value"
    code, doc, err = call("boxdim", "--points", str(pts))
    assert code == 0 and doc["auto_scales"] and 0 < doc["slope"] < 1
    assert "scales chosen automatically" in err
    code, doc, _ = call("boxdim", "--points", str(pts), "--scales", "1e-3,1e-4,1e-5")
    assert code == 2 and doc["error"]["reason"] == "usage"


def test_sample_inline_points_and_ladder():
    code, doc, _ = call("sample", "--r", "2", "--count", "3", "--depth", "2")
    assert code == 0 and len(doc["points"]) == 3
    assert 0.5 < doc["ladder_s"] < 1 and abs(doc["telescoping_residual"]) < 1e-12


def test_config_echo_reproduces_run(tmp_path):
    code, first, _ = call("--deterministic", "sample", "--count", "4", "--seed", "9", "--m-rule", "3j")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(first["config"]))
    code, again, _ = call("--config", str(cfg), "sample")
    assert code == 0
    assert again["points"] == first["points"] and again["config"] == first["config"]


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"r": 2, "s": 0.7, "method": "closed"}))
    code, doc, _ = call("gr", "--config", str(cfg), "--r", "3")
    assert code == 0 and doc["config"]["r"] == 3
    assert doc["closed"] == pytest.approx(0.4341772151898734, abs=1e-15) and "recursive" not in doc


@pytest.mark.parametrize(
    "payload, fragment",
    [({"bogus": 1}, "unknown config keys"), ({"command": "pressure"}, "config is for"), ([1, 2], "JSON object")],
)
def test_bad_config(tmp_path, payload, fragment):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(payload))
    code, doc, _ = call("--config", str(cfg), "gr", "--r", "1", "--s", "0.5")
    assert code == 2 and fragment in doc["error"]["message"]


@pytest.mark.parametrize(
    "argv",
    [
        ("gr", "--r", "0", "--s", "0.5"),
        ("gr", "--r", "2", "--s", "1.5"),
        ("pressure", "--alphabet", "3..1", "--s", "1"),
        ("dimension", "--M-list", "50,20"),
        ("dimension", "--tau", "expr:1 +"),
        ("sample", "--m-rule", "4,4,5,6"),
        ("nosuch",),
        (),
    ],
)
def test_usage_errors(argv):
    code, doc, err = call(*argv)
    assert code == 2 and doc["status"] == "error" and doc["error"]["reason"] == "usage"
    assert err.count("\n") == 1


def test_oracle_missing_is_warned():
    code, doc, _ = call("dimension", "--tau", "expr:0.5 + x", "--M-list", "5,10", "--oracle")
    assert code == 0 and doc["oracle"] is None
    assert any("closed form" in w for w in doc["warnings"])


def test_dimension_both_methods():
    code, doc, _ = call("dimension", "--tau", "const:0", "--M-list", "2", "--method", "both", "--n", "16")
    assert code == 0
    assert doc["fn"]["method"] == "limit/fn"
    assert doc["fn_pressure_gap"] < 0.02


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "cfdim.cli", "gr", "--r", "2", "--s", "0.5", "--json-indent", "0"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["recursive"] == pytest.approx(0.25)
    assert proc.stderr == ""
