import json
import subprocess
import sys

import pytest

from qkflag import __version__
from qkflag.cli import EXIT_FAIL, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_passes_and_embeds_config(capsys):
    code, out, _ = run(capsys, "verify", "--shape", "1,2:3", "--seed", "4")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["passed"]
    assert doc["version"] == __version__
    assert doc["config"]["shape"] == "1,2:3" and doc["config"]["seed"] == 4
    assert all(c["tag"] for c in doc["checks"])
    names = {c["name"] for c in doc["checks"]}
    assert {"rank_gate", "wronskian_determinants", "vieta_equals_whitney", "classical_fixed_point_audit"} <= names


def test_verify_projective_line_text(capsys):
    code, out, _ = run(capsys, "verify", "--shape", "1:2", "--text", "--nonequivariant")
    assert code == EXIT_OK
    assert "overall: PASS" in out


def test_output_is_deterministic(capsys):
    first = run(capsys, "spectrum", "--shape", "1,2:3", "--q", "1/8,1/9")[1]
    second = run(capsys, "spectrum", "--shape", "1,2:3", "--q", "1/8,1/9")[1]
    assert first == second


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--shape", "3,2:4"],
        ["verify", "--shape", "1,2"],
        ["verify"],
        ["spectrum", "--shape", "1:2", "--lambda", "2,3,4"],
        ["jfun", "--shape", "1:2", "--cap", "-1"],
        ["bogus"],
    ],
)
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_USAGE


def test_safety_radius_refusal_and_force(capsys):
    code, _, err = run(capsys, "spectrum", "--shape", "1:2", "--q", "9/10")
    assert code == EXIT_USAGE and "radius" in err
    code, out, _ = run(capsys, "spectrum", "--shape", "1:2", "--q", "9/10", "--force")
    assert code == EXIT_OK


def test_present_writes_four_presentations(capsys, tmp_path):
    code, out, _ = run(capsys, "present", "--shape", "1,2:3", "--out-dir", str(tmp_path))
    assert code == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == sorted(f"{n}.{ext}" for n in ("classical_whitney", "quantum_whitney", "bethe", "wronskian") for ext in ("json", "txt"))
    doc = json.loads((tmp_path / "bethe.json").read_text())
    assert len(doc["relations"]) == 3


def test_sabotaged_relations_fail(capsys, tmp_path):
    run(capsys, "present", "--shape", "1,2:3", "--out-dir", str(tmp_path))
    doc = json.loads((tmp_path / "quantum_whitney.json").read_text())
    doc["relations"][-1]["terms"][-1][1] = "7/3"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", "--shape", "1,2:3", "--relations", str(bad))
    report = json.loads(out)
    assert code == EXIT_FAIL and not report["passed"]
    assert [c["name"] for c in report["checks"] if not c["passed"]]


def test_missing_relations_file_is_resource_error(capsys, tmp_path):
    code, _, _ = run(capsys, "verify", "--shape", "1:2", "--relations", str(tmp_path / "nope.json"))
    assert code == EXIT_RESOURCE


def test_jfun_rows(capsys):
    code, out, _ = run(capsys, "jfun", "--shape", "1:2")
    doc = json.loads(out)
    assert code == EXIT_OK and len(doc["rows"]) == 5
    assert [r["degree"] for r in doc["rows"]] == [0, -2, -6, -12, -20]


def test_jfun_with_qde(capsys):
    code, out, _ = run(capsys, "jfun", "--shape", "1:2", "--cap", "2", "--qde")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["qde"][0]["boundary_only"]


def test_config_file_and_output(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"shape": "1:3", "equivariant": False}))
    dest = tmp_path / "report.json"
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--output", str(dest))
    assert code == EXIT_OK and out == ""
    assert json.loads(dest.read_text())["config"]["equivariant"] is False
    cfg.write_text(json.dumps({"shape": "1:3", "colour": 1}))
    assert run(capsys, "verify", "--config", str(cfg))[0] == EXIT_USAGE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qkflag", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
