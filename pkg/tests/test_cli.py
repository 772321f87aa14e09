import json

import pytest

from mfcert.cli import run
from mfcert.geometry import get_case


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tensor(capsys):
    code, out, _ = call(capsys, "tensor", "--n", "3", "--lambda", "2,1,0", "--nu", "2,1,0")
    d = json.loads(out)
    assert code == 0 and d["dim"] == 64 and not d["mf"]
    assert {"weight": [3, 2, 1], "mult": 2} in d["decomposition"]


def test_branch_and_kostka(capsys):
    code, out, _ = call(capsys, "branch", "--lambda", "2,1,0", "--blocks", "1,2")
    d = json.loads(out)
    assert code == 0 and d["dim"] == 8 and d["mf"]
    code, out, _ = call(capsys, "branch", "--lambda", "2,1,0")
    assert code == 0 and json.loads(out)["dim"] == 8
    code, out, _ = call(capsys, "kostka", "--lambda", "2,1,0", "--nu", "1,1,1")
    assert code == 0 and json.loads(out)["kostka"] == 2


def test_scan(capsys):
    code, out, _ = call(capsys, "scan", "--n", "2", "--bound", "2", "--family", "one-row")
    assert code == 0 and json.loads(out)["assertions"]["one-row"]


@pytest.mark.parametrize("argv", [
    ["tensor", "--lambda", "0,1", "--nu", "1,0"],
    ["tensor", "--lambda", "a,b", "--nu", "1,0"],
    ["tensor", "--n", "3", "--lambda", "1,0", "--nu", "1,0"],
    ["branch", "--lambda", "1,0,0", "--blocks", "1,1"],
    ["certify", "--case", "missing"],
    ["certify"],
    ["hbk", "--case-file", "/nonexistent.json"],
    ["bogus"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, _ = call(capsys, *argv)
    assert code == 2


def test_certify_pass_and_determinism(capsys):
    code, out, _ = call(capsys, "certify", "--case", "u2-torus-line", "--seed", "7", "--samples", "20")
    code2, out2, _ = call(capsys, "certify", "--case", "u2-torus-line", "--seed", "7", "--samples", "20")
    d = json.loads(out)
    assert code == 0 and d["verdict"] == "pass" and out == out2
    assert [r["form"] for r in d["reports"]] == ["first", "second", "third"]


def test_certify_control_fails_with_exit_1(capsys):
    code, out, _ = call(capsys, "certify", "--case", "line-n2-N2-trivial", "--form", "first", "--samples", "10")
    d = json.loads(out)
    assert code == 1 and d["verdict"] == "fail"
    failed = [c["label"] for c in d["reports"][0]["conditions"] if not c["pass"]]
    assert failed == ["sigma-orbit"]


def test_certify_from_case_file_and_out(tmp_path, capsys):
    path = tmp_path / "case.json"
    path.write_text(json.dumps(get_case("u3-grass-line").to_dict()))
    out_path = tmp_path / "report.json"
    code, out, _ = call(capsys, "certify", "--case-file", str(path), "--form", "third", "--samples", "10",
                        "--out", str(out_path))
    assert code == 0 and out == ""
    assert json.loads(out_path.read_text())["verdict"] == "pass"


def test_hbk_slice_kernel_check(capsys):
    code, out, _ = call(capsys, "hbk", "--case", "u3-flag-line", "--samples", "50")
    assert code == 0 and json.loads(out)["failures"] == 0
    code, out, _ = call(capsys, "slice", "--case", "u4-grass-line", "--samples", "30")
    assert code == 0 and json.loads(out)["orbit_failures"] == 0
    code, out, _ = call(capsys, "kernel-check", "--case", "line-n2-N3-torus", "--samples", "20")
    assert code == 0 and all(json.loads(out)["pass"].values())


def test_text_format(capsys):
    code, out, _ = call(capsys, "tensor", "--lambda", "1,0", "--nu", "1,0", "--format", "text")
    assert code == 0 and out.startswith("tensor: PASS") and "(2, 0) x1" in out
