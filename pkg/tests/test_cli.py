import json
import subprocess
import sys
from fractions import Fraction

import pytest

from qclone.cli import main
from qclone.reference import P_TABLE_ROWS


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def as_fraction(obj):
    return Fraction(obj["numerator"], obj["denominator"])


def test_extend_table_json(capsys):
    code, doc = run_json(capsys, "extend", "table", "--nmax", "9", "--dmax", "9")
    assert code == 0 and doc["schema"] == 1
    assert doc["columns"] == list(range(2, 10))
    for row in doc["rows"]:
        assert tuple(as_fraction(v) for v in row["values"]) == P_TABLE_ROWS[row["d"]]


def test_extend_table_csv(capsys):
    code, out = run(capsys, "extend", "table", "--nmax", "3", "--dmax", "3", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["d,N,numerator,denominator", "2,2,1,1", "2,3,1,3", "3,2,1,1", "3,3,7,19"]


def test_extend_verify(capsys):
    code, doc = run_json(capsys, "extend", "verify", "--n", "3", "--d", "3")
    assert code == 0 and doc["agree"] is True
    assert as_fraction(doc["closed"]) == Fraction(7, 19)
    assert as_fraction(doc["primalExplicit"]) == Fraction(7, 19)
    assert as_fraction(doc["primalMatching"]) == Fraction(1, 3)


def test_extend_state33(capsys):
    code, doc = run_json(capsys, "extend", "state33")
    assert code == 0 and doc["psd"] is True
    assert as_fraction(doc["trace"]) == 1
    assert len(doc["marginals"]) == 3
    assert all(as_fraction(m["p"]) == Fraction(7, 19) for m in doc["marginals"])


def test_algebra_compose(capsys):
    args = ["algebra", "compose", "--family", "P", "--k", "3", "--p", "1,3|2,6|4,5", "--q", "1,2|3,5|4,6"]
    code, out = run(capsys, *args, "--format", "text")
    assert code == 0 and out.strip() == "1,2|3,6|4,5@k=3 loops=1"
    code, doc = run_json(capsys, *args)
    assert doc["result"] == "1,2|3,6|4,5@k=3" and doc["loops"] == 1


def test_algebra_compose_errors(capsys):
    code, doc = run_json(capsys, "algebra", "compose", "--p", "1,3|2,x|4,5", "--q", "1,2|3,5|4,6")
    assert code == 1 and "position" in doc["error"]["message"]
    code, doc = run_json(capsys, "algebra", "compose", "--family", "B", "--p", "1,2,4,5|3,6", "--q", "1,4|2,5|3,6")
    assert code == 1


def test_region_member(capsys):
    code, doc = run_json(capsys, "region", "member", "--d", "2", "--p", "2/3,2/3")
    assert code == 0 and doc["status"] == "boundary"
    # four-digit rounding of 2/3 sits 4.7e-5 outside, within a 1e-4 tolerance
    code, doc = run_json(capsys, "region", "member", "--d", "2", "--p", "0.6667,0.6667", "--tol", "1e-4")
    assert code == 0 and doc["status"] == "boundary"
    code, doc = run_json(capsys, "region", "member", "--d", "2", "--p", "1,1")
    assert code == 2 and doc["status"] == "outside" and doc["margin"] > 0
    code, doc = run_json(capsys, "region", "member", "--d", "2", "--p", "0.4,0.4,0.4")
    assert code == 0 and doc["status"] == "inside" and "trace" in doc


def test_region_two_clone_and_boundary(capsys):
    code, doc = run_json(capsys, "region", "two-clone", "--d", "2")
    assert code == 0 and len(doc["ellipses"]) == 16
    assert set(doc["ellipses"][0]) == {"lambda", "a", "b", "c"}
    code, doc = run_json(capsys, "region", "boundary", "--d", "2", "--n", "3", "--samples", "5")
    assert code == 0 and len(doc["samples"]) == 5
    for s in doc["samples"]:
        assert abs(s["margin"]) < 1e-9 and len(s["p"]) == 3 and len(s["witness"]) == 3


def test_channel_symmetric(capsys):
    code, doc = run_json(capsys, "channel", "symmetric", "--n", "2", "--d", "2")
    assert code == 0
    assert doc["fidelity"]["p"] == pytest.approx([2 / 3, 2 / 3], abs=1e-12)
    assert as_fraction(doc["pExact"]) == Fraction(2, 3)
    assert doc["cptp"]["psd"] is True
    assert doc["choi"]["format"] == "coo" and doc["choi"]["n"] == 3


def test_channel_asymmetric(capsys):
    code, doc = run_json(capsys, "channel", "asymmetric", "--d", "2", "--a", "1,0", "--no-choi")
    assert code == 0
    assert doc["fidelity"]["p"] == pytest.approx([1, 0], abs=1e-12)
    assert doc["achieved"] == pytest.approx(doc["bound"], abs=1e-10)
    code, doc = run_json(capsys, "channel", "asymmetric", "--d", "2", "--a=-1,2")
    assert code == 1 and doc["error"]["type"] == "InputError"


def test_dense_cap_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("QCLONE_DENSE_CAP", "8")
    code, doc = run_json(capsys, "channel", "symmetric", "--n", "3", "--d", "2")
    assert code == 4 and doc["error"]["type"] == "CapExceeded"


def test_usage_errors(capsys):
    code, doc = run_json(capsys, "extend", "verify", "--n", "3")
    assert code == 1 and doc["schema"] == 1
    code, doc = run_json(capsys, "region", "member", "--d", "2", "--p", "a,b")
    assert code == 1
    code, doc = run_json(capsys, "extend", "table", "--nmax", "1")
    assert code == 1


def test_deterministic_output(capsys):
    args = ["channel", "asymmetric", "--d", "2", "--a", "0.3,0.7", "--seed", "5"]
    assert run(capsys, *args) == run(capsys, *args)


def test_output_file(tmp_path, capsys):
    target = tmp_path / "table.json"
    code, out = run(capsys, "extend", "table", "--nmax", "3", "--dmax", "3", "--output", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["schema"] == 1


def test_selftest_fast(capsys):
    code, doc = run_json(capsys, "selftest", "--level", "fast")
    assert code == 0 and doc["failed"] == 0 and doc["passed"] == len(doc["checks"])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qclone", "extend", "table", "--nmax", "3", "--dmax", "2", "--format", "csv"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1] == "2,3,1,3"
