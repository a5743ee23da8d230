import csv
import json

import pytest

from leakft.circuit import CircuitBuilder, from_json, from_text, to_json, to_text
from leakft.cli import EXIT_CAPACITY, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from leakft.steane import get_gadget


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("argv,expected", [
    (["count", "cnot-exrec"], "575"),
    (["count", "cnot-exrec", "--lru"], "1247"),
    (["count", "knill-ec", "--lru", "--what=lrus"], "28"),
    (["count", "steane-ec", "--lru", "--what=lrus"], "35"),
    (["count", "steane-ec", "--lru", "--what=strrecs"], "11"),
    (["count", "lru"], "6"),
])
def test_count(capsys, argv, expected):
    code, out, _ = run_cli(capsys, *argv)
    assert code == EXIT_OK
    assert out.strip() == expected


def test_count_all_and_reports(capsys, tmp_path):
    j, c = tmp_path / "r.json", tmp_path / "r.csv"
    code, out, _ = run_cli(capsys, "count", "knill-ec-lru", "--what=all", "--json", str(j), "--csv", str(c))
    assert code == EXIT_OK and "locations: 310" in out
    assert json.loads(j.read_text())["counts"]["lrus"] == 28
    rows = list(csv.DictReader(c.open()))
    assert rows[0]["strrecs"] == "11"


def test_count_bad_field(capsys):
    code, _, err = run_cli(capsys, "count", "cnot-exrec", "--what=nope")
    assert code == EXIT_USAGE and "--what" in err


def test_unknown_gadget_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "count", "nope")
    assert code == EXIT_USAGE and "unknown gadget" in err


def test_check_passes_on_lru_ec(capsys, tmp_path):
    j = tmp_path / "r.json"
    code, out, _ = run_cli(capsys, "check", "steane-ec", "--lru", "--json", str(j))
    assert code == EXIT_OK
    assert "P0' : pass" not in out and "P0': pass" in out
    rep = json.loads(j.read_text())
    assert all(p["passed"] for p in rep["properties"])


def test_check_fails_on_broken_fixture(capsys):
    code, out, _ = run_cli(capsys, "check", "broken-fixture", "--props=P1")
    assert code == EXIT_FAIL
    assert "FAIL" in out and "counterexample" in out


def test_check_rejects_inapplicable_property(capsys):
    code, _, err = run_cli(capsys, "check", "steane-ec-lru", "--props=P4")
    assert code == EXIT_USAGE


def test_threshold_outputs(capsys):
    code, out, _ = run_cli(capsys, "threshold", "--scale")
    assert code == EXIT_OK and "2.1e-06" in out
    code, out, _ = run_cli(capsys, "threshold", "--crude")
    assert "1.2872e-06" in out
    code, out, _ = run_cli(capsys, "threshold", "--formula", "--A=1", "--alpha=1")
    assert "0.367879" in out
    code, out, _ = run_cli(capsys, "threshold", "--malignant=999")
    assert "malignant-pairs: 0.001001" in out


def test_threshold_all_by_default(capsys, tmp_path):
    j = tmp_path / "t.json"
    code, out, _ = run_cli(capsys, "threshold", "--json", str(j))
    kinds = [b["kind"] for b in json.loads(j.read_text())["bounds"]]
    assert kinds == ["pair-formula", "factor-scaling", "crude-pairs"]


@pytest.mark.parametrize("inp", ["zero", "one", "plus", "i", "leaked"])
def test_simulate_lru(capsys, inp):
    code, out, _ = run_cli(capsys, "simulate", "lru", f"--input={inp}")
    assert code == EXIT_OK
    # a leaked data qubit gives a fixed outcome, halving the branches
    assert out.count("branch") == (2 if inp == "leaked" else 4)
    assert "output leakage=0.000e+00" in out


def test_simulate_lru_bad_input(capsys):
    code, _, _ = run_cli(capsys, "simulate", "lru", "--input=minus")
    assert code == EXIT_USAGE


def test_simulate_mbqc_unit(capsys):
    code, out, _ = run_cli(capsys, "simulate", "mbqc-unit", "--angles=0,pi/4,pi/2,-pi/4")
    assert code == EXIT_OK and "branches=16" in out
    code, _, _ = run_cli(capsys, "simulate", "mbqc-unit", "--angles=0,1")
    assert code == EXIT_USAGE


def test_simulate_empty(capsys):
    code, out, _ = run_cli(capsys, "simulate", "empty")
    assert code == EXIT_OK and "identity" in out


def test_simulate_circuit_file(capsys, tmp_path):
    b = CircuitBuilder()
    q = b.qubit()
    b.prep(q, "+")
    b.measure(q, "Z")
    f = tmp_path / "c.txt"
    f.write_text(to_text(b.build()))
    code, out, _ = run_cli(capsys, "simulate", "circuit", "--file", str(f))
    assert code == EXIT_OK and out.count("p=0.500000") == 2


def test_capacity_exit_code(capsys, tmp_path):
    b = CircuitBuilder()
    for q in b.qubits(11):
        b.prep(q, "0")
    f = tmp_path / "big.json"
    f.write_text(to_json(b.build()))
    code, _, err = run_cli(capsys, "simulate", "circuit", "--file", str(f))
    assert code == EXIT_CAPACITY and "capacity" in err


def test_export_round_trip(capsys, tmp_path):
    j = tmp_path / "g.json"
    t = tmp_path / "g.txt"
    assert main(["export", "knill-ec", "--lru", "-o", str(j)]) == EXIT_OK
    assert main(["export", "knill-ec-lru", "--format=text", "-o", str(t)]) == EXIT_OK
    c = get_gadget("knill-ec-lru").circuit
    assert from_json(j.read_text()) == c
    assert from_text(t.read_text()) == c
    code, out, _ = run_cli(capsys, "export", "mbqc-unit", "--angles=0,0,0,0")
    assert json.loads(out)["inputs"] == [0, 1]


def test_missing_command_exits_with_usage():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2
