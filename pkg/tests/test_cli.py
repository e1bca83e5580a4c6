"""Command-line interface: output formats, determinism and exit codes."""

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from nonclassicality.cli import EXIT_NUMERICAL, EXIT_USAGE, main
from nonclassicality.fock_core import to_json_doc
from nonclassicality.states import rho_p


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestMeasure:
    def test_pure_state(self, capsys):
        code, out, _ = run(capsys, "measure", "--state", "sqvac:0.5", "--restarts", "2", "--verify")
        assert code == 0
        doc = json.loads(out)
        assert doc["N"] == pytest.approx(doc["W"], abs=1e-9)
        assert doc["meta"]["convention"] == "variance"
        assert doc["meta"]["dim"] == 35
        assert doc["verify"]["passed"]

    def test_mixed_state_file(self, capsys, tmp_path):
        f = tmp_path / "rho.json"
        f.write_text(json.dumps(to_json_doc(rho_p(0.75).matrix)))
        code, out, _ = run(capsys, "measure", "--state-file", str(f), "--restarts", "3")
        assert code == 0
        doc = json.loads(out)
        lo, hi = doc["N_bracket"]
        assert lo == pytest.approx(0.375)
        assert lo <= hi + 1e-9
        assert "bracketed" in doc["meta"]["note"]

    def test_superposition_file(self, capsys, tmp_path):
        f = tmp_path / "sup.json"
        f.write_text(json.dumps([{"c": 1, "alpha": 1.5}, {"c": 1, "alpha": -1.5}]))
        code, out, _ = run(capsys, "measure", "--state-file", str(f), "--restarts", "1")
        assert code == 0
        assert json.loads(out)["pure"] is True

    def test_byte_identical(self, capsys):
        args = ["measure", "--state", "cat:-:1", "--restarts", "2", "--seed", "5"]
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args)
        assert a == b


class TestExitCodes:
    def test_bad_spec(self, capsys):
        code, _, err = run(capsys, "measure", "--state", "bogus:1")
        assert code == EXIT_USAGE
        assert "unknown state family" in err

    def test_missing_state(self, capsys):
        code, _, _ = run(capsys, "measure")
        assert code == EXIT_USAGE

    def test_argparse_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["measure", "--no-such-flag"])
        assert exc.value.code == 2

    def test_truncation(self, capsys):
        code, _, err = run(capsys, "measure", "--state", "fock:8", "--dim", "5")
        assert code == EXIT_NUMERICAL
        assert "dim >= " in err

    def test_truncated_state_file(self, capsys, tmp_path):
        f = tmp_path / "psi.json"
        f.write_text(json.dumps(to_json_doc(np.array([0.0, 0.6, 0.8]))))
        code, _, _ = run(capsys, "measure", "--state-file", str(f))
        assert code == EXIT_NUMERICAL


class TestTable1:
    def test_verify_and_notes(self, capsys):
        code, out, _ = run(capsys, "table1", "--verify")
        assert code == 0
        doc = json.loads(out)
        sq = [r for r in doc["rows"] if r["family"] == "squeezed_vacuum"]
        assert len(sq) == 3
        assert all("N_printed_table" in r and r["note"] for r in sq)
        assert doc["notes"]
        assert max(r["abs_diff"] for r in doc["rows"]) < 1e-8

    def test_table_format(self, capsys):
        code, out, _ = run(capsys, "table1", "--table")
        assert code == 0
        assert out.splitlines()[0].split()[:2] == ["family", "params"]


class TestScan:
    def test_rho_p_csv(self, capsys):
        code, out, _ = run(capsys, "scan", "rho_p", "--points", "11", "--verify")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["p", "F_X", "W", "W_formula"]
        assert len(rows) == 12
        for p, F, W, Wf in rows[1:]:
            assert float(W) == pytest.approx(float(Wf), abs=1e-10)

    def test_mzi_tau_csv(self, capsys):
        code, out, _ = run(capsys, "scan", "mzi_tau", "--state", "fock:1", "--alpha-r", "1", "--verify")
        assert code == 0
        assert len(out.splitlines()) == 10

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "scan.csv"
        code, out, _ = run(capsys, "scan", "rho_p", "--points", "3", "--out", str(target))
        assert code == 0 and out == ""
        assert target.read_text().startswith("p,F_X")


class TestOtherCommands:
    def test_mzi(self, capsys):
        code, out, _ = run(capsys, "mzi", "--state", "fock:1", "--alpha-r", "1.5", "--align", "--verify")
        assert code == 0
        rep = json.loads(out)["report"]
        assert rep["witness_W"] == pytest.approx(1.0, abs=1e-9)

    def test_mzi_phase_scan(self, capsys):
        code, out, _ = run(capsys, "mzi", "--state", "sqvac:0.5:1", "--alpha-r", "1", "--scan", "phi")
        assert code == 0
        assert len(out.splitlines()) == 37

    def test_macro(self, capsys):
        code, out, _ = run(capsys, "macro", "--state", "cat:+:3", "--verify")
        assert code == 0
        assert json.loads(out)["report"]["N_total"] == pytest.approx(18.0, abs=1e-3)

    def test_macro_rejects_fock(self, capsys):
        code, _, _ = run(capsys, "macro", "--state", "fock:2")
        assert code == EXIT_USAGE

    def test_roof(self, capsys):
        code, out, _ = run(capsys, "roof", "--state", "cat:+:1", "--verify")
        assert code == 0
        res = json.loads(out)["result"]
        assert res["N_upper"] == pytest.approx(res["W_lower"], abs=1e-9)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "nonclassicality", "scan", "rho_p", "--points", "3"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert proc.stdout.splitlines()[0] == "p,F_X,W,W_formula"
