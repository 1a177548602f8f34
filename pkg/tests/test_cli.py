import json
import subprocess
import sys

import pytest

from twistfcs import bethe, cli, formfactor

BASE = ["--length", "4", "--twist", "0,0,1,1", "--beta", "1,0,1"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_csv_header_and_rows_outside_verify(capsys):
    code, out, _ = run(capsys, "fcs", *BASE)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "ell,re,im,oracle_re,oracle_im,abs_err,rel_err"
    rows = cli.read_csv_table(out)
    assert [r["ell"] for r in rows] == [0, 1, 2, 3, 4]
    assert all(r["oracle_re"] is None and r["rel_err"] is None for r in rows)
    assert abs(rows[0]["re"] - 1) < 1e-9


def test_verify_mode_fills_errors(capsys):
    code, out, _ = run(capsys, "fcs", *BASE, "--mode", "verify")
    assert code == 0
    rows = cli.read_csv_table(out)
    assert len(rows) == 5 and max(r["rel_err"] for r in rows) <= 1e-8


def test_zero_beta_gives_exact_ones(capsys):
    code, out, _ = run(capsys, "fcs", "--length", "4", "--beta", "0,0,0", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert all(r["value"] == [1.0, 0.0] for r in doc["tables"][0]["rows"])


def test_oracle_mode_bypasses_bethe(capsys, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("Bethe machinery invoked")

    monkeypatch.setattr(bethe, "enumerate_spectrum", boom)
    monkeypatch.setattr(formfactor, "fcs_sum", boom)
    monkeypatch.setattr(cli, "fcs_sum", boom)
    code, out, _ = run(capsys, "fcs", *BASE, "--mode", "oracle")
    assert code == 0 and len(cli.read_csv_table(out)) == 5


def test_branch_both_reports_deviation(capsys):
    code, out, _ = run(capsys, "fcs", *BASE, "--branch", "both")
    assert code == 0
    assert out.count("# branch=") == 2
    dev = float(out.strip().splitlines()[-1].split("=", 1)[1])
    assert dev <= 1e-9
    assert len(cli.read_csv_table(out)) == 10


def test_csv_and_json_encode_same_table(capsys, tmp_path):
    csv_path, json_path = tmp_path / "t.csv", tmp_path / "t.json"
    run(capsys, "fcs", *BASE, "--mode", "verify", "--out", str(csv_path))
    run(capsys, "fcs", *BASE, "--mode", "verify", "--format", "json", "--out", str(json_path))
    rows = cli.read_csv_table(csv_path.read_text())
    table = json.loads(json_path.read_text())["tables"][0]["rows"]
    for a, b in zip(rows, table):
        assert a["ell"] == b["ell"]
        assert [a["re"], a["im"]] == b["value"]
        assert [a["oracle_re"], a["oracle_im"]] == b["oracle"]
        assert a["rel_err"] == b["rel_err"]


def test_outputs_are_deterministic(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        run(capsys, "fcs", *BASE, "--branch", "both", "--format", "json", "--out", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_spectrum_l2(capsys):
    code, out, _ = run(capsys, "spectrum", "--length", "2", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert len(doc["lines"]) == 4
    assert all(r["class"] == "admissible" for r in doc["lines"])


def test_spectrum_json_round_trip(capsys):
    records = cli.spectrum_records(cli.config_from_text("", L=2))
    assert json.loads(json.dumps(records)) == records
    code, out, _ = run(capsys, "spectrum", "--length", "2", "--format", "json")
    assert json.loads(out)["lines"] == records


def test_spectrum_tilde_side_equals_k_side_without_field(capsys):
    _, k_side, _ = run(capsys, "spectrum", "--length", "2", "--beta", "0,0,0", "--format", "json")
    _, kt_side, _ = run(capsys, "spectrum", "--length", "2", "--beta", "0,0,0", "--format", "json", "--side", "Kt")
    a, b = json.loads(k_side)["lines"], json.loads(kt_side)["lines"]
    assert [r["q_poly"] for r in a] == [r["q_poly"] for r in b]


def test_spectrum_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--length", "2")
    assert code == 0
    assert out.splitlines()[0].startswith("eigen_index,class,residual")
    assert len(out.splitlines()) == 5


def test_verify_default_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert "FAIL" not in out and out.strip().endswith("ALL PASS")


def test_verify_tampered_tolerance_fails(capsys):
    code, out, _ = run(capsys, "verify", "--tol", "1e-20", "--format", "json")
    doc = json.loads(out)
    assert code == 1
    assert doc["passed"] is False
    assert any(not g["passed"] for g in doc["groups"])


def test_config_error_is_structured(capsys, tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("L: 4\nmood: maba\n")
    code, out, err = run(capsys, "fcs", "--config", str(cfg))
    rec = json.loads(err)
    assert code == 2 and out == ""
    assert rec["field"] == "mood" and rec["line"] == 2


def test_pipeline_error_is_structured(capsys):
    code, _, err = run(capsys, "fcs", "--length", "2", "--twist", "1,-1,0,0")
    rec = json.loads(err)
    assert code == 3
    assert rec["error"] == "NonGenericError" and "stage" in rec


def test_flags_override_config(capsys):
    code, out, _ = run(capsys, "fcs", "--config", "configs/default.yaml", "--ell", "1..2", "--length", "2")
    assert code == 0
    assert [r["ell"] for r in cli.read_csv_table(out)] == [1, 2]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "twistfcs.cli", "fcs", "--length", "2", "--mode", "oracle"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("ell,re,im")


def test_reference_config_at_eight_sites(capsys):
    code, out, _ = run(capsys, "fcs", "--config", "configs/sigma_x_L8_beta101.yaml", "--branch", "0")
    rows = cli.read_csv_table(out)
    assert code == 0
    assert [r["ell"] for r in rows] == list(range(9))
    assert max(r["rel_err"] for r in rows) <= 1e-6
