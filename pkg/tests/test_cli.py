import json
import os
import subprocess
import sys

import pytest

from equiscreen.cli import run

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")
S1 = os.path.join(SCENARIOS, "s1.scn")
S1_FLAT = os.path.join(SCENARIOS, "s1_flat.scn")

SMALL = ["--set", "grid.n_alpha=9", "--set", "grid.n_beta=9"]


def _read(out, name):
    with open(os.path.join(out, name), "r", encoding="utf-8") as fh:
        return fh.read()


def test_validate_writes_an_enveloped_report(tmp_path):
    out = str(tmp_path)
    assert run(["validate", "--scenario", S1, "--out", out, "--format", "both"]) == 0
    report = json.loads(_read(out, "validate.json"))
    assert report["schema"] == 1
    assert report["pass"] is True
    assert len(report["scenario_sha256"]) == 64
    assert report["version"]
    assert os.path.exists(os.path.join(out, "validate.csv"))


def test_verify_is_byte_identical_across_runs(tmp_path):
    out = str(tmp_path)
    args = ["verify", "--scenario", S1, "--out", out, "--seed", "42", *SMALL]
    assert run(args) == 0
    first = _read(out, "verify.json")
    assert run(args) == 0
    assert _read(out, "verify.json") == first
    report = json.loads(first)
    assert report["pass"] is True
    assert {c["check"] for c in report["checks"]} == {
        "ic", "ir", "equity", "merit_monotone", "convexity",
    }


def test_construct_rejects_out_of_range_thresholds(tmp_path, capsys):
    code = run(["construct", "--scenario", S1, "--out", str(tmp_path), "--eta-star", "9.0"])
    assert code == 2
    err = capsys.readouterr().err
    assert "merit range" in err and "[1.0, 3.0]" in err


def test_construct_exports_fields_and_manifest(tmp_path):
    out = str(tmp_path)
    assert run(["construct", "--scenario", S1, "--mechanism", "mixture", "--n-steps", "20",
                "--format", "both", "--out", out, *SMALL]) == 0
    manifest = json.loads(_read(out, "construct_manifest.json"))
    assert manifest["mechanism"]["mechanism"] == "mixture"
    assert len(manifest["mechanism"]["weights"]) == manifest["mechanism"]["n_components"]
    csv = _read(out, "mechanism.csv").splitlines()
    assert csv[0] == "alpha,beta,kappa,lambda,eta,x,p,q,V_implied"
    assert len(csv) == 1 + 81
    # shortest round-trip float formatting
    value = csv[1].split(",")[0]
    assert repr(float(value)) == value


def test_probe_small_grid_payments(tmp_path):
    out = str(tmp_path)
    assert run(["probe", "--scenario", S1, "--instrument", "payments",
                "--set", "grid.n_alpha=6", "--set", "grid.n_beta=6", "--out", out]) == 0
    report = json.loads(_read(out, "probe.json"))
    assert report["value"] <= 1e-6


def test_probe_rejects_big_grids(tmp_path, capsys):
    code = run(["probe", "--scenario", S1, "--instrument", "payments", "--out", str(tmp_path)])
    assert code == 2
    assert "capped" in capsys.readouterr().err


def test_compare_reports_not_applicable(tmp_path):
    out = str(tmp_path)
    assert run(["compare", "--scenario", S1, "--anchor", "0.5,1.5", "--out", out, *SMALL]) == 0
    report = json.loads(_read(out, "compare.json"))
    assert report["applicable"] is False
    assert report["verdict"] is None


def test_compare_verdict_on_flat_merit(tmp_path):
    out = str(tmp_path)
    assert run(["compare", "--scenario", S1_FLAT, "--anchor", "0.5,1.5", "--x-take", "0.1",
                "--out", out, *SMALL]) == 0
    report = json.loads(_read(out, "compare.json"))
    assert report["applicable"] is True and report["verdict"] is True


def test_export_writes_the_curve_table(tmp_path):
    out = str(tmp_path)
    assert run(["export", "--scenario", S1, "--format", "both", "--out", out, *SMALL]) == 0
    lines = _read(out, "curve.csv").splitlines()
    assert lines[0] == "lam,kappa_star,dkappa_star,d2kappa_star"
    assert len(lines) > 100


def test_score_emits_local_field(tmp_path):
    out = str(tmp_path)
    assert run(["score", "--scenario", S1, "--mechanism", "threshold", "--format", "both",
                "--out", out, *SMALL]) == 0
    report = json.loads(_read(out, "score.json"))
    assert report["payment_lower_bound"] == pytest.approx(0.7853981633974483)
    lines = _read(out, "score_locals.csv").splitlines()
    assert lines[0] == "alpha,beta,local_violation"
    assert len(lines) == 1 + 7 * 7


def test_unparseable_scenario_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[domain]\nalpha_lo 0.0\n")
    code = run(["validate", "--scenario", str(bad), "--out", str(tmp_path)])
    assert code == 2
    assert "equiscreen:" in capsys.readouterr().err


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "equiscreen.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0


def test_verify_each_mechanism_kind(tmp_path):
    out = str(tmp_path)
    s1p = os.path.join(SCENARIOS, "s1_product.scn")
    assert run(["verify", "--scenario", s1p, "--mechanism", "knife_edge", "--q-star", "3.0",
                "--out", out, *SMALL]) == 0
    assert run(["verify", "--scenario", S1, "--mechanism", "conditional",
                "--instrument", "ordeals", "--out", out, *SMALL]) == 0
    assert run(["verify", "--scenario", S1, "--mechanism", "mixture", "--n-steps", "25",
                "--out", out, *SMALL]) == 0


def test_verify_inequitable_mechanism_reports_instead_of_crashing(tmp_path):
    # the one-offer ordeal is implementable but not equitable: verify must
    # exit 1 with the equity failure reported and monotonicity marked skipped
    out = str(tmp_path)
    assert run(["verify", "--scenario", S1, "--mechanism", "one_step",
                "--anchor", "0.5,1.5", "--x-take", "0.1", "--out", out, *SMALL]) == 1
    report = json.loads(_read(out, "verify.json"))
    assert report["pass"] is False
    by_name = {c["check"]: c for c in report["checks"]}
    assert by_name["ic"]["pass"] is True
    assert by_name["equity"]["pass"] is False
    assert by_name["merit_monotone"].get("skipped") is True


def test_probe_contour_layout_via_cli(tmp_path):
    out = str(tmp_path)
    assert run(["probe", "--scenario", S1, "--instrument", "ordeals", "--layout", "contours",
                "--out", out]) == 0
    report = json.loads(_read(out, "probe.json"))
    assert report["layout"] == "contours"
    assert report["value"] <= 1e-6


def test_score_one_step_via_cli(tmp_path):
    out = str(tmp_path)
    assert run(["score", "--scenario", S1, "--mechanism", "one_step", "--anchor", "0.5,1.5",
                "--x-take", "0.1", "--format", "both", "--out", out, *SMALL]) == 0
    report = json.loads(_read(out, "score.json"))
    assert report["method"] == "closed_form"
    assert 0.0 < report["value"] < report["payment_lower_bound"]
