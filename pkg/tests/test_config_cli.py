import csv
import json
import math

import numpy as np
import pytest
import yaml

from leakywire import cli
from leakywire.config import DEFAULTS, apply_override, build_curve, load_config, solver_numerics
from leakywire.errors import ConfigError, ConvergenceError
from leakywire.io import dumps, write_csv

CORNER = {"kind": "Corner", "phi": math.pi / 4}
FAST = ["numerics.L=40", "numerics.N=512", "numerics.refine=false"]


def _write(tmp_path, cfg, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


def _read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


# config ----------------------------------------------------------------------
def test_defaults_filled(tmp_path):
    cfg = load_config(_write(tmp_path, {"curve": {"kind": "Line"}, "alpha": 1.0}))
    assert cfg["numerics"] == DEFAULTS["numerics"]
    assert cfg["schema_version"] == 1


def test_overrides_parse_yaml_scalars():
    cfg = {}
    apply_override(cfg, "numerics.tol_kappa=1e-9")
    apply_override(cfg, "numerics.refine=false")
    apply_override(cfg, "sweep.kappa=[0.6, 1, 2]")
    assert cfg == {"numerics": {"tol_kappa": 1e-9, "refine": False}, "sweep": {"kappa": [0.6, 1, 2]}}
    with pytest.raises(ConfigError):
        apply_override(cfg, "novalue")


def test_exponent_floats_in_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("curve: {kind: Line}\nalpha: 1\nnumerics: {tol_energy: 1e-6}\n")
    assert load_config(p)["numerics"]["tol_energy"] == 1e-6


@pytest.mark.parametrize("over", [["alpha=0"], ["alpha=-1"], ["bogus=1"], ["numerics.N=3"],
                                  ["curve.kind=Spiral"], ["check.omega=1.5"]])
def test_invalid_config(over):
    with pytest.raises(ConfigError) as exc:
        load_config(None, ["curve.kind=Line", "alpha=1", *over])
    assert exc.value.exit_code == 1


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/run.yaml")


def test_build_curve_kinds(tmp_path):
    assert build_curve({"kind": "Line"}).kind == "Line"
    c = build_curve({"kind": "SmoothedCorner", "Theta": 1.0, "w": 0.5, "scale": 2.0})
    assert c.kind == "ScaledSmoothedCorner"
    k = build_curve({"kind": "CurvatureDefined", "curvature": "0.5*exp(-s**2)", "domain": [-5, 5]})
    assert abs(k.curvature(np.array([0.0]))[0] - 0.5) < 1e-12
    with pytest.raises(ConfigError):
        build_curve({"kind": "Corner"})
    with pytest.raises(ConfigError):
        build_curve({"kind": "CurvatureDefined", "curvature": "__import__('os')", "domain": [0, 1]})
    pts = tmp_path / "arc.csv"
    xi = np.linspace(0, 1, 50)
    pts.write_text("\n".join(f"{a},{a},{a * a}" for a in xi))
    t = build_curve({"kind": "Tabulated", "csv": "arc.csv"}, base_dir=tmp_path)
    assert t.kind == "Tabulated"


def test_solver_numerics_from_config():
    cfg = load_config(None, ["curve.kind=Line", "alpha=1", "numerics.N=256"])
    assert solver_numerics(cfg).N == 256


# io ----------------------------------------------------------------------------
def test_dumps_deterministic_floats():
    text = dumps({"a": 0.1, "b": [1, 2.5], "c": float("nan"), "d": np.float64(1 / 3), "e": True})
    assert json.loads(text) == {"a": 0.1, "b": [1, 2.5], "c": None, "d": 1 / 3, "e": True}
    assert "0.33333333333333331" in text


def test_write_csv_meta(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["x", "y"], [[1, 0.5], [2, True]], {"k": {"a": 1}})
    lines = p.read_text().splitlines()
    assert lines[0] == '# k: {"a":1}'
    assert lines[2:] == ["1,0.5", "2,1"]


# CLI -------------------------------------------------------------------------
def test_check_line(tmp_path, capsys):
    p = _write(tmp_path, {"curve": {"kind": "Line"}, "alpha": 1.0})
    assert cli.main(["check", str(p), "-o", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "assumption_report.json").read_text())
    assert rep["report"]["c_hat"] == 1.0 and rep["report"]["a2_satisfied_with_mu_above_half"]
    assert "c_hat=1" in capsys.readouterr().out


def test_check_corner(tmp_path):
    p = _write(tmp_path, {"curve": CORNER, "alpha": 1.0})
    assert cli.main(["check", str(p), "-o", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "assumption_report.json").read_text())
    assert abs(rep["report"]["c_hat"] - math.cos(math.pi / 4)) < 1e-3


def test_check_self_intersecting(tmp_path):
    t = np.linspace(0, 2 * math.pi, 400)
    (tmp_path / "fig8.csv").write_text("\n".join(f"{a},{math.sin(a)},{math.sin(a) * math.cos(a)}" for a in t))
    p = _write(tmp_path, {"curve": {"kind": "Tabulated", "csv": "fig8.csv"}, "alpha": 1.0,
                          "check": {"horizon": 10.0}})
    assert cli.main(["check", str(p), "-o", str(tmp_path / "o")]) == 2
    rep = json.loads((tmp_path / "o" / "assumption_report.json").read_text())
    assert rep["a1_passed"] is False


def test_spectrum_line(tmp_path):
    p = _write(tmp_path, {"curve": {"kind": "Line"}, "alpha": 1.0})
    assert cli.main(["spectrum", str(p), "-o", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "states.json").read_text())
    assert doc["states"] == [] and doc["threshold"] == -0.25


def test_spectrum_invalid_alpha(tmp_path, capsys):
    p = _write(tmp_path, {"curve": {"kind": "Line"}, "alpha": 0.0})
    assert cli.main(["spectrum", str(p)]) == 1
    assert "ConfigError" in capsys.readouterr().err


def test_spectrum_corner_with_extras(tmp_path):
    p = _write(tmp_path, {"curve": CORNER, "alpha": 1.0,
                          "eigenfunction": {"enabled": True, "x": [-3, 3, 7], "y": [-3, 3, 7]},
                          "debug": {"dump_matrices": True}})
    assert cli.main(["spectrum", str(p), "-o", str(tmp_path), *sum((["--set", s] for s in FAST), [])]) == 0
    doc = json.loads((tmp_path / "states.json").read_text())
    assert len(doc["states"]) >= 1 and doc["states"][0]["energy"] < -0.25
    assert doc["config"]["numerics"]["N"] == 512
    header, rows = _read_csv(tmp_path / "eigenfunction_1.csv")
    assert header == ["x", "y", "psi"] and len(rows) == 49
    assert np.load(tmp_path / "bs_matrix_1.npy").shape == (512, 512)


def test_sweep(tmp_path):
    p = _write(tmp_path, {"curve": CORNER, "alpha": 1.0, "sweep": {"kappa": [0.6, 1.0, 2.0], "N": 256, "m": 2}})
    assert cli.main(["sweep", str(p), "-o", str(tmp_path)]) == 0
    header, rows = _read_csv(tmp_path / "sweep.csv")
    assert header == ["kappa", "lambda_1", "lambda_2", "alpha_over_2kappa"]
    vals = np.array(rows, dtype=float)
    assert np.all(vals[:, 1] > vals[:, 3]) and np.all(np.diff(vals[:, 1]) < 0)


def test_trial(tmp_path):
    p = _write(tmp_path, {"curve": CORNER, "alpha": 1.0, "trial": {"N": 1024}})
    assert cli.main(["trial", str(p), "-o", str(tmp_path)]) == 0
    header, rows = _read_csv(tmp_path / "trial.csv")
    assert header[:3] == ["lambda", "form_gap", "positive"]
    assert len(rows) == 13 and any(r[2] == "1" for r in rows)


def test_validate_line_not_applicable(tmp_path):
    p = _write(tmp_path, {"curve": {"kind": "Line"}, "alpha": 1.0})
    assert cli.main(["validate", str(p), "-o", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "validation.json").read_text())
    assert doc["verdict"] == "N/A"


def test_validate_tight_budget_fails(tmp_path):
    cfg = {"curve": {"kind": "SmoothedCorner", "Theta": math.pi / 2, "w": 1.0}, "alpha": 1.0,
           "numerics": {"L": 40.0, "N": 512, "refine": False},
           "validate": {"epsilon_list": [0.4], "box": [-8.0, 8.0, -4.0, 10.0], "budget": 1e-6, "dump_fields": True}}
    assert cli.main(["validate", str(_write(tmp_path, cfg)), "-o", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "validation.json").read_text())
    assert doc["verdict"] == "FAIL" and doc["rel_error"] > 1e-6
    header, rows = _read_csv(tmp_path / "ditch_convergence.csv")
    assert len(rows) == 1 and header[0] == "epsilon"
    header, rows = _read_csv(tmp_path / "ditch_field_0.csv")
    psi = np.array(rows, dtype=float)
    assert header == ["x", "y", "psi"] and psi.shape == (159 * 139, 3)
    assert abs((psi[:, 2] ** 2).sum() * 0.1**2 - 1) < 1e-10 and psi[:, 2].sum() > 0


def test_validate_profile_mismatch(tmp_path):
    cfg = {"curve": CORNER, "alpha": 2.0, "numerics": {"L": 20.0, "N": 256, "refine": False}}
    assert cli.main(["validate", str(_write(tmp_path, cfg)), "-o", str(tmp_path)]) == 1


def test_spectrum_unconverged_exits_3(tmp_path):
    cfg = {"curve": CORNER, "alpha": 1.0, "numerics": {"L": 40.0, "N": 512, "N_max": 512, "tol_energy": 1e-12}}
    assert cli.main(["spectrum", str(_write(tmp_path, cfg)), "-o", str(tmp_path)]) == 3
    doc = json.loads((tmp_path / "states.json").read_text())
    assert doc["states"][0]["converged"] is False


def test_convergence_error_exit_code(tmp_path, monkeypatch):
    def boom(cfg, base_dir=None):
        raise ConvergenceError("no luck")

    monkeypatch.setitem(cli.COMMANDS, "spectrum", boom)
    p = _write(tmp_path, {"curve": {"kind": "Line"}, "alpha": 1.0})
    assert cli.main(["spectrum", str(p)]) == 3


def test_spectrum_byte_identical(tmp_path):
    p = _write(tmp_path, {"curve": CORNER, "alpha": 1.0, "numerics": {"L": 20.0, "N": 256, "refine": False}})
    out = tmp_path / "out"
    cli.main(["spectrum", str(p), "-o", str(out)])
    first = (out / "states.json").read_bytes()
    cli.main(["spectrum", str(p), "-o", str(out)])
    assert (out / "states.json").read_bytes() == first
