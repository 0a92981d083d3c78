import csv
import json
import subprocess
import sys

import pytest

from opengap.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main
from opengap.runner import (
    KINDS,
    ExperimentConfig,
    ValidationError,
    build_system,
    list_experiments,
    load_system_config,
    run,
    validate,
)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_catalog_covers_every_kind():
    kinds = {e.kind for e in list_experiments()}
    assert kinds == set(KINDS)
    for kind in KINDS:
        assert validate(ExperimentConfig.default(kind)) == []


def test_config_text_roundtrip_and_hash():
    text = "[experiment]\nkind = fup\nseed = 7\n[parameters]\ndepths = 3,4,5,6\n"
    cfg = ExperimentConfig.from_text(text)
    again = ExperimentConfig.from_text(cfg.to_text())
    assert again.to_text() == cfg.to_text()
    assert cfg.hash() == again.hash()
    spaced = ExperimentConfig.from_text(text.replace("3,4,5,6", "3, 4, 5,  6"))
    assert spaced.hash() == cfg.hash()
    assert cfg.with_defaults().parameters["base"] == "3"


def test_config_errors_name_keys():
    with pytest.raises(ValidationError) as exc:
        ExperimentConfig.from_text("[experiment]\nseed = x\nkind = fup\n")
    assert "experiment.seed" in exc.value.problems
    with pytest.raises(ValidationError):
        ExperimentConfig.from_text("[parameters]\nn = 3\n")
    with pytest.raises(ValidationError):
        ExperimentConfig.from_text("[experiment]\nkind = fup\n", kind="pressure")
    bad = ExperimentConfig("pressure", {"kind": "baker", "kept": "0, 9"}, {"n_max": "1", "s_values": "a, 1"})
    with pytest.raises(ValidationError) as exc:
        validate(bad)
    assert {"system", "parameters.n_max", "parameters.s_values"} <= set(exc.value.problems)


def test_build_system_variants(tmp_path):
    assert build_system({"kind": "linear"}).kind == "linear"
    assert build_system({"kind": "disks", "disks": "2"}).n_letters == 2
    assert build_system({"kind": "baker", "kick": "0.05"}).kick == 0.05
    with pytest.raises(ValidationError):
        build_system({"kind": "torus"})
    path = tmp_path / "sys.ini"
    path.write_text("[system]\nkind = disks\nside = 6\n")
    assert load_system_config(path).n_letters == 3


def test_closed_baker_warns_and_reports_no_gap(tmp_path):
    cfg = ExperimentConfig("pressure", {"kind": "baker", "kept": "0, 1, 2"}, {"n_max": "4"})
    manifest = run(cfg, tmp_path)
    assert any("(Fractal) fails" in w for w in manifest.warnings)
    info = json.loads((tmp_path / "pressure.json").read_text())
    assert info["bowen_root"] is None and "no gap" in info["no_gap"]


def test_outputs_carry_hash_and_seed(tmp_path):
    cfg = ExperimentConfig.from_text("[experiment]\nkind = numerology\nseed = 5\n[parameters]\nbeta = 0.5, 1\n")
    manifest = run(cfg, tmp_path)
    rows = _read_csv(tmp_path / "numerology.csv")
    assert len(rows) == 2 and {r["config_hash"] for r in rows} == {manifest.config_hash}
    assert all(r["all_checks"] == "True" for r in rows)
    report = json.loads((tmp_path / "numerology.json").read_text())
    assert report["profiles"][0]["frak_b"] == pytest.approx(2 / 3)
    saved = json.loads((tmp_path / "manifest.json").read_text())
    assert saved["seed"] == 5 and saved["config_hash"] == manifest.config_hash
    assert ExperimentConfig.from_file(tmp_path / "config.ini").hash() == manifest.config_hash


def test_splitting_and_porosity_runs(tmp_path):
    run(ExperimentConfig("splitting", parameters={"n": "65"}), tmp_path / "s")
    conv = json.loads((tmp_path / "s" / "convergence.json").read_text())
    assert conv["converged"] and conv["slope_at_origin"] == pytest.approx(0.6180339887, abs=1e-9)
    run(ExperimentConfig.default("porosity"), tmp_path / "p")
    info = json.loads((tmp_path / "p" / "porosity.json").read_text())
    assert info["certified"] and info["recertified"] and info["delta_bound"] >= info["measured_delta"]


def test_same_seed_reproduces_classical_run(tmp_path):
    a = run(ExperimentConfig.default("classical", seed=1), tmp_path / "a")
    b = run(ExperimentConfig.default("classical", seed=1), tmp_path / "b")
    assert a.config_hash == b.config_hash
    ja = (tmp_path / "a" / "invariants.json").read_text()
    assert ja == (tmp_path / "b" / "invariants.json").read_text()


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["list"]) == EXIT_OK
    assert "numerology" in capsys.readouterr().out
    assert main(["numerology", "--out-dir", str(tmp_path / "n"), "--set", "beta=2"]) == EXIT_OK
    assert (tmp_path / "n" / "numerology.csv").exists()
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nkind = fup\n[parameters]\ndepths = 3, x\nalphabet = 0, q\n")
    assert main(["validate", "--config", str(bad)]) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "parameters.depths" in err and "parameters.alphabet" in err
    assert main(["fup", "--config", str(tmp_path / "missing.ini")]) == EXIT_VALIDATION
    assert main(["fup", "--set", "oops"]) == EXIT_VALIDATION


def test_cli_numerical_failure_exit_code(tmp_path):
    # a scale window this narrow leaves fewer than four box-counting scales
    cfg = tmp_path / "dim.ini"
    cfg.write_text("[experiment]\nkind = dimension\n[parameters]\ndepth = 2\neps_min = 0.3\neps_max = 0.5\n")
    assert main(["dimension", "--config", str(cfg), "--out-dir", str(tmp_path / "d")]) == EXIT_NUMERICAL


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "opengap", "list"], capture_output=True, text=True, check=True)
    assert "spectrum" in out.stdout
