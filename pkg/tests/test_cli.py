import json
import subprocess
import sys

import pytest

from atomrsp import cli, files
from atomrsp.files import ConfigError, RunConfig


def write_config(path, **data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


SMALL = {"sets": [{"set_id": 1, "alpha": 90, "phi": "0:90:30"}], "bootstrap_B": 100}


def test_curves_grid_and_values(tmp_path):
    assert cli.main(["curves", "--alpha", "90", "--phi", "0:330:30", "--out", str(tmp_path)]) == 0
    meta, rows = files.read_csv(tmp_path / "curves.csv")
    assert len(rows) == 12 * 4 * 3
    assert list(rows[0]) == list(files.CURVE_COLUMNS)
    assert meta["schema_version"] == files.SCHEMA_VERSION
    assert meta["convention"]["sign"] == 1
    phi1 = meta["outcome_map"]
    label = next(k for k, v in phi1.items() if v == "Phi1")
    got = {(r["phi_deg"], r["outcome"], r["basis"]): float(r["probability"]) for r in rows}
    assert got[("0", label, "z")] == pytest.approx(0.5)
    assert got[("0", label, "x")] == pytest.approx(0.5)
    assert got[("90", label, "y")] == pytest.approx(0.5)
    assert got[("0", label, "y")] == pytest.approx(1.0)


@pytest.mark.parametrize("args", [["--phi", "0:x:30"], ["--phi", "30:0:10"], ["--alpha", "0:90:30"]])
def test_curves_bad_angles_exit_usage(tmp_path, args, capsys):
    assert cli.main(["curves", *args, "--out", str(tmp_path)]) == cli.EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_sweep_outputs_and_byte_identical_rerun(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", seed=5, **SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(b), "--jobs", "3"]) == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    meta, rows = files.read_csv(a / "sweep.csv")
    assert list(rows[0]) == list(files.SWEEP_COLUMNS)
    assert len(rows) == 4 * 4 * 3
    assert meta["master_seed"] == 5
    assert meta["noise"] == files.NoiseParams().to_dict()
    summary = json.loads((a / "summary.json").read_text())
    assert summary["schema_version"] == files.SCHEMA_VERSION
    assert summary["sets"][0]["points"] == 4
    cells = {(r["phi_deg"], r["detector_id"]): float(r["fidelity"]) for r in rows}
    mean = sum(cells.values()) / len(cells)
    assert summary["sets"][0]["mean_fidelity"] == pytest.approx(mean, abs=1e-5)


def test_sweep_seed_flag_changes_output(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", **SMALL)
    cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "1"])
    cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "sweep.csv").read_bytes() != (tmp_path / "b" / "sweep.csv").read_bytes()


def test_sweep_ideal_noise(tmp_path):
    cfg = write_config(
        tmp_path / "cfg.json", events=10000,
        noise={"entanglement_fidelity": 1.0, "bsa_visibility": 1.0}, **SMALL,
    )
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["sets"][0]["mean_fidelity"] > 0.99


def test_default_config_is_table1_shaped():
    cfg = RunConfig()
    assert [s.set_id for s in cfg.sets] == [1, 2, 3, 4]
    assert [len(s.points) for s in cfg.sets] == [12] * 4


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"noise": {"visibility": 0.5}},
    {"sets": [{"alpha": 90}]},
    {"sets": [{"alpha": 90, "phi": 0, "extra": 1}]},
    {"schema_version": "2.0"},
    {"seed": "abc"},
    {"calibration": {"targets": [0.8]}},
])
def test_config_rejects_invalid(data):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


def test_unreadable_config_exit_status(tmp_path, capsys):
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["sweep", "--config", str(bad), "--out", str(tmp_path)]) == 1


def test_calibrate_ideal_targets(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", calibration={"targets": [1.0, 1.0], "visibility": 1.0})
    assert cli.main(["calibrate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "calibration.json").read_text())
    assert rep["noise"]["entanglement_fidelity"] == pytest.approx(1.0)
    assert rep["noise"]["readout_depolarization"] == 0.0
    assert rep["model_adequate"] is True


def test_calibrate_forced_depolarization(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", calibration={
        "targets": [0.9133333333, 0.87], "visibility": 1.0, "fixed_depolarization": 0.0})
    assert cli.main(["calibrate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "calibration.json").read_text())
    assert rep["noise"]["entanglement_fidelity"] == pytest.approx(0.87, abs=1e-6)


def test_calibrate_default_targets_report(tmp_path, capsys):
    assert cli.main(["calibrate", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "calibration.json").read_text())
    assert rep["model_adequate"] is False
    assert set(rep["residuals"]) == {"set1_mean", "verification"}
    assert "residual" in capsys.readouterr().out


def test_calibrate_failure_exit_status(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", calibration={"fixed_depolarization": 2.0})
    assert cli.main(["calibrate", "--config", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_CALIBRATION
    assert json.loads((tmp_path / "calibration.json").read_text())["status"] == "failed"


def test_table1_command(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", bootstrap_B=100, events=50)
    assert cli.main(["table1", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "table1.json").read_text())
    assert rep["distinct_states"] == 42
    assert [s["set_id"] for s in rep["sets"]] == [1, 2, 3, 4]
    assert rep["reference"]["1"]["mean_fidelity"] == 0.826


def test_tomo_roundtrip_from_sweep(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", seed=3, **SMALL)
    cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path)])
    assert cli.main(["tomo", str(tmp_path / "sweep.csv"), "--out", str(tmp_path), "--bootstrap", "100"]) == 0
    _, sweep = files.read_csv(tmp_path / "sweep.csv")
    _, tomo = files.read_csv(tmp_path / "tomo.csv")
    assert len(tomo) == 16
    ref = {(r["phi_deg"], r["detector_id"]): float(r["fidelity"]) for r in sweep}
    for row in tomo:
        assert float(row["fidelity"]) == pytest.approx(ref[(row["phi_deg"], row["detector_id"])], abs=1e-5)


def test_tomo_plain_counts(tmp_path):
    src = tmp_path / "counts.csv"
    src.write_text("basis,n_up,n_total\nx,150,300\ny,300,300\nz,150,300\n")
    assert cli.main(["tomo", str(src), "--alpha", "90", "--phi", "0", "--out", str(tmp_path)]) == 0
    _, rows = files.read_csv(tmp_path / "tomo.csv")
    assert float(rows[0]["bloch_y"]) == pytest.approx(1.0)
    assert float(rows[0]["fidelity"]) == pytest.approx(1.0)


def test_tomo_incomplete_group(tmp_path):
    src = tmp_path / "counts.csv"
    src.write_text("basis,n_up,n_total\nx,150,300\nz,150,300\n")
    assert cli.main(["tomo", str(src), "--out", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "atomrsp", "curves", "--phi", "0:60:30", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "curves.csv").exists()
