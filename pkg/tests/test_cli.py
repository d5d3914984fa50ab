import json
import subprocess
import sys

import numpy as np
import pytest

from fluxgates import cli, effective
from fluxgates.errors import NoOffPosition


def run(argv, capsys=None):
    try:
        return cli.main(argv)
    except SystemExit as exc:
        return exc.code


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def test_coupling_sweep_writes_csv_and_manifest(tmp_path):
    assert run(["coupling-sweep", "--out", str(tmp_path), "--points", "3"]) == 0
    data = read_csv(tmp_path / "coupling_sweep.csv")
    assert data.shape == (3,)
    assert data["phi_c_over_2pi"][0] == pytest.approx(0.05)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["coupling_sweep.csv"]["x"] == "phi_c_over_2pi"


def test_csv_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["coupling-sweep", "--out", str(d), "--points", "4"]) == 0
    assert (a / "coupling_sweep.csv").read_bytes() == (b / "coupling_sweep.csv").read_bytes()


def test_empty_grid_is_validation_error(tmp_path, capsys):
    assert run(["coupling-sweep", "--out", str(tmp_path), "--points", "0"]) == 1
    assert "grid" in capsys.readouterr().err
    assert run(["sensitivity-map", "--out", str(tmp_path), "--ejc"]) == 1
    assert run(["identity-scan", "--out", str(tmp_path), "--ratio-min", "3", "--ratio-max", "2"]) == 1


def test_bad_arguments_exit_1(tmp_path):
    assert run(["no-such-command"]) == 1
    assert run(["coupling-sweep", "--points", "many"]) == 1
    assert run(["coupling-sweep", "--out", str(tmp_path), "--workers", "0"]) == 1
    bad = tmp_path / "dev.json"
    bad.write_text("{}")
    assert run(["coupling-sweep", "--out", str(tmp_path), "--device", str(bad)]) == 1
    assert run(["gate-sim", "--out", str(tmp_path)]) == 1
    assert run(["bloch-traj", "--out", str(tmp_path), "--state", "up"]) == 1


def test_numerical_failure_exit_2(tmp_path, monkeypatch):
    def fail(*a, **k):
        raise NoOffPosition("no sign change")
    monkeypatch.setattr(effective, "find_off_position", fail)
    assert run(["off-position", "--out", str(tmp_path)]) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"points": 2, "coupling-sweep": {"phi_c_max": 0.3}}))
    assert run(["coupling-sweep", "--out", str(tmp_path), "--config", str(cfg)]) == 0
    data = read_csv(tmp_path / "coupling_sweep.csv")
    assert list(data["phi_c_over_2pi"]) == pytest.approx([0.05, 0.3])
    # explicit flags win over the file
    assert run(["coupling-sweep", "--out", str(tmp_path), "--config", str(cfg), "--points", "3"]) == 0
    assert read_csv(tmp_path / "coupling_sweep.csv").shape == (3,)
    cfg.write_text(json.dumps({"pointz": 2}))
    assert run(["coupling-sweep", "--out", str(tmp_path), "--config", str(cfg)]) == 1


def test_workers_do_not_change_results(tmp_path, monkeypatch):
    args = ["identity-scan", "--ratio-points", "2", "--ratio-min", "3", "--ratio-max", "5",
            "--dphi-points", "2", "--dphi-max", "0.06"]
    assert run(args + ["--out", str(tmp_path / "w1"), "--workers", "1"]) == 0
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    assert run(args + ["--out", str(tmp_path / "w2")]) == 0
    a = read_csv(tmp_path / "w1" / "identity_scan.csv")
    b = read_csv(tmp_path / "w2" / "identity_scan.csv")
    for name in a.dtype.names:
        assert np.allclose(a[name], b[name], rtol=1e-12, atol=0)


def test_sensitivity_map_and_bloch(tmp_path):
    assert run(["sensitivity-map", "--out", str(tmp_path), "--ejc", "3.0", "--ecm", "14.3"]) == 0
    row = read_csv(tmp_path / "sensitivity_map.csv")
    assert 30 < float(row["dJdPhi_MHz_per_Phi0"]) < 300
    assert run(["bloch-traj", "--out", str(tmp_path), "--samples", "21"]) == 0
    traj = read_csv(tmp_path / "bloch_traj.csv")
    assert traj.shape == (21,)
    assert traj["x"][0] == pytest.approx(1.0)


def test_spectrum_command(tmp_path):
    assert run(["spectrum", "--out", str(tmp_path), "--points", "2", "--phi-c-min", "0.25",
                "--phi-c-max", "0.28", "--levels", "6"]) == 0
    exact = read_csv(tmp_path / "spectrum.csv")
    eff = read_csv(tmp_path / "spectrum_effective.csv")
    assert np.allclose(exact["E_10"], eff["E_2"], rtol=0.05)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fluxgates", "coupling-sweep", "--points", "0",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 1


@pytest.mark.slow
def test_gate_design_and_sim(tmp_path):
    assert run(["gate-design", "--out", str(tmp_path)]) == 0
    sched = json.loads((tmp_path / "gate_schedule.json").read_text())
    assert sched["total_time_ns"] == pytest.approx(113, abs=3)
    assert run(["gate-sim", "--out", str(tmp_path), "--schedule", str(tmp_path / "gate_schedule.json"),
                "--samples", "51"]) == 0
    report = json.loads((tmp_path / "gate_report.json").read_text())
    assert report["closed_fidelity"] == pytest.approx(0.9996, abs=5e-4)
    pops = read_csv(tmp_path / "populations_01.csv")
    assert pops.shape == (51,)
    # sqrt(iSWAP) leaves |01> half transferred
    assert pops["P_10"][-1] == pytest.approx(0.5, abs=0.02)
