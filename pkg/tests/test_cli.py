import csv
import json
import subprocess
import sys

import pytest

from doubledot.cli import EXIT_CONFIG, EXIT_FAILURES, EXIT_OK, main

from conftest import E_C, V_C

FIG1 = {"left_levels": [1.0], "right_levels": [1.0], "wire_a": 2.0, "wire_b": -0.2,
        "length": 3.0, "u": 0.25, "v": 0.5}


def _write(tmp_path, data, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_sweep_command(tmp_path, capsys):
    cfg = _write(tmp_path, {"spec": FIG1, "axis1": {"param": "E", "min": -1, "max": 1, "points": 5},
                            "observables": ["transmission", "eigenvalues"]})
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert (out / "transmission.csv").exists()
    assert (out / "trajectories.json").exists()
    assert "manifest.json" in capsys.readouterr().out


def test_bad_config_exits_2(tmp_path):
    cfg = _write(tmp_path, {"spec": FIG1, "axis1": {"param": "v", "min": 0, "max": 1, "points": 3}})
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG
    assert main(["sweep", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad_spec = dict(FIG1, u=-1.0)
    cfg = _write(tmp_path, {"spec": bad_spec, "energy": 0.1,
                            "axis1": {"param": "v", "min": 0, "max": 1, "points": 3}})
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG


def test_failed_cells_exit_3(tmp_path):
    cfg = _write(tmp_path, {"spec": FIG1, "energy": 0.3, "output": {"dir": str(tmp_path / "o")},
                            "axis1": {"param": "v", "min": -1, "max": 1, "points": 5}})
    assert main(["sweep", "--config", cfg]) == EXIT_FAILURES
    assert main(["sweep", "--config", cfg, "--max-failures", "0.5"]) == EXIT_OK


def test_figure_command(tmp_path):
    assert main(["figure", "fig3", "--out", str(tmp_path), "--points", "5"]) == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["figure"] == "fig3"
    assert main(["figure", "fig42", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_find_ep_analytic_and_numeric(tmp_path, capsys):
    cfg = _write(tmp_path, {"preset": "fig1", "analytic": "critical_coupling",
                            "params": {"v": [0.5, 1.3], "E": [0.2, 1.8]},
                            "seed": {"v": 0.85, "E": 0.95}, "pair": [0, 2]})
    out = tmp_path / "ep.json"
    assert main(["find-ep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    records = json.loads(out.read_text())
    assert [r["kind"] for r in records] == ["analytic", "numeric"]
    for r in records:
        assert r["params"]["v"] == pytest.approx(V_C, abs=1e-8)
        assert r["E_c"] == pytest.approx(E_C, abs=1e-8)
    capsys.readouterr()


def test_find_ep_rejects_bad_input(tmp_path):
    cfg = _write(tmp_path, {"preset": "fig1"})
    assert main(["find-ep", "--config", cfg]) == EXIT_CONFIG
    cfg = _write(tmp_path, {"preset": "fig1", "analytic": "nope"})
    assert main(["find-ep", "--config", cfg]) == EXIT_CONFIG
    cfg = _write(tmp_path, {"preset": "fig1", "params": {"v": [0, 1], "E": [0, 1]}, "pair": [0, 9]})
    assert main(["find-ep", "--config", cfg]) == EXIT_CONFIG


def test_find_ep_without_solution_exits_3(tmp_path):
    # v^4 < 8 u^2: no length brings the pair together
    cfg = _write(tmp_path, {"spec": dict(FIG1, v=0.3), "analytic": "critical_lengths"})
    assert main(["find-ep", "--config", cfg]) == EXIT_FAILURES


def test_fixed_points_csv(tmp_path):
    cfg = _write(tmp_path, {"spec": dict(FIG1, v=0.5), "labels": [1], "n_scan": 200})
    out = tmp_path / "fp.csv"
    assert main(["fixed-points", "--config", cfg, "--out", str(out)]) == EXIT_OK
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["label"] == "1"
    assert float(rows[0]["position"]) == pytest.approx(1.0 / (1.0 - 0.125), abs=1e-8)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "doubledot", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "find-ep" in proc.stdout
