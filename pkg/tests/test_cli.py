import json

import numpy as np
import pytest

from lolattice.cli import main
from lolattice.snapshots import load_snapshot


def run(args):
    return main([str(a) for a in args])


def test_no_command_prints_usage(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_command_exits_one(capsys):
    assert main(["harvest"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err.lower()


def test_unknown_flag_exits_one(capsys):
    assert main(["steady", "--wibble", "3"]) == 1


def test_bad_family_exits_one(capsys):
    assert run(["steady", "--family", "spiral"]) == 1
    assert "spiral" in capsys.readouterr().err


def test_steady_writes_snapshot_and_manifest(tmp_path, capsys):
    out = tmp_path / "triv.csv"
    rc = run(["steady", "--family", "trivial", "--K", 4, "--alpha", "0.1",
              "--out", out])
    assert rc == 0
    msg = capsys.readouterr().out
    assert "residual" in msg
    st = load_snapshot(out)
    assert np.all(st.r_bar == 1.0)
    mpath = tmp_path / "triv.csv.manifest.json"
    data = json.loads(mpath.read_text())
    assert data["command"] == "steady"
    assert data["config"]["K"] == 4


def test_steady_rotating_wave_snapshot(tmp_path):
    out = tmp_path / "rw.csv"
    assert run(["steady", "--family", "rotating_wave", "--K", 5,
                "--alpha", "0.1", "--out", out]) == 0
    st = load_snapshot(out)
    assert st.family == "rotating_wave"
    assert st.residual_inf <= 1e-9


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "trivial", "K": 3, "alpha": 0.2}))
    out = tmp_path / "s.csv"
    assert run(["steady", "--config", cfg, "--K", 4, "--out", out]) == 0
    st = load_snapshot(out)
    assert st.grid.side == 8  # flag K=4 beats file K=3
    assert st.alpha == 0.2


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"familly": "trivial"}))
    assert run(["steady", "--config", cfg]) == 1
    assert "familly" in capsys.readouterr().err


def test_simulate_keeps_steady_state_fixed(tmp_path):
    snap = tmp_path / "triv.csv"
    run(["steady", "--family", "trivial", "--K", 3, "--alpha", "0.1",
         "--out", snap])
    out = tmp_path / "end.csv"
    rc = run(["simulate", "--state", snap, "--t-max", "2.0", "--out", out])
    assert rc == 0
    end = load_snapshot(out)
    assert np.max(np.abs(end.r_bar - 1.0)) <= 1e-9


def test_semigroup_writes_norm_table(tmp_path):
    out = tmp_path / "norms.csv"
    rc = run(["semigroup", "--kind", "plain", "--K", 8, "--t-max", "10",
              "--n-samples", 25, "--p", "1,2,inf", "--out", out])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,tau,p,lp,qp"
    assert len(lines) == 1 + 25 * 3


def test_semigroup_empty_fit_window_exits_two(capsys, tmp_path):
    rc = run(["semigroup", "--K", 4, "--t-max", "10", "--n-samples", 8,
              "--window", "0.001,0.002"])
    assert rc == 2
    assert "window" in capsys.readouterr().err


def test_scan_csv_layout(tmp_path):
    out = tmp_path / "scan.csv"
    rc = run(["scan-hyp4", "--family", "trivial", "--alpha", "0.1",
              "--p", "1,5", "--N", "4,8", "--out", out])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha,p,N,moment,double_sum,trend"
    assert len(lines) == 1 + 2 * 2
    assert all(ln.endswith("saturating") for ln in lines[1:])


def test_attract_reports_rate(tmp_path, capsys):
    out = tmp_path / "attract.csv"
    rc = run(["attract", "--family", "trivial", "--alpha", "0.05",
              "--delta", "0.01", "--K", 6, "--out", out])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "beta" in printed
    assert "2.0" in printed
    assert out.exists()


def test_phase_decay_deterministic_reruns(tmp_path):
    args = ["phase-decay", "--family", "trivial", "--alpha", "0.1",
            "--eps", "0.1", "--K", 8, "--tau-max", "6", "--p", "1,2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", a]) == 0
    assert run(args + ["--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()
    ma = (tmp_path / "a.csv.manifest.json").read_text()
    mb = (tmp_path / "b.csv.manifest.json").read_text()
    # manifests agree except for the output name itself
    assert ma.replace("a.csv", "x.csv") == mb.replace("b.csv", "x.csv")


def test_check_rotation_from_snapshot(tmp_path, capsys):
    snap = tmp_path / "rw.csv"
    run(["steady", "--family", "rotating_wave", "--K", 5, "--alpha", "0.1",
         "--out", snap])
    report = tmp_path / "rot.json"
    rc = run(["check-rotation", "--state", snap, "--out", report])
    assert rc == 0
    data = json.loads(report.read_text())
    assert data["spatial_max"] <= 1e-7
    assert data["temporal_max"] <= 1e-7
    assert "period" in data


def test_no_manifest_without_out(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(["steady", "--family", "trivial", "--K", 3]) == 0
    assert list(tmp_path.iterdir()) == []
