import json
import subprocess
import sys

import numpy as np
import pytest

from mrafd.cli import main
from mrafd.heuristic import SuppressionProfile, read_pattern_set
from mrafd.metrics import artifact_hash, read_csv
from mrafd.scenario import load_config

SMALL = {"profiling": {"n_environments": 2, "duration_s": 0.05}, "n_held_out": 3,
         "retrain": {"n_environments": 1, "sim_duration_s": 0.5}, "ofdm": {"n_frames": 5}}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "small.json").write_text(json.dumps(SMALL))
    assert run(d, "build-bank") == 0
    return d


def run(workdir, *argv):
    return main([*argv, "--config", str(workdir / "small.json"), "--out", str(workdir / "out")])


def test_build_bank_is_byte_identical(workdir, tmp_path):
    assert main(["build-bank", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "bank.npz").read_bytes() == (workdir / "out" / "bank.npz").read_bytes()


def test_select_set_matches_threshold_scan(workdir):
    assert run(workdir, "profile") == 0
    out = workdir / "out"
    profile = SuppressionProfile.from_csv(out / "profile.csv")
    assert run(workdir, "select-set", "--threshold", "58") == 0
    members = read_pattern_set(out / "pattern_set_58.txt")
    assert members == tuple(int(i) for i in np.flatnonzero(profile.max_suppression_db > 58))
    assert run(workdir, "select-set", "--threshold", "20") == 0
    oracle = [i for i, v in enumerate(profile.max_suppression_db) if v > 20]
    assert list(read_pattern_set(out / "pattern_set_20.txt")) == oracle


def test_size_curve_and_hashes(workdir):
    assert run(workdir, "profile") == 0
    assert run(workdir, "size-curve", "--thresholds", "10,20,30") == 0
    h, header, rows = read_csv(workdir / "out" / "fig8_curve.csv")
    assert header == ["threshold_db", "count"] and len(rows) == 3
    assert h == load_config(workdir / "small.json").hash()
    counts = [int(r[1]) for r in rows]
    assert counts == sorted(counts, reverse=True)


def test_train_and_sweep(workdir):
    assert run(workdir, "train", "--pattern-set", "full") == 0
    assert json.loads((workdir / "out" / "training.json").read_text())["n_patterns"] == 4096
    assert run(workdir, "retrain-sweep", "--periods", "0.05 0.2") == 0
    _, _, rows = read_csv(workdir / "out" / "fig10_sweep.csv")
    assert [float(r[0]) for r in rows] == [0.05, 0.2]


def test_missing_bank(tmp_path, capsys):
    assert main(["profile", "--out", str(tmp_path)]) == 3
    assert "run `mrafd build-bank` first" in capsys.readouterr().err


def test_malformed_config_names_field(tmp_path, capsys):
    (tmp_path / "bad.json").write_text(json.dumps({"environment": {"n_reflectors": "many"}}))
    assert main(["build-bank", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == 2
    assert "environment.n_reflectors" in capsys.readouterr().err
    (tmp_path / "bad2.json").write_text(json.dumps({"sesion": {}}))
    assert main(["build-bank", "--config", str(tmp_path / "bad2.json"), "--out", str(tmp_path)]) == 2
    assert "sesion" in capsys.readouterr().err


def test_report_refuses_mixed_hashes(workdir, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["build-bank", "--out", str(out)]) == 0
    assert main(["profile", "--config", str(workdir / "small.json"), "--out", str(out)]) == 0
    other = dict(SMALL, master_seed=99)
    (tmp_path / "other.json").write_text(json.dumps(other))
    # the profile was written under a different config hash
    assert main(["report", "--config", str(tmp_path / "other.json"), "--out", str(out)]) == 4
    assert "refusing" in capsys.readouterr().err


def test_report_writes_manifest(workdir):
    assert run(workdir, "profile") == 0
    assert run(workdir, "report") == 0
    out = workdir / "out"
    manifest = json.loads((out / "manifest.json").read_text())
    names = {e["file"] for e in manifest["artifacts"]}
    assert {"fig5_cdf.csv", "soi_loss.csv", "generalization.csv", "summary.json", "bank.npz"} <= names
    h = load_config(workdir / "small.json").hash()
    assert artifact_hash(out / "summary.json") == h == manifest["config_hash"]


def test_session_default_scenario_gain(tmp_path):
    out = tmp_path / "out"
    assert main(["build-bank", "--out", str(out)]) == 0
    assert main(["session", "--tx-power", "5", "--out", str(out)]) == 0
    rep = json.loads((out / "session.json").read_text())
    assert 80 <= rep["gain_percent"] <= 95
    assert rep["tx_power_dbm"] == 5


def test_session_sweep(workdir):
    assert run(workdir, "session", "--sweep") == 0
    _, header, rows = read_csv(workdir / "out" / "fig12_rates.csv")
    assert header == ["tx_power_dbm", "r_fd", "r_hd", "gain_percent"]
    assert [float(r[0]) for r in rows] == [-10, -5, 0, 5, 10]


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "mrafd.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "build-bank" in res.stdout
