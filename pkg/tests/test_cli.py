"""End-to-end CLI runs: artifacts, manifests, determinism, exit codes."""

import json
import subprocess
import sys

FRINGE_CFG = """
run.seed = 99
scan.n_points = 8
scan.shots_per_point = 2000
scan.mode_overlap = 0.95
"""

FEEDFORWARD_CFG = """
run.seed = 5
run.duration_ns = 20000
source.p_pair = 0.05
"""

LOCK_CFG = """
lock.duration_s = 0.005
"""


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "tbsim.cli", *args],
                          capture_output=True, text=True)


def write(path, text):
    path.write_text(text)
    return str(path)


def test_fringe_scan_produces_artifacts_and_manifest(tmp_path):
    cfg = write(tmp_path / "scan.cfg", FRINGE_CFG)
    out = tmp_path / "out"
    proc = run_cli("fringe-scan", "--config", cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    assert (out / "fringe.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "fringe-scan"
    assert manifest["seed"] == 99
    assert manifest["config"]["scan.n_points"] == 8
    assert "visibility" in manifest["summary"]
    assert abs(manifest["summary"]["visibility"] - 0.95) < 0.05
    assert "visibility" in proc.stdout


def test_seed_flag_overrides_config(tmp_path):
    cfg = write(tmp_path / "scan.cfg", FRINGE_CFG)
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert run_cli("fringe-scan", "--config", cfg, "--out", str(a),
                   "--seed", "123").returncode == 0
    assert run_cli("fringe-scan", "--config", cfg, "--out", str(b)).returncode == 0
    ma = json.loads((a / "manifest.json").read_text())
    assert ma["seed"] == 123
    assert (a / "fringe.csv").read_bytes() != (b / "fringe.csv").read_bytes()


def test_reruns_are_byte_identical(tmp_path):
    cfg = write(tmp_path / "scan.cfg", FRINGE_CFG)
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert run_cli("fringe-scan", "--config", cfg, "--out", str(out)).returncode == 0
        outs.append(out)
    assert (outs[0] / "fringe.csv").read_bytes() == (outs[1] / "fringe.csv").read_bytes()
    assert (outs[0] / "manifest.json").read_bytes() == (outs[1] / "manifest.json").read_bytes()


def test_worker_count_does_not_change_results(tmp_path):
    cfg = write(tmp_path / "scan.cfg", FRINGE_CFG)
    serial = tmp_path / "serial"
    pooled = tmp_path / "pooled"
    assert run_cli("fringe-scan", "--config", cfg, "--out", str(serial)).returncode == 0
    assert run_cli("fringe-scan", "--config", cfg, "--out", str(pooled),
                   "--workers", "4").returncode == 0
    assert (serial / "fringe.csv").read_bytes() == (pooled / "fringe.csv").read_bytes()


def test_replay_reproduces_artifacts(tmp_path):
    cfg = write(tmp_path / "ff.cfg", FEEDFORWARD_CFG)
    first = tmp_path / "first"
    again = tmp_path / "again"
    assert run_cli("feedforward-run", "--config", cfg, "--out", str(first)).returncode == 0
    proc = run_cli("replay", "--manifest", str(first / "manifest.json"),
                   "--out", str(again))
    assert proc.returncode == 0, proc.stderr
    assert (first / "timeline.csv").read_bytes() == (again / "timeline.csv").read_bytes()
    assert (first / "manifest.json").read_bytes() == (again / "manifest.json").read_bytes()


def test_switch_trace_runs_without_seed(tmp_path):
    out = tmp_path / "sw"
    proc = run_cli("switch-trace", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] is None
    assert abs(manifest["summary"]["rise_time_10_90_ns"] - 5.6) < 0.1
    header = (out / "switch_trace.csv").read_text().splitlines()[0]
    assert header == "time_ns,phase_rad"


def test_hom_scan_summary(tmp_path):
    out = tmp_path / "hom"
    cfg = write(tmp_path / "hom.cfg", "scan.shots_per_point = 20000\n")
    proc = run_cli("hom-scan", "--config", cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"]["classification"] == "dip"


def test_lock_sim_artifact(tmp_path):
    out = tmp_path / "lk"
    cfg = write(tmp_path / "lock.cfg", LOCK_CFG)
    proc = run_cli("lock-sim", "--config", cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"]["rms_residual_rad"] < 0.05
    header = (out / "lock_trace.csv").read_text().splitlines()[0]
    assert header == "time_s,phi_true_rad,monitor_intensity,actuator_rad"


def test_unknown_config_key_exits_2(tmp_path):
    cfg = write(tmp_path / "bad.cfg", "scan.n_pints = 8\n")
    proc = run_cli("fringe-scan", "--config", cfg, "--out", str(tmp_path / "o"))
    assert proc.returncode == 2
    assert "scan.n_pints" in proc.stderr


def test_missing_config_file_exits_2(tmp_path):
    proc = run_cli("fringe-scan", "--config", str(tmp_path / "nope.cfg"),
                   "--out", str(tmp_path / "o"))
    assert proc.returncode == 2


def test_missing_out_exits_2():
    proc = run_cli("fringe-scan")
    assert proc.returncode == 2


def test_runtime_failure_exits_3(tmp_path):
    # a fully blocked channel records no coincidences, so no ratio exists
    cfg = write(tmp_path / "blocked.cfg",
                "channel.survival = 0\nscan.shots_per_point = 100\n")
    proc = run_cli("fringe-scan", "--config", cfg, "--out", str(tmp_path / "o"))
    assert proc.returncode == 3
    assert "runtime failure" in proc.stderr


def test_print_defaults(tmp_path):
    proc = run_cli("hom-scan", "--print-defaults")
    assert proc.returncode == 0
    assert "scan.max_overlap = 0.9418067742376883" in proc.stdout


def test_version_flag():
    proc = run_cli("--version")
    assert proc.returncode == 0
    assert "tbsim" in proc.stdout


def test_config_warning_is_echoed_and_recorded(tmp_path):
    cfg = write(tmp_path / "hot.cfg", FEEDFORWARD_CFG + "source.p_pair = 0.2\n")
    # duplicate key: the parser rejects it outright
    proc = run_cli("feedforward-run", "--config", cfg, "--out", str(tmp_path / "o"))
    assert proc.returncode == 2
    cfg2 = write(tmp_path / "hot2.cfg",
                 "run.duration_ns = 20000\nsource.p_pair = 0.2\n")
    out = tmp_path / "o2"
    proc = run_cli("feedforward-run", "--config", cfg2, "--out", str(out))
    assert proc.returncode == 0
    assert "ceiling" in proc.stderr
    manifest = json.loads((out / "manifest.json").read_text())
    assert any("ceiling" in w for w in manifest["warnings"])
