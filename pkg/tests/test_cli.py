"""End-to-end command-line checks via ``python3 -m edgesched``."""

import json
import subprocess
import sys

import pytest

from edgesched.env import EVENT_LOG_HEADER, METRICS_HEADER
from edgesched.records import ScenarioConfig


def run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "edgesched", *argv],
        capture_output=True,
        text=True,
    )


def run_ok(*argv):
    proc = run_cli(*argv)
    assert proc.returncode == 0, proc.stderr
    return proc


def run_err(*argv):
    proc = run_cli(*argv)
    assert proc.returncode == 2, proc.stdout
    lines = proc.stderr.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


TINY = ("--nodes", "4", "--tasks", "8", "--seed", "3")


def test_gen_scenario_writes_files(tmp_path):
    out = tmp_path / "scen"
    run_ok("gen-scenario", *TINY, "--out", str(out))
    for name in ("scenario.cfg", "nodes.csv", "tasks.csv", "images.csv"):
        assert (out / name).exists()
    cfg = ScenarioConfig.from_file(out / "scenario.cfg")
    assert cfg.node_count == 4 and cfg.task_count == 8 and cfg.seed == 3
    nodes = (out / "nodes.csv").read_text().splitlines()
    tasks = (out / "tasks.csv").read_text().splitlines()
    assert len(nodes) == 1 + 4
    assert len(tasks) == 1 + 8
    assert nodes[0].startswith("id,cpu_cores")


def test_gen_scenario_deterministic(tmp_path):
    run_ok("gen-scenario", *TINY, "--out", str(tmp_path / "a"))
    run_ok("gen-scenario", *TINY, "--out", str(tmp_path / "b"))
    for name in ("nodes.csv", "tasks.csv", "images.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_file_round_trip(tmp_path):
    out = tmp_path / "scen"
    run_ok("gen-scenario", *TINY, "--out", str(out))
    # reusing the emitted config reproduces the exact same scenario
    out2 = tmp_path / "again"
    run_ok("gen-scenario", "--config", str(out / "scenario.cfg"), "--out", str(out2))
    assert (out / "tasks.csv").read_bytes() == (out2 / "tasks.csv").read_bytes()


@pytest.mark.parametrize("policy", ["eq", "rb", "la", "il"])
def test_eval_heuristics(tmp_path, policy):
    out = tmp_path / policy
    proc = run_ok("eval", *TINY, "--policy", policy, "--out", str(out))
    assert f"policy={policy}" in proc.stdout
    events = (out / f"events_{policy}_seed3.csv").read_text().splitlines()
    metrics = (out / f"metrics_{policy}_seed3.csv").read_text().splitlines()
    assert events[0] == EVENT_LOG_HEADER
    assert metrics[0] == METRICS_HEADER
    assert len(metrics) == 1 + 8


def test_eval_byte_deterministic(tmp_path):
    run_ok("eval", *TINY, "--policy", "il", "--out", str(tmp_path / "a"))
    run_ok("eval", *TINY, "--policy", "il", "--out", str(tmp_path / "b"))
    name = "events_il_seed3.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_train_then_eval_ocs(tmp_path):
    run_dir = tmp_path / "run"
    proc = run_ok("train", *TINY, "--episodes", "3", "--out", str(run_dir))
    assert "trained 3 updates" in proc.stdout
    assert (run_dir / "checkpoint.bin").exists()
    assert (run_dir / "checkpoint_n4.bin").exists()
    report = (run_dir / "train_report.csv").read_text().splitlines()
    assert len(report) == 1 + 3

    out = tmp_path / "eval"
    run_ok(
        "eval", *TINY, "--policy", "ocs",
        "--checkpoint", str(run_dir / "checkpoint.bin"), "--out", str(out),
    )
    assert (out / "events_ocs_seed3.csv").exists()


def test_compare_and_plot_chain(tmp_path):
    tables = tmp_path / "tables"
    run_ok(
        "compare", *TINY, "--sweep", "node_count", "--values", "4,5",
        "--policies", "eq,la", "--repeats", "2", "--out", str(tables),
    )
    runs = (tables / "runs.csv").read_text().splitlines()
    assert len(runs) == 1 + 2 * 2 * 2
    plots = tmp_path / "plots"
    run_ok("plot", "--tables", str(tables), "--out", str(plots))
    for component in ("comm", "download", "compute", "total"):
        assert (plots / f"node_count_{component}.png").exists()


def test_bad_policy_is_json_error(tmp_path):
    err = run_err("eval", *TINY, "--policy", "noop", "--out", str(tmp_path))
    assert "invalid choice" in err["error"]


def test_ocs_without_checkpoint_is_json_error(tmp_path):
    err = run_err("eval", *TINY, "--policy", "ocs", "--out", str(tmp_path))
    assert "--checkpoint" in err["error"]


def test_missing_checkpoint_file_is_json_error(tmp_path):
    err = run_err(
        "eval", *TINY, "--policy", "ocs",
        "--checkpoint", str(tmp_path / "nope.bin"), "--out", str(tmp_path),
    )
    assert "nope.bin" in err["error"]


def test_invalid_config_is_json_error(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("node_count=0\n")
    err = run_err("gen-scenario", "--config", str(bad), "--out", str(tmp_path / "o"))
    assert "invalid scenario config" in err["error"]


def test_unknown_config_key_is_json_error(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("node_cnt=5\n")
    err = run_err("gen-scenario", "--config", str(bad), "--out", str(tmp_path / "o"))
    assert "node_cnt" in err["error"]


def test_plot_empty_dir_is_json_error(tmp_path):
    (tmp_path / "tables").mkdir()
    err = run_err("plot", "--tables", str(tmp_path / "tables"), "--out", str(tmp_path / "p"))
    assert "no panel tables" in err["error"]


def test_missing_out_is_json_error():
    err = run_err("gen-scenario", "--nodes", "4")
    assert "--out" in err["error"]
