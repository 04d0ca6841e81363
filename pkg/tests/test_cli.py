import json

import pytest

import la_main
from bench.bandit import bandit_schema
from bench.metrics import MetricsRow
from la_config import NetworkSettings
from la_tools import read_csv, write_csv
from learner.checkpoint import save_checkpoint
from learner.qnetwork import QNetwork


def _run(*argv):
    return la_main.main([str(a) for a in argv])


def test_eval_olla_writes_metrics(tmp_path):
    code = _run("eval", "--benchmark", "B3", "--policy", "olla", "--seeds", 1, "--duration-tti", 40, "--out", tmp_path)
    assert code == la_main.EXIT_OK
    rows = read_csv(tmp_path / "metrics.csv")
    assert len(rows) == 1
    assert rows[0]["scenario"] == "B3"
    assert rows[0]["policy"] == "olla"


def test_eval_with_baseline_writes_gains(tmp_path):
    code = _run("eval", "--benchmark", "B2a", "--policy", "fixed:3", "--seeds", 2, "--duration-tti", 30, "--baseline", "--out", tmp_path)
    assert code == la_main.EXIT_OK
    assert len(read_csv(tmp_path / "metrics.csv")) == 4
    gains = read_csv(tmp_path / "gains.csv")
    assert {g["metric"] for g in gains} == {"mean_cell_throughput_bps", "mean_se"}
    assert all(g["baseline"] == "olla" for g in gains)


def test_unknown_benchmark_exit_code(tmp_path):
    assert _run("eval", "--benchmark", "B9", "--out", tmp_path) == la_main.EXIT_UNKNOWN_BENCHMARK


def test_schema_mismatch_exit_code(tmp_path):
    schema = bandit_schema()
    path = save_checkpoint(tmp_path / "bandit.npz", QNetwork.build(schema, NetworkSettings(variant="mlp", hidden_layers=1, hidden_units=4)), schema)
    code = _run("eval", "--benchmark", "B2a", "--checkpoint", path, "--seeds", 1, "--duration-tti", 10, "--out", tmp_path / "eval")
    assert code == la_main.EXIT_SCHEMA_MISMATCH


@pytest.mark.parametrize(
    "argv",
    [
        ["eval", "--config", "missing.ini"],
        ["train"],
        ["train", "--space", "missing.json", "--max-rounds", "1"],
    ],
)
def test_bad_configuration_exit_code(tmp_path, argv):
    assert _run(*argv, "--out", tmp_path) == la_main.EXIT_BAD_CONFIG


def test_usage_errors(tmp_path):
    assert _run("eval", "--bogus", "--out", tmp_path) == la_main.EXIT_USAGE
    assert _run() == la_main.EXIT_USAGE
    assert _run("plot-data", "--kind", "heatmap", "--inputs", "x.csv") == la_main.EXIT_USAGE


def _audit_rows(sizes_by_tick):
    return [dict(elapsed_s=t, shard=j, size=size) for t, sizes in sizes_by_tick for j, size in enumerate(sizes)]


def test_replay_audit(tmp_path):
    run_dir = tmp_path / "run"
    write_csv(run_dir / "replay_audit.csv", _audit_rows([(60.0, [500, 500, 500, 500]), (120.0, [1000, 500, 1000, 1000])]))
    assert _run("replay-audit", "--run-dir", run_dir, "--max-imbalance", 500, "--out", tmp_path / "a") == la_main.EXIT_OK
    summary = read_csv(tmp_path / "a" / "imbalance.csv")
    assert [int(r["imbalance"]) for r in summary] == [0, 500]
    assert [int(r["total"]) for r in summary] == [2000, 3500]
    assert _run("replay-audit", "--run-dir", run_dir, "--max-imbalance", 100, "--out", tmp_path / "b") == la_main.EXIT_ERROR
    assert _run("replay-audit", "--run-dir", tmp_path / "nowhere", "--out", tmp_path / "c") == la_main.EXIT_BAD_CONFIG


def test_plot_data(tmp_path):
    metrics = tmp_path / "metrics.csv"
    rows = [MetricsRow("B2a", s, p, "h", 3, 1000, 10, t, 1.0, 0.1, 5.0, [0] * 27 + [10]) for s in range(3) for p, t in (("olla", 100.0), ("rl", 115.0))]
    write_csv(metrics, [r.to_csv_row() for r in rows])
    assert _run("plot-data", "--kind", "gains", "--inputs", metrics, "--out", tmp_path / "plots") == la_main.EXIT_OK
    gains = read_csv(tmp_path / "plots" / "gains.csv")
    throughput = next(g for g in gains if g["metric"] == "mean_cell_throughput_bps")
    assert float(throughput["median"]) == pytest.approx(15.0)
    assert _run("plot-data", "--kind", "mcs-cdf", "--inputs", metrics, "--out", tmp_path / "plots") == la_main.EXIT_OK
    assert len(read_csv(tmp_path / "plots" / "mcs-cdf.csv")) == 2 * 28


def test_train_sync_smoke(tmp_path):
    space = tmp_path / "space.json"
    space.write_text(json.dumps({"preset": "generalized", "n_configs": 1, "n_seeds": 1, "randomization": {"n_fb_ues": [2], "traffic_mix": ["FullBuffer"]}}))
    hyper = tmp_path / "hyper.ini"
    hyper.write_text(
        "[Network]\nhidden_layers = 1\nhidden_units = 8\n"
        "[Actors]\nn_actors = 1\nenv_slots = 1\nlocal_buffer = 8\n"
        "[Replay]\nn_shards = 1\ncapacity = 1000\n"
    )
    out = tmp_path / "run"
    code = _run("train", "--space", space, "--config", hyper, "--mode", "sync", "--max-rounds", 3, "--episode-tti", 20, "--out", out)
    assert code == la_main.EXIT_OK
    assert (out / "checkpoints" / "final.npz").is_file()
    assert json.loads((out / "feature_schema.json").read_text())["names"][6] == "node0_valid"
    assert (out / "replay_audit.csv").is_file()
