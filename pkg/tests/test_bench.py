import itertools
import json

import numpy as np
import pytest

from bench.bandit import BanditEnvironment, bandit_schema, expected_rewards, greedy_agreement, oracle_mcs, success_se
from bench.benchmarks import B1_DISTANCES_M, BENCHMARK_IDS, UnknownBenchmarkError, benchmark_registry, benchmark_scenarios, get_benchmark
from bench.compare import UnpairedRowsError, boxplot_stats, compare_vs_baseline, paired_gains, relative_gain
from bench.metrics import MetricsRow, aggregate, compute_metrics
from bench.plot_data import alpha_from_policy, emit, ingestion_series, load_metrics
from bench.presets import preset_stream, specialized_stream, sweep_alpha
from bench.randomization import RandomizationSpace, default_scenario, draw_config, generate_training_scenarios, scenario_seeds, training_stream
from bench.runner import PolicySpec, make_policy, run_b1_sweep, run_benchmark, run_one
from bench.scenario_parser import ConfigFileError, RunFile, parse_benchmark_overrides, parse_scenario, parse_training_space
from channel_logger import ChannelLogger
from la_config import NetworkSettings
from la_mdp.features import SchemaMismatchError, la_feature_schema
from la_tools import write_csv
from learner.checkpoint import save_checkpoint
from learner.qnetwork import QNetwork
from radio_sim.scenario import SUBBANDS_BY_BANDWIDTH, TrafficKind
from radio_sim.simulation import TransmissionOutcome
from runtime.trainer import TrainingConfig, train

SHORT = 40


def _short(bench_id, duration=SHORT):
    return get_benchmark(bench_id).model_copy(update={"duration_tti": duration})


def _outcome(ue, mcs, ack, tbs, payload, n_re, rank):
    return TransmissionOutcome(
        tti=0, cell=0, ue=ue, process_id=0, mcs=mcs, rank=rank, attempt=1, ack=ack, tbs_bits=tbs, payload_bits=payload, n_re=n_re,
        sinr_db=0.0, effective_sinr_db=0.0, dropped=False, feedback_tti=4,
    )  # fmt: skip


def _row(policy, seed, throughput, se=1.0, scenario="B2a"):
    return MetricsRow(scenario, seed, policy, "h", 3, 1000, 10, throughput, se, 0.1, 5.0, [0] * 28)


# -- randomization -------------------------------------------------------


def test_training_stream_is_a_reproducible_permutation():
    a = list(generate_training_scenarios(n_configs=5, n_seeds=4, master_seed=11))
    b = list(generate_training_scenarios(n_configs=5, n_seeds=4, master_seed=11))
    assert len(a) == 20
    assert a == b
    pairs = {(s.name, s.seed) for s in a}
    assert len(pairs) == 20
    assert {name for name, _ in pairs} == {f"train-{i:04d}" for i in range(5)}
    assert {seed for _, seed in pairs} == set(scenario_seeds(11, 4))
    assert list(generate_training_scenarios(n_configs=5, n_seeds=4, master_seed=12)) != a


def test_training_stream_prefix_spans_many_configs():
    n_actors = 4
    prefix = list(itertools.islice(training_stream()(), n_actors * 40))
    assert len({s.name for s in prefix}) > 50
    for actor in range(n_actors):
        assert len({s.name for s in prefix[actor::n_actors]}) > 10


def test_full_space_size():
    seeds = scenario_seeds(2024, 160)
    assert len(set(seeds)) == 160
    rng = np.random.default_rng([2024, 0])
    draws = [draw_config(rng, RandomizationSpace(), i) for i in range(250)]
    assert len(draws) * len(seeds) == 40_000


def test_draws_are_valid_combinations():
    rng = np.random.default_rng(0)
    space = RandomizationSpace()
    for i in range(300):
        draw = draw_config(rng, space, i)
        assert draw.bandwidth_mhz in SUBBANDS_BY_BANDWIDTH
        assert draw.ues
        for ue in draw.ues:
            assert ue.max_rank <= ue.n_antennas
            assert ue.traffic != TrafficKind.CHAT
        kinds = {ue.traffic for ue in draw.ues}
        if draw.traffic_mix == "FullBuffer":
            assert kinds == {TrafficKind.FULL_BUFFER}
        elif draw.traffic_mix == "Embb":
            assert kinds == {TrafficKind.EMBB}


def test_default_scenario_uses_first_values():
    cfg = default_scenario()
    assert len(cfg.cells) == 3
    assert len(cfg.ues) == 10
    assert cfg.cells[0].cell_radius_m == 166.0
    assert cfg.indoor_probability == 0.8
    assert all(ue.traffic == TrafficKind.FULL_BUFFER for ue in cfg.ues)


def test_space_rejects_unknown_bandwidth():
    with pytest.raises(ValueError):
        RandomizationSpace(bandwidth_mhz=(33.0,))


# -- benchmarks ----------------------------------------------------------


def test_registry_contents():
    registry = benchmark_registry()
    assert tuple(registry) == BENCHMARK_IDS
    assert registry["B5"].n_cells == 9
    assert len(registry["B5"].scenario(0).ues) == 36
    assert registry["B2b-9cell"].n_cells == 9
    assert registry["B1"].n_cells == 1
    assert get_benchmark("B2a").spec_hash == get_benchmark("B2a").spec_hash
    assert get_benchmark("B2a").spec_hash != get_benchmark("B2b").spec_hash


def test_b1_places_one_outdoor_ue_per_distance():
    scenarios = benchmark_scenarios(get_benchmark("B1"), seeds=[0, 1])
    assert len(scenarios) == len(B1_DISTANCES_M) * 2
    for cfg, distance in zip(scenarios[::2], B1_DISTANCES_M):
        (ue,) = cfg.ues
        assert ue.initial_position == (distance, 0.0)
        assert ue.indoor is False
        assert cfg.name == f"B1@{distance:g}m"


def test_unknown_benchmark():
    with pytest.raises(UnknownBenchmarkError):
        get_benchmark("B9")
    with pytest.raises(KeyError):
        get_benchmark("B9")
    with pytest.raises(UnknownBenchmarkError):
        benchmark_registry(overrides={"B9": {}})


def test_overrides_change_the_spec_hash():
    changed = get_benchmark("B5", overrides={"B5": {"ue_mix": {"full_buffer": 6, "chat": 2}}})
    assert changed.ue_mix.full_buffer == 6
    assert changed.ue_mix.embb == 0
    assert changed.spec_hash != get_benchmark("B5").spec_hash


# -- metrics and comparison ----------------------------------------------


def test_compute_metrics():
    outcomes = [
        _outcome(0, 10, True, 1000, 800.0, 100, 2),
        _outcome(0, 12, False, 1200, 1200.0, 100, 2),
        _outcome(1, 4, True, 300, 300.0, 50, 1),
    ]
    row = compute_metrics(outcomes, "B2a", 0, "olla", "h", n_cells=2, duration_tti=1000, n_ues=3)
    assert row.transmissions == 3
    assert row.mean_cell_throughput_bps == pytest.approx(650.0)
    assert row.mean_se == pytest.approx(1300 / 450)
    assert row.bler == pytest.approx(1 / 3)
    assert row.mean_mcs == pytest.approx(26 / 3)
    assert row.per_ue_throughput_bps == {0: 1000.0, 1: 300.0, 2: 0.0}
    assert row.per_ue_bler == {0: 0.5, 1: 0.0}
    assert row.mcs_cdf[-1] == 1.0
    restored = MetricsRow.from_csv_row({k: str(v) for k, v in row.to_csv_row().items()})
    assert restored == row


def test_throughput_counts_acked_tbs_not_payload():
    # a nearly empty eMBB buffer still occupies a full transport block
    outcomes = [_outcome(0, 20, True, 5000, 120.0, 200, 1), _outcome(0, 20, False, 5000, 5000.0, 200, 1)]
    row = compute_metrics(outcomes, "B4", 0, "olla", "h", n_cells=1, duration_tti=10, n_ues=1)
    assert row.mean_cell_throughput_bps == pytest.approx(5000 / 0.01)
    assert row.per_ue_throughput_bps == {0: pytest.approx(5000 / 0.01)}


def test_metrics_of_an_idle_run():
    row = compute_metrics([], "B3", 0, "olla", "h", n_cells=3, duration_tti=100, n_ues=2)
    assert row.transmissions == 0
    assert row.bler == 0.0
    assert row.mean_cell_throughput_bps == 0.0
    assert row.mcs_histogram == [0] * 28


def test_aggregate_pools_bler_by_transmissions():
    a = _row("olla", 0, 100.0)
    b = _row("olla", 1, 300.0)
    b.transmissions, b.bler = 30, 0.3
    summary = aggregate([a, b])
    assert summary["runs"] == 2
    assert summary["mean_cell_throughput_bps"] == 200.0
    assert summary["bler"] == pytest.approx((10 * 0.1 + 30 * 0.3) / 40)
    assert aggregate([]) == {}


def test_relative_gain():
    assert relative_gain(110.0, 100.0) == pytest.approx(10.0)
    assert relative_gain(100.0, 100.0) == 0.0
    assert relative_gain(90.0, 100.0) == pytest.approx(-10.0)
    assert relative_gain(0.0, 0.0) == 0.0
    assert relative_gain(1.0, 0.0) == np.inf


def test_boxplot_statistics():
    stats = boxplot_stats(range(1, 10))
    assert (stats["q1"], stats["median"], stats["q3"]) == (3.0, 5.0, 7.0)
    assert stats["outliers"] == []
    stats = boxplot_stats(list(range(1, 10)) + [100])
    assert stats["outliers"] == [100.0]
    assert stats["whisker_high"] == 9.0
    assert stats["whisker_low"] == 1.0
    assert boxplot_stats([])["n"] == 0


def test_paired_gains_and_table():
    base = [_row("olla", s, 100.0) for s in range(3)]
    policy = [_row("rl", s, 100.0 + 10 * s) for s in range(3)]
    assert paired_gains(policy, base) == {("B2a", "h", s, None): pytest.approx(10.0 * s) for s in range(3)}
    table = compare_vs_baseline(policy, base)
    assert [(t["metric"], t["baseline"]) for t in table] == [("mean_cell_throughput_bps", "olla"), ("mean_se", "olla")]
    assert table[0]["median"] == pytest.approx(10.0)
    assert table[1]["median"] == 0.0
    with pytest.raises(UnpairedRowsError):
        paired_gains([_row("rl", 9, 1.0)], base)


# -- bandit --------------------------------------------------------------


def test_bandit_oracle_is_monotone():
    grid = np.linspace(-10, 35, 200)
    best = oracle_mcs(grid, 0.5)
    assert best[0] == 0
    assert best[-1] >= 20
    assert np.all(np.diff(best) >= 0)
    assert np.all(oracle_mcs(grid, 2.0) <= best)
    assert expected_rewards(grid, 0.5).shape == (200, 28)


def test_bandit_transitions_are_one_step(rng):
    env = BanditEnvironment(seed=3, alpha=0.5, n_steps=5)
    se = success_se()
    while not env.done:
        obs = env.observe()
        assert np.all(np.abs(obs.features) <= 1.0)
        actions = rng.integers(0, 28, size=len(obs.decisions))
        outcomes = env.act(actions)
        transitions = env.drain_transitions()
        assert len(transitions) == len(outcomes) == 8
        for tr, o in zip(transitions, outcomes):
            assert tr.done
            assert tr.reward == (pytest.approx(se[o.mcs]) if o.ack else -0.5)


def test_greedy_agreement_bounds():
    net = QNetwork.build(bandit_schema(), NetworkSettings(variant="mlp", hidden_layers=1, hidden_units=8), seed=0)
    result = greedy_agreement(net, 0.5, n_points=50)
    assert 0.0 <= result["agreement"] <= 1.0
    assert result["mean_regret"] >= 0.0
    assert result["max_regret"] >= result["mean_regret"]


# -- runner --------------------------------------------------------------


def test_policy_spec_parse():
    assert PolicySpec.parse("olla") == PolicySpec(kind="olla")
    assert PolicySpec.parse("fixed:7").mcs == 7
    assert PolicySpec.parse("fixed:7").name == "fixed7"
    assert PolicySpec.parse("inner-loop").name == "inner-loop"
    spec = PolicySpec.parse("runs/a/checkpoints/final.npz")
    assert spec.kind == "checkpoint"
    assert spec.name == "final"


def test_run_one_is_deterministic():
    bench = _short("B2a")
    a = run_one(bench, PolicySpec(kind="olla"), seed=3)
    b = run_one(bench, PolicySpec(kind="olla"), seed=3)
    assert a == b
    assert a.transmissions > 0
    assert a.policy == "olla"
    assert a.spec_hash == bench.spec_hash


def test_run_benchmark_writes_metrics(tmp_path):
    channel = ChannelLogger(tmp_path)
    rows = run_benchmark(_short("B2a"), PolicySpec(kind="fixed", mcs=5), seeds=[0, 1], channel_logger=channel)
    assert [r.seed for r in rows] == [0, 1]
    loaded = load_metrics([tmp_path / "metrics.csv"])
    assert [r.key() for r in loaded] == [r.key() for r in rows]
    assert loaded[0].mcs_histogram == rows[0].mcs_histogram


def test_checkpoint_policy_needs_matching_schema(tmp_path):
    small = NetworkSettings(variant="mlp", hidden_layers=1, hidden_units=8)
    bandit_path = save_checkpoint(tmp_path / "bandit.npz", QNetwork.build(bandit_schema(), small), bandit_schema())
    with pytest.raises(SchemaMismatchError):
        make_policy(PolicySpec.parse(str(bandit_path)))

    schema = la_feature_schema()
    path = save_checkpoint(tmp_path / "rl.npz", QNetwork.build(schema, small, seed=2), schema)
    row = run_one(_short("B2a", 30), PolicySpec.parse(str(path)), seed=0)
    assert row.policy == "rl"
    assert row.transmissions > 0


def test_b1_sweep_link_curve():
    rows = run_b1_sweep(_short("B1", 60), PolicySpec(kind="olla"), seeds_per_location=1, distances=[40.0, 1250.0])
    assert [r.distance_m for r in rows] == [40.0, 1250.0]
    assert rows[0].mean_cell_throughput_bps > rows[1].mean_cell_throughput_bps


# -- run files -----------------------------------------------------------


def test_training_space_file():
    run_file = RunFile({"preset": "specialized", "n_configs": 3, "randomization": {"cell_radius_m": [300, 600], "n_fb_ues": [2]}})
    ts = parse_training_space(run_file, master_seed=7)
    assert ts.preset == "specialized"
    assert ts.space.cell_radius_m == (300.0, 600.0)
    assert ts.n_configs == 3
    assert ts.n_seeds == 160
    assert ts.master_seed == 7
    assert run_file.glom("randomization.n_fb_ues") == [2]


@pytest.mark.parametrize(
    "tree",
    [
        {"preset": "everything"},
        {"randomization": {"bandwidth_mhz": [33]}},
        {"randomization": {"cell_radius_m": []}},
    ],
)
def test_invalid_training_space(tree):
    with pytest.raises(ConfigFileError):
        parse_training_space(RunFile(tree))


def test_run_file_paths(tmp_path):
    run_file = RunFile({"a": {"b": 1}})
    assert run_file.glom("a.b") == 1
    assert run_file.glom("a.c", default=None) is None
    with pytest.raises(ConfigFileError):
        run_file.glom("a.c")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigFileError):
        RunFile.load(broken)
    with pytest.raises(ConfigFileError):
        RunFile.load(tmp_path / "missing.json")


def test_benchmark_override_file(tmp_path):
    path = tmp_path / "overrides.json"
    path.write_text(json.dumps({"benchmarks": {"B5": {"ue_mix": {"full_buffer": 6}}}}))
    overrides = parse_benchmark_overrides(RunFile.load(path))
    assert get_benchmark("B5", overrides=overrides).ue_mix.full_buffer == 6
    assert parse_benchmark_overrides(None) == {}
    with pytest.raises(ConfigFileError):
        parse_benchmark_overrides(RunFile({"benchmarks": ["B5"]}))


def test_scenario_file():
    cfg = get_benchmark("B2a").scenario(1)
    assert parse_scenario(RunFile({"scenario": cfg.model_dump(mode="json")})) == cfg
    assert parse_scenario(RunFile(cfg.model_dump(mode="json"))) == cfg
    broken = cfg.model_dump(mode="json")
    broken["ues"] = []
    with pytest.raises(ConfigFileError):
        parse_scenario(RunFile(broken))


# -- presets and plot data -----------------------------------------------


def test_specialized_stream():
    scenarios = list(specialized_stream(n_seeds=2, duration_tti=30)())
    assert [s.name for s in scenarios] == ["B2a", "B2b", "B4"] * 2
    assert all(s.seed >= 1_000_000 and s.duration_tti == 30 for s in scenarios)
    assert scenarios == list(specialized_stream(n_seeds=2, duration_tti=30)())


def test_preset_stream():
    stream = preset_stream("generalized", n_configs=2, n_seeds=2)
    assert len(list(stream())) == 4
    assert list(itertools.islice(stream(), 1)) == list(itertools.islice(stream(), 1))
    with pytest.raises(ValueError):
        preset_stream("everything")


def test_ingestion_series_keeps_actor_rows():
    rows = [
        dict(elapsed_s="10.0", source="actor0", batches_per_min="12.0"),
        dict(elapsed_s="10.0", source="learner", batches_per_s="3.0"),
    ]
    assert ingestion_series(rows) == [dict(elapsed_s=10.0, actor="actor0", batches_per_min=12.0)]
    assert alpha_from_policy("alpha=0.5") == 0.5


def test_emit_plot_series(tmp_path):
    metrics = tmp_path / "metrics.csv"
    rows = [_row("olla", s, 100.0) for s in range(3)] + [_row("rl", s, 120.0) for s in range(3)]
    for r in rows:
        r.mcs_histogram = [0] * 27 + [r.transmissions]
        r.per_ue_bler = {0: 0.1, 1: 0.2}
    write_csv(metrics, [r.to_csv_row() for r in rows])

    assert emit("gains", [metrics], tmp_path / "gains.csv") == 2
    assert emit("mcs-cdf", [metrics], tmp_path / "mcs.csv") == 2 * 28
    assert emit("bler-cdf", [metrics], tmp_path / "bler.csv") == 2 * 6
    with pytest.raises(ValueError):
        emit("heatmap", [metrics], tmp_path / "x.csv")


@pytest.mark.slow
def test_trained_policy_is_not_worse_than_olla(tmp_path):
    tc = TrainingConfig.from_config().override(
        actors=dict(n_actors=2, env_slots=2, local_buffer=64),
        learner=dict(batch_size=64, warmup_transitions=1024, publish_interval=50, target_update_interval=200, checkpoint_every_snapshots=0),
        replay=dict(n_shards=2, capacity=50_000),
        network=dict(variant="gat", hidden_layers=2, hidden_units=64, gnn_units=16),
        optimizer=dict(learning_rate=1e-3),
    )
    run = train(specialized_stream(n_seeds=16, duration_tti=300), tc, mode="sync", max_learner_steps=2000, out_dir=tmp_path)
    assert run.learner.step == 2000
    bench = _short("B2a", 300)
    seeds = range(6)
    rl = run_benchmark(bench, PolicySpec(kind="checkpoint", checkpoint=str(run.final_checkpoint), label="rl"), seeds=seeds, mdp=tc.mdp)
    olla = run_benchmark(bench, PolicySpec(kind="olla"), seeds=seeds, mdp=tc.mdp)
    table = compare_vs_baseline(rl, olla)
    assert len(table) == 2
    assert all(np.isfinite(t["median"]) for t in table)
    assert aggregate(rl)["mean_cell_throughput_bps"] >= aggregate(olla)["mean_cell_throughput_bps"]


@pytest.mark.slow
def test_robustness_weight_trades_throughput_for_bler(tmp_path):
    tc = TrainingConfig.from_config().override(
        actors=dict(n_actors=2, env_slots=2, local_buffer=64),
        learner=dict(batch_size=64, warmup_transitions=1024, publish_interval=50, target_update_interval=200, checkpoint_every_snapshots=0),
        replay=dict(n_shards=2, capacity=50_000),
        network=dict(variant="mlp", hidden_layers=2, hidden_units=64),
        optimizer=dict(learning_rate=1e-3),
    )
    results = sweep_alpha(
        specialized_stream(n_seeds=16, duration_tti=300),
        tc,
        _short("B2a", 300),
        range(6),
        tmp_path,
        train_kwargs=dict(mode="sync", max_learner_steps=1500),
    )
    assert sorted(results) == [0.0, 0.5, 2.0]
    assert [rows[0].policy for rows in results.values()] == ["alpha=0", "alpha=0.5", "alpha=2"]
    assert all((tmp_path / f"alpha_{a:g}" / "checkpoints" / "final.npz").is_file() for a in results)

    low, mid, high = (aggregate(results[a]) for a in (0.0, 0.5, 2.0))
    assert low["bler"] > mid["bler"] > high["bler"]
    assert low["mean_mcs"] > mid["mean_mcs"] > high["mean_mcs"]
    assert mid["mean_cell_throughput_bps"] >= max(low["mean_cell_throughput_bps"], high["mean_cell_throughput_bps"])
