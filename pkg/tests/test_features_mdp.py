import dataclasses

import numpy as np
import pytest

from bench.benchmarks import get_benchmark
from la_config import MdpSettings
from la_mdp.aging import SENTINEL
from la_mdp.environment import LaEnvironment
from la_mdp.features import (
    EncodingMode,
    FeatureSchema,
    GraphInput,
    SchemaMismatchError,
    encode_features,
    encode_flat,
    la_feature_schema,
    terminal_features,
)
from la_mdp.state import build_state
from radio_sim.simulation import build_simulation

SCHEMA = la_feature_schema()


def _sorted_rows(a):
    return a[np.lexsort(a.T[::-1])]


def test_schema_layout():
    assert SCHEMA.size == 100
    assert SCHEMA.n_nodes == 9
    assert SCHEMA.node_width == 7
    assert SCHEMA.graph_width == 63
    assert SCHEMA.names[6] == "node0_valid"
    assert len(set(SCHEMA.names)) == SCHEMA.size


def test_schema_follows_history_lengths():
    schema = la_feature_schema(MdpSettings(k_interferers=2, k_csi=1, k_harq=2, k_la=1))
    assert schema.n_nodes == 3
    assert schema.size == 3 * 7 + 6 + 2 + 2 + 3 + 2 + 2
    assert schema.schema_hash != SCHEMA.schema_hash


def test_min_max_endpoints():
    raw = np.asarray(SCHEMA.lower, dtype=float).copy()
    idx = SCHEMA.names.index("serving_rsrp_dbm")
    raw[idx] = -44.0
    x = SCHEMA.normalize(raw)
    assert x[idx] == 1.0
    assert np.all(np.delete(x, idx) == -1.0)
    raw[idx] = -200.0
    assert SCHEMA.normalize(raw)[idx] == -1.0


def test_manifest_round_trip_and_version_check(tmp_path):
    restored = FeatureSchema.from_manifest(SCHEMA.manifest())
    assert restored == SCHEMA
    assert restored.schema_hash == SCHEMA.schema_hash
    SCHEMA.save_manifest(tmp_path / "features.json")
    with pytest.raises(SchemaMismatchError):
        FeatureSchema.from_manifest({**SCHEMA.manifest(), "schema_version": 99})


def test_cold_start_state(small_scenario):
    sim = build_simulation(small_scenario, seed=2)
    decision = sim.schedule_tti()[0]
    state = build_state(sim, decision.ue, decision.tti, decision.attempt)
    assert state.attempt == 1
    assert all(entry == (SENTINEL, SENTINEL) for entry in state.csi_history)
    assert all(entry == (SENTINEL, SENTINEL) for entry in state.la_history)
    assert state.harq_history == (0.0,) * 8
    assert state.rank_weighted_avg_cqi == SENTINEL
    assert state.expected_se == 0.0
    assert state.buffer_norm == 8.0


def test_state_never_reads_future_reports(small_scenario):
    sim = build_simulation(small_scenario, seed=4)
    window = MdpSettings.from_config().aging_window
    for _ in range(70):
        for d in sim.schedule_tti():
            state = build_state(sim, d.ue, d.tti, d.attempt)
            visible = [r for r in sim.ues[d.ue].csi_reports if r.t_available <= d.tti and d.tti - r.t_available <= window]
            fresh = [entry for entry in state.csi_history if entry != (SENTINEL, SENTINEL)]
            assert len(fresh) == min(5, len(visible))
            if visible:
                newest = max(visible, key=lambda r: r.t_available)
                assert state.csi_history[0] == (newest.cqi, newest.rank)
        sim.step_tti()


def test_attempt_range_is_checked(small_scenario):
    sim = build_simulation(small_scenario)
    d = sim.schedule_tti()[0]
    state = build_state(sim, d.ue, d.tti, d.attempt)
    with pytest.raises(ValueError):
        dataclasses.replace(state, attempt=6)


def test_single_cell_has_no_valid_neighbors():
    env = LaEnvironment(get_benchmark("B1").scenario(seed=1, distance_m=300.0).model_copy(update={"duration_tti": 10}), seed=1)
    obs = env.observe()
    graph = SCHEMA.split_graph(obs.features)
    assert graph.mask.tolist() == [[True] + [False] * 8]
    assert np.all(graph.nodes[0, 1:] == 0.0)
    assert np.all(graph.edge_weights[0, 1:] == 0.0)
    assert obs.features[0, 6] == 1.0


def test_feature_vectors_are_fixed_size_and_bounded(small_scenario):
    sizes = set()
    for cfg in (small_scenario, get_benchmark("B2b-9cell").scenario(seed=0)):
        env = LaEnvironment(cfg.model_copy(update={"duration_tti": 15}), seed=0)
        while not env.done:
            obs = env.observe()
            sizes.add(obs.features.shape[1])
            assert np.all(np.abs(obs.features) <= 1.0)
            env.act([5] * len(obs.decisions))
    assert sizes == {100}


def test_graph_view_is_neighbor_order_invariant():
    sim = build_simulation(get_benchmark("B2b-9cell").scenario(seed=3))
    d = sim.schedule_tti()[0]
    state = build_state(sim, d.ue, d.tti, d.attempt)
    assert len(state.neighbors) >= 2
    permuted = dataclasses.replace(state, neighbors=tuple(reversed(state.neighbors)))
    a = encode_features(state, EncodingMode.GRAPH, SCHEMA)
    b = encode_features(permuted, "graph", SCHEMA)
    assert isinstance(a, GraphInput)
    assert np.array_equal(a.nodes[0], b.nodes[0])
    assert np.array_equal(_sorted_rows(a.nodes[1:]), _sorted_rows(b.nodes[1:]))
    assert np.array_equal(a.dynamic, b.dynamic)
    assert np.all((a.edge_weights >= 0) & (a.edge_weights <= 1))
    assert np.array_equal(encode_features(state, EncodingMode.FLAT, SCHEMA), encode_flat(state, SCHEMA))


def test_schema_without_graph_block_cannot_split():
    flat_only = FeatureSchema(names=("a",), lower=(0.0,), upper=(1.0,))
    with pytest.raises(SchemaMismatchError):
        flat_only.split_graph(np.zeros(1))


def test_environment_emits_consistent_transitions(small_scenario):
    env = LaEnvironment(small_scenario.model_copy(update={"duration_tti": 60}), seed=1)
    transitions = []
    while not env.done:
        obs = env.observe()
        env.act([0] * len(obs.decisions), snapshot_id=3)
        transitions.extend(env.drain_transitions())
    assert transitions
    assert env.tracker.audit()
    for tr in transitions:
        assert tr.state.shape == (SCHEMA.size,)
        assert tr.snapshot_id == 3
        if tr.done:
            assert np.array_equal(tr.next_state, terminal_features(SCHEMA))
        else:
            assert tr.reward < 0


def test_environment_rejects_wrong_action_count(small_scenario):
    env = LaEnvironment(small_scenario, seed=1)
    obs = env.observe()
    with pytest.raises(ValueError):
        env.act([0] * (len(obs.decisions) + 1))
