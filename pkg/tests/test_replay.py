import threading
from collections import Counter

import numpy as np
import pytest

from learner.qnetwork import NetworkShape, QNetwork
from replay import InsufficientDataError, ReplayMemory, Shard, SumTree, global_probabilities, two_stage_probabilities
from replay.sum_tree import MaxTree, MinTree
from replay.wire import RemoteReplay, ReplayServer, WireError, decode_payload, encode_payload
from runtime.weights import WeightSnapshot, params_equal

# chi-square critical values at p = 0.01
CHI2_CRIT_DF5 = 15.086
CHI2_CRIT_DF1 = 6.635


def _fixed_memory(replay_settings, **overrides):
    settings = replay_settings(routing="fixed", **overrides)
    return ReplayMemory(settings, seed=0, fixed_mapping={0: 0, 1: 1})


def _fill(memory, make_transition, actor_id, priorities):
    memory.insert_batch(actor_id, [make_transition(priority=p) for p in priorities])


# -- sampling fidelity ---------------------------------------------------


def test_sampling_frequencies_match_prioritized_distribution(replay_settings, make_transition):
    memory = _fixed_memory(replay_settings, capacity=8)
    _fill(memory, make_transition, 0, [0.5, 1.0, 2.0])
    _fill(memory, make_transition, 1, [0.3, 1.5, 3.0])
    expected = two_stage_probabilities(memory)

    counts = Counter()
    n_batches, batch_size = 20_000, 5
    for _ in range(n_batches):
        for ref in memory.sample_batch(batch_size, replacement=True).refs:
            counts[(ref.shard, ref.slot)] += 1

    n = n_batches * batch_size
    chi2 = sum((counts[key] - n * p) ** 2 / (n * p) for key, p in expected.items())
    assert set(counts) == set(expected)
    assert chi2 < CHI2_CRIT_DF5


def test_default_sampling_splits_batches_by_shard_mass(replay_settings, make_transition):
    memory = _fixed_memory(replay_settings, capacity=8)
    _fill(memory, make_transition, 0, [0.5, 1.0, 2.0, 0.2])
    _fill(memory, make_transition, 1, [0.3, 1.5, 3.0, 4.0])
    expected = two_stage_probabilities(memory)
    share = np.array([sum(p for (shard, _), p in expected.items() if shard == j) for j in range(2)])

    n_batches, batch_size = 10_000, 5
    low, high = np.floor(batch_size * share), np.ceil(batch_size * share)
    counts = np.zeros(2)
    for _ in range(n_batches):
        refs = memory.sample_batch(batch_size).refs
        assert len({(r.shard, r.slot) for r in refs}) == batch_size
        per_shard = np.bincount([r.shard for r in refs], minlength=2)
        assert np.all((per_shard >= low) & (per_shard <= high))
        counts += per_shard

    n = n_batches * batch_size
    chi2 = float(((counts - n * share) ** 2 / (n * share)).sum())
    assert chi2 < CHI2_CRIT_DF1


def test_two_shard_example(replay_settings, make_transition):
    memory = _fixed_memory(replay_settings, priority_exponent=1.0)
    _fill(memory, make_transition, 0, [1.0, 3.0])
    _fill(memory, make_transition, 1, [2.0, 2.0])
    probs = two_stage_probabilities(memory)
    assert probs[(0, 0)] + probs[(0, 1)] == pytest.approx(0.5)
    assert probs[(0, 1)] == pytest.approx(0.375)


def test_equal_priorities_are_uniform(replay_settings, make_transition):
    memory = ReplayMemory(replay_settings(n_shards=3), seed=1)
    for actor in range(5):
        _fill(memory, make_transition, actor, [0.7] * (actor + 1))
    probs = two_stage_probabilities(memory)
    assert len(probs) == 15
    assert all(p == pytest.approx(1 / 15) for p in probs.values())


def test_two_stage_equals_flat_enumeration(replay_settings, make_transition):
    rng = np.random.default_rng(5)
    for trial in range(50):
        n_shards = int(rng.integers(1, 5))
        memory = ReplayMemory(replay_settings(n_shards=n_shards, capacity=16, priority_exponent=float(rng.uniform(0, 1))), seed=trial)
        for actor in range(int(rng.integers(1, 8))):
            _fill(memory, make_transition, actor, rng.uniform(0.01, 10, size=int(rng.integers(1, 9))).tolist())
        assert len(memory) <= 64
        flat = global_probabilities(memory)
        two_stage = two_stage_probabilities(memory)
        assert flat.keys() == two_stage.keys()
        assert all(abs(flat[k] - two_stage[k]) <= 1e-12 for k in flat)
        assert sum(flat.values()) == pytest.approx(1.0)


def test_allocation_is_exact_in_total_and_expectation(replay_settings):
    memory = ReplayMemory(replay_settings(n_shards=3), seed=2)
    totals = np.array([1.0, 2.5, 0.5])
    draws = np.array([memory.allocate(totals, 7) for _ in range(20_000)])
    assert np.all(draws.sum(axis=1) == 7)
    assert np.allclose(draws.mean(axis=0), 7 * totals / totals.sum(), atol=0.03)
    assert np.all(np.abs(draws - 7 * totals / totals.sum()) < 1.0)


def test_importance_weights(replay_settings, make_transition):
    memory = ReplayMemory(replay_settings(), seed=3)
    _fill(memory, make_transition, 0, [0.1, 1.0, 5.0, 2.0])
    batch = memory.sample_batch(3)
    expected = (len(memory) * batch.probabilities) ** (-memory.beta)
    assert np.allclose(batch.is_weights, expected / expected.max())
    assert batch.is_weights.max() == 1.0
    assert len(batch.transitions) == len(batch.refs) == 3


def test_underflow_raises_even_with_replacement(replay_settings, make_transition):
    memory = ReplayMemory(replay_settings(), seed=0)
    with pytest.raises(InsufficientDataError):
        memory.sample_batch(1)
    _fill(memory, make_transition, 0, [1.0, 1.0])
    with pytest.raises(InsufficientDataError):
        memory.sample_batch(3, replacement=True)


# -- routing -------------------------------------------------------------


def test_round_robin_cycles_shards(replay_settings, make_transition):
    memory = ReplayMemory(replay_settings(n_shards=4, capacity=64), seed=0)
    shards = [memory.insert_batch(0, [make_transition() for _ in range(3)]) for _ in range(8)]
    assert shards == [0, 1, 2, 3, 0, 1, 2, 3]
    assert memory.sizes() == [6, 6, 6, 6]
    assert memory.batches_inserted.tolist() == [2, 2, 2, 2]


def test_fixed_mapping_targets_one_shard(replay_settings, make_transition):
    memory = ReplayMemory(replay_settings(n_shards=4, routing="fixed"), seed=0, fixed_mapping={3: 1})
    memory.insert_batch(3, [make_transition() for _ in range(5)])
    assert memory.sizes() == [0, 5, 0, 0]
    assert memory.insert_batch(3, []) == -1


# -- shard mechanics -----------------------------------------------------


def test_max_priority_bootstrap(make_transition):
    shard = Shard(0, capacity=4)
    assert shard.max_priority() == 1.0
    shard.insert([make_transition(priority=5.0)])
    shard.insert([make_transition()])
    assert shard.priorities[1] == 5.0


def test_total_priority_closed_form(make_transition):
    shard = Shard(0, capacity=4, alpha=0.6)
    assert shard.total_priority() == 0.0
    shard.insert([make_transition(priority=2.0), make_transition(priority=2.0)])
    assert shard.total_priority() == pytest.approx(2 * 2**0.6, rel=1e-12)
    assert shard.total_priority() == pytest.approx(3.0314, abs=1e-4)


def test_update_changes_total_by_leaf_delta(make_transition):
    shard = Shard(0, capacity=8, alpha=0.6)
    refs = shard.insert([make_transition(priority=p) for p in (1.0, 2.0, 3.0)])
    before = shard.total_priority()
    assert shard.update(refs[1], 4.0)
    assert shard.total_priority() - before == pytest.approx(4.0**0.6 - 2.0**0.6, abs=1e-12)


def test_stale_reference_is_ignored(make_transition):
    shard = Shard(0, capacity=2)
    old = shard.insert([make_transition(priority=1.0)])[0]
    shard.insert([make_transition(priority=1.0), make_transition(priority=2.0)])
    assert shard.evicted == 1
    assert not shard.update(old, 9.0)
    assert 9.0 not in shard.priorities


def test_prioritized_eviction_replaces_lowest(make_transition):
    shard = Shard(0, capacity=3, prioritized_eviction=True)
    shard.insert([make_transition(priority=p) for p in (1.0, 0.1, 2.0)])
    ref = shard.insert([make_transition(priority=0.5)])[0]
    assert ref.slot == 1


def test_sampling_without_replacement_within_shard(make_transition, rng):
    shard = Shard(0, capacity=8)
    shard.insert([make_transition(priority=p) for p in (0.01, 0.01, 100.0, 0.01)])
    slots = [ref.slot for ref, _, _ in shard.sample(4, rng)]
    assert sorted(slots) == [0, 1, 2, 3]
    slots = [ref.slot for ref, _, _ in shard.sample(6, rng)]
    assert sorted(slots[:4]) == [0, 1, 2, 3]
    total, naive = shard.audit()
    assert total == pytest.approx(naive)


def test_memory_update_priorities_uses_abs_delta_plus_eps(replay_settings, make_transition):
    memory = ReplayMemory(replay_settings(), seed=0)
    _fill(memory, make_transition, 0, [1.0, 1.0, 1.0])
    batch = memory.sample_batch(2)
    assert memory.update_priorities(batch.refs, [-0.5, 0.25]) == 2
    ref = batch.refs[0]
    assert memory.shards[ref.shard].priorities[ref.slot] == pytest.approx(0.501)


def test_audit_matches_naive_sum_on_random_fills(replay_settings, make_transition):
    rng = np.random.default_rng(9)
    memory = ReplayMemory(replay_settings(n_shards=3, capacity=32), seed=9)
    for step in range(40):
        _fill(memory, make_transition, step % 3, rng.uniform(0.01, 10, size=5).tolist())
        batch = memory.sample_batch(4)
        memory.update_priorities(batch.refs, rng.normal(size=4))
    for row in memory.audit():
        assert row["total_priority"] == pytest.approx(row["naive_total"], rel=1e-6)
        assert row["size"] == 32


def test_concurrent_inserts_and_sampling(replay_settings, make_transition):
    memory = ReplayMemory(replay_settings(n_shards=4, capacity=4096), seed=4)
    _fill(memory, make_transition, 0, [1.0] * 16)

    def produce(actor_id):
        for _ in range(50):
            memory.insert_batch(actor_id, [make_transition() for _ in range(10)])

    threads = [threading.Thread(target=produce, args=(a,)) for a in range(4)]
    for t in threads:
        t.start()
    for _ in range(100):
        batch = memory.sample_batch(8)
        memory.update_priorities(batch.refs, np.ones(8))
    for t in threads:
        t.join()
    assert len(memory) == 16 + 4 * 50 * 10
    for row in memory.audit():
        assert row["total_priority"] == pytest.approx(row["naive_total"], rel=1e-9)


# -- segment trees -------------------------------------------------------


def test_sum_tree_skips_zero_leaves():
    tree = SumTree(5)
    for i, v in enumerate([1.0, 0.0, 2.0, 0.0, 1.0]):
        tree.update(i, v)
    assert tree.total == 4.0
    found = {tree.find_prefix(x) for x in np.linspace(0, 4.0, 401)}
    assert found == {0, 2, 4}
    assert tree.find_prefix(1.0) == 2
    with pytest.raises(IndexError):
        tree.update(5, 1.0)
    with pytest.raises(ValueError):
        SumTree(3).find_prefix(0.0)


def test_min_and_max_trees():
    low, high = MinTree(4), MaxTree(4)
    for i, v in enumerate([3.0, 1.0, 4.0, 2.0]):
        low.update(i, v)
        high.update(i, v)
    assert low.argmin() == 1
    assert low.root == 1.0
    assert high.root == 4.0


# -- transport -----------------------------------------------------------


def test_payload_codec_preserves_meta_and_arrays():
    meta, arrays = decode_payload(encode_payload(dict(a=1, b=[1, 2]), dict(x=np.arange(3.0))))
    assert meta == dict(a=1, b=[1, 2])
    assert np.array_equal(arrays["x"], np.arange(3.0))


@pytest.fixture
def replay_server(replay_settings):
    server = ReplayServer(ReplayMemory(replay_settings(), seed=0)).start()
    yield server
    server.stop()


def test_remote_replay_round_trip(replay_server, make_transition):
    client = RemoteReplay(*replay_server.address)
    try:
        with pytest.raises(InsufficientDataError):
            client.sample_batch(2)
        batch = [make_transition(state=[i, i, i, i], reward=float(i), action=i) for i in range(6)]
        assert client.insert_batch(0, batch) == 0
        assert client.insert_batch(0, batch) == 1
        assert len(client) == 12

        sampled = client.sample_batch(4)
        assert len(sampled.transitions) == 4
        for tr in sampled.transitions:
            assert np.array_equal(tr.state, np.full(4, tr.action, dtype=float))
            assert tr.done
        assert client.update_priorities(sampled.refs, np.full(4, 0.5)) == 4
        rows = client.audit()
        assert [r["size"] for r in rows] == [6, 6]
        assert sum(r["batches"] for r in rows) == 2
    finally:
        client.close()


def test_remote_weight_publication(replay_server):
    client = RemoteReplay(*replay_server.address)
    try:
        with pytest.raises(WireError):
            client.fetch_weights()
        net = QNetwork(NetworkShape("mlp", n_inputs=4, hidden_layers=1, hidden_units=8, layer_norm=True), seed=3)
        client.publish_weights(WeightSnapshot.of(net, 1, learner_step=512))
        fetched = client.fetch_weights()
        assert fetched.snapshot_id == 1
        assert fetched.learner_step == 512
        assert fetched.shape == net.shape
        assert params_equal(fetched.params, net.params)
        assert replay_server.board.latest_id == 1
    finally:
        client.close()
