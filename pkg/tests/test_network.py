import numpy as np
import pytest

from bench.bandit import bandit_schema
from la_config import NetworkSettings
from la_mdp.features import la_feature_schema
from learner import layers
from learner.qnetwork import ARCHITECTURE_GRID, NetworkShape, QNetwork, arch_label, forward_q, gat_forward, gcn_forward, init_params, param_count

N_NODES, NODE_FEATURES, N_DYNAMIC = 3, 6, 5
N_INPUTS = N_NODES * (NODE_FEATURES + 1) + N_DYNAMIC
VARIANTS = [(v, ln) for v in ("mlp", "gcn", "gat") for ln in (False, True)]


def _shape(variant, layer_norm, hidden_layers=2, hidden_units=8):
    return NetworkShape(
        variant=variant,
        n_inputs=N_INPUTS,
        hidden_layers=hidden_layers,
        hidden_units=hidden_units,
        layer_norm=layer_norm,
        gnn_units=4,
        n_nodes=N_NODES,
        node_features=NODE_FEATURES,
        n_dynamic=N_DYNAMIC,
    )


def _inputs(rng, batch, n_nodes=N_NODES, valid=None):
    """Flat vectors laid out like the encoder: node blocks with a trailing valid flag, then the dynamic block"""
    blocks = rng.uniform(-1, 1, size=(batch, n_nodes, NODE_FEATURES + 1))
    if valid is None:
        valid = rng.random((batch, n_nodes)) < 0.7
        valid[:, 0] = True
    valid = np.broadcast_to(valid, (batch, n_nodes))
    blocks[..., -1] = 1.0
    blocks[~valid] = 0.0
    dynamic = rng.uniform(-1, 1, size=(batch, N_DYNAMIC))
    return np.concatenate([blocks.reshape(batch, -1), dynamic], axis=1)


# -- shape and construction ----------------------------------------------


@pytest.mark.parametrize("variant, layer_norm", VARIANTS)
def test_param_count_matches_initialized_params(variant, layer_norm):
    shape = _shape(variant, layer_norm, hidden_layers=3, hidden_units=16)
    net = QNetwork(shape, seed=0)
    assert net.n_params == param_count(shape)


def test_build_from_la_schema():
    schema = la_feature_schema()
    for variant in ("mlp", "gcn", "gat"):
        net = QNetwork.build(schema, NetworkSettings(variant=variant, hidden_layers=2, hidden_units=16))
        assert net.shape.n_inputs == 100
        assert net.shape.n_dynamic == 37
        assert forward_q(net, np.zeros(100)).shape == (28,)


def test_graph_variant_needs_graph_schema():
    with pytest.raises(ValueError):
        QNetwork.build(bandit_schema(), NetworkSettings(variant="gat"))


def test_architecture_grid_labels():
    assert len(ARCHITECTURE_GRID) == 8
    assert arch_label(6, 256, True) == "6Lx256 (LN)"
    assert arch_label(2, 512, False) == "2Lx512"


# -- forward -------------------------------------------------------------


@pytest.mark.parametrize("variant, layer_norm", VARIANTS)
def test_zero_weights_output_bias(variant, layer_norm):
    net = QNetwork(_shape(variant, layer_norm), seed=1)
    net.params = {k: np.zeros_like(v) for k, v in net.params.items()}
    net.params["out.b"] = np.linspace(-1, 1, 28)
    q = forward_q(net, _inputs(np.random.default_rng(0), 4))
    assert np.allclose(q, net.params["out.b"])


@pytest.mark.parametrize("variant", ["mlp", "gcn", "gat"])
def test_random_parameters_give_finite_outputs(variant):
    rng = np.random.default_rng(7)
    shape = _shape(variant, True)
    x = _inputs(rng, 16)
    for draw in range(3_000):
        params = init_params(shape, rng)
        scale = 10.0 ** rng.uniform(-3, 2)
        net = QNetwork(shape, {k: v * scale + rng.normal(0, scale, v.shape) for k, v in params.items()})
        assert np.all(np.isfinite(forward_q(net, x)))


@pytest.mark.parametrize("variant, layer_norm", VARIANTS)
def test_forward_is_deterministic(variant, layer_norm):
    x = _inputs(np.random.default_rng(1), 8)
    a = forward_q(QNetwork(_shape(variant, layer_norm), seed=5), x)
    b = forward_q(QNetwork(_shape(variant, layer_norm), seed=5), x)
    assert np.array_equal(a, b)


def test_single_state_and_batch_shapes():
    net = QNetwork(_shape("gcn", True), seed=0)
    x = _inputs(np.random.default_rng(2), 3)
    assert net(x[0]).shape == (28,)
    assert net(x).shape == (3, 28)
    assert np.allclose(net(x[0]), net(x)[0])


@pytest.mark.parametrize("variant", ["gcn", "gat"])
def test_neighbor_permutation_invariance(variant):
    rng = np.random.default_rng(3)
    n_nodes = 9
    shape = NetworkShape(variant, n_nodes * 7 + N_DYNAMIC, 2, 16, True, gnn_units=8, n_nodes=n_nodes, node_features=NODE_FEATURES, n_dynamic=N_DYNAMIC)
    net = QNetwork(shape, seed=4)
    x = _inputs(rng, 10, n_nodes=n_nodes)
    order = np.concatenate([[0], 1 + rng.permutation(n_nodes - 1)])
    blocks = x[:, : n_nodes * 7].reshape(10, n_nodes, 7)[:, order]
    permuted = np.concatenate([blocks.reshape(10, -1), x[:, n_nodes * 7 :]], axis=1)
    assert np.max(np.abs(forward_q(net, x) - forward_q(net, permuted))) <= 1e-6


@pytest.mark.parametrize("variant", ["gcn", "gat"])
def test_serving_only_graph_is_finite(variant):
    net = QNetwork(_shape(variant, True), seed=0)
    x = _inputs(np.random.default_rng(4), 5, valid=np.array([True, False, False]))
    assert np.all(np.isfinite(forward_q(net, x)))


# -- graph layers --------------------------------------------------------


def _dense_adjacency(w, mask):
    n = len(w)
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if mask[i] and mask[j]:
                a[i, j] = 1.0 if i == j else (w[i] + w[j]) / 2
    d = a.sum(axis=1)
    for i in range(n):
        for j in range(n):
            if d[i] > 0 and d[j] > 0:
                a[i, j] /= np.sqrt(d[i] * d[j])
    return a


def test_gcn_single_node_is_plain_projection(rng):
    h0 = rng.normal(size=(1, NODE_FEATURES))
    W = rng.normal(size=(NODE_FEATURES, 4))
    assert layers.gcn_adjacency(np.array([0.3]), np.array([True])).tolist() == [[1.0]]
    assert np.allclose(gcn_forward(h0, np.array([0.3]), None, W), np.maximum(h0 @ W, 0))


def test_gcn_matches_dense_oracle(rng):
    for _ in range(50):
        w = rng.random(9)
        mask = rng.random(9) < 0.7
        mask[0] = True
        h0 = rng.normal(size=(9, NODE_FEATURES))
        W = rng.normal(size=(NODE_FEATURES, 5))
        oracle = np.maximum(_dense_adjacency(w, mask) @ h0 @ W, 0)
        assert np.max(np.abs(gcn_forward(h0, w, mask, W) - oracle)) <= 1e-10


def test_gcn_symmetric_inputs_give_identical_embeddings(rng):
    h0 = np.tile(rng.normal(size=NODE_FEATURES), (4, 1))
    W = np.ones((NODE_FEATURES, 3))
    out = gcn_forward(h0, np.full(4, 0.5), np.ones(4, dtype=bool), W)
    assert np.allclose(out, out[0])


def test_gat_attention_is_a_distribution(rng):
    h0 = rng.normal(size=(20, 9, NODE_FEATURES))
    mask = rng.random((20, 9)) < 0.6
    mask[:, 0] = True
    W = rng.normal(size=(NODE_FEATURES, 4))
    a = rng.normal(size=8)
    alpha = layers.attention_weights(h0, mask, W, a)
    assert np.allclose(alpha.sum(axis=-1), 1.0)
    assert np.all(alpha[~np.broadcast_to(mask[:, None, :], alpha.shape)] == 0.0)


def test_gat_single_valid_node_attends_to_itself(rng):
    h0 = rng.normal(size=(3, NODE_FEATURES))
    mask = np.array([True, False, False])
    alpha = layers.attention_weights(h0, mask, rng.normal(size=(NODE_FEATURES, 4)), rng.normal(size=8))
    assert alpha[0, 0] == 1.0


def test_gat_duplicate_identical_nodes_leave_output_unchanged(rng):
    node = rng.normal(size=NODE_FEATURES)
    W = rng.normal(size=(NODE_FEATURES, 4))
    a = rng.normal(size=8)
    two = gat_forward(np.tile(node, (2, 1)), np.ones(2, dtype=bool), W, a)
    three = gat_forward(np.tile(node, (3, 1)), np.ones(3, dtype=bool), W, a)
    assert np.allclose(two[0], three[0])
    assert np.allclose(three[0], np.maximum(node @ W, 0))


def test_star_readout_without_neighbors(rng):
    h = rng.normal(size=(2, 3, 4))
    pooled, _ = layers.star_readout_forward(h, np.array([[True, False, False], [True, True, True]]))
    assert np.array_equal(pooled[0, 4:], np.zeros(4))
    assert np.allclose(pooled[1, 4:], h[1, 1:].mean(axis=0))


# -- gradients -----------------------------------------------------------


def _check_gradients(net, x, rng, entries_per_tensor=25, h=1e-6):
    R = rng.normal(size=(len(x), 28))
    q, cache = net.forward(x)
    grads = net.backward(R, cache)
    assert grads.keys() == net.params.keys()

    def loss():
        return float(np.sum(net.forward(x)[0] * R))

    for name, p in net.params.items():
        flat = p.reshape(-1)
        picks = rng.choice(flat.size, size=min(entries_per_tensor, flat.size), replace=False)
        for idx in picks:
            old = flat[idx]
            flat[idx] = old + h
            up = loss()
            flat[idx] = old - h
            down = loss()
            flat[idx] = old
            numeric = (up - down) / (2 * h)
            analytic = grads[name].reshape(-1)[idx]
            assert abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric)) + 1e-7, (name, idx, analytic, numeric)


@pytest.mark.parametrize("variant, layer_norm", VARIANTS)
def test_gradients_match_finite_differences(variant, layer_norm):
    rng = np.random.default_rng(VARIANTS.index((variant, layer_norm)))
    for instance in range(32):
        net = QNetwork(_shape(variant, layer_norm), seed=instance)
        # non-trivial LayerNorm parameters
        for name in net.params:
            if "ln_" in name:
                net.params[name] = net.params[name] + rng.normal(0, 0.3, net.params[name].shape)
        _check_gradients(net, _inputs(rng, 32), rng)


def test_layer_norm_backward_matches_finite_differences(rng):
    x = rng.normal(size=(4, 6))
    gain, bias = rng.normal(size=6), rng.normal(size=6)
    dy = rng.normal(size=(4, 6))
    _, cache = layers.layer_norm_forward(x, gain, bias)
    dx, grads = layers.layer_norm_backward(dy, cache, gain)
    h = 1e-6
    numeric = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        numeric[idx] = np.sum((layers.layer_norm_forward(xp, gain, bias)[0] - layers.layer_norm_forward(xm, gain, bias)[0]) * dy) / (2 * h)
    assert np.allclose(dx, numeric, rtol=1e-5, atol=1e-7)
    assert np.allclose(grads["bias"], dy.sum(axis=0))
