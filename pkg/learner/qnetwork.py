"""
Q-network over encoded LA states.

Variants:
    mlp  - ReLU MLP on the flat vector
    gcn  - single GCN layer on the UE-centric graph, star readout, MLP on [readout || dynamic]
    gat  - same with a single graph-attention layer

Hidden layers apply LayerNorm before the activation when enabled. Parameters
live in a flat name -> array dict so snapshots, target copies, checkpoints and
the optimizer all work on the same structure.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from la_config import NetworkSettings
from la_mdp.features import FeatureSchema
from learner import layers
from radio_sim.mcs_table import N_MCS

Params = Dict[str, np.ndarray]

# (hidden_layers, hidden_units, layer_norm)
ARCHITECTURE_GRID: Tuple[Tuple[int, int, bool], ...] = (
    (6, 128, False),
    (6, 128, True),
    (3, 256, False),
    (3, 256, True),
    (2, 512, False),
    (6, 256, True),
    (6, 512, True),
    (4, 1024, True),
)


def arch_label(hidden_layers: int, hidden_units: int, layer_norm: bool) -> str:
    return f"{hidden_layers}Lx{hidden_units}" + (" (LN)" if layer_norm else "")


@dataclass(frozen=True)
class NetworkShape:
    variant: str
    n_inputs: int
    hidden_layers: int
    hidden_units: int
    layer_norm: bool
    gnn_units: int = 32
    n_nodes: int = 0
    node_features: int = 0
    n_dynamic: int = 0
    n_outputs: int = N_MCS
    leaky_slope: float = 0.2
    layer_norm_eps: float = 1e-9

    @classmethod
    def from_settings(cls, settings: NetworkSettings, schema: FeatureSchema, **overrides) -> "NetworkShape":
        values = dict(
            variant=settings.variant,
            n_inputs=schema.size,
            hidden_layers=settings.hidden_layers,
            hidden_units=settings.hidden_units,
            layer_norm=settings.layer_norm,
            gnn_units=settings.gnn_units,
            n_nodes=schema.n_nodes,
            node_features=schema.node_features,
            n_dynamic=schema.size - schema.graph_width,
            leaky_slope=settings.leaky_slope,
            layer_norm_eps=settings.layer_norm_eps,
        )
        values.update(overrides)
        shape = cls(**values)
        if shape.variant != "mlp" and shape.n_nodes == 0:
            raise ValueError(f"variant {shape.variant} needs a feature schema with a graph block")
        return shape

    @property
    def mlp_inputs(self) -> int:
        return self.n_inputs if self.variant == "mlp" else 2 * self.gnn_units + self.n_dynamic


def param_count(shape: NetworkShape) -> int:
    """Closed-form parameter count"""
    h = shape.hidden_units
    count = shape.mlp_inputs * h + h
    count += (shape.hidden_layers - 1) * (h * h + h)
    if shape.layer_norm:
        count += 2 * h * shape.hidden_layers
    count += h * shape.n_outputs + shape.n_outputs
    if shape.variant == "gcn":
        count += shape.node_features * shape.gnn_units
    elif shape.variant == "gat":
        count += shape.node_features * shape.gnn_units + 2 * shape.gnn_units
    return count


def init_params(shape: NetworkShape, rng: np.random.Generator) -> Params:
    """He-uniform weights, zero biases, LayerNorm gains 1"""
    params: Params = {}
    if shape.variant in ("gcn", "gat"):
        params["gnn.W"] = layers.he_uniform(rng, shape.node_features, (shape.node_features, shape.gnn_units))
    if shape.variant == "gat":
        params["gnn.a"] = layers.he_uniform(rng, shape.gnn_units, (2 * shape.gnn_units,))
    fan_in = shape.mlp_inputs
    for i in range(shape.hidden_layers):
        params[f"mlp.{i}.W"] = layers.he_uniform(rng, fan_in, (fan_in, shape.hidden_units))
        params[f"mlp.{i}.b"] = np.zeros(shape.hidden_units)
        if shape.layer_norm:
            params[f"mlp.{i}.ln_gain"] = np.ones(shape.hidden_units)
            params[f"mlp.{i}.ln_bias"] = np.zeros(shape.hidden_units)
        fan_in = shape.hidden_units
    params["out.W"] = layers.he_uniform(rng, fan_in, (fan_in, shape.n_outputs))
    params["out.b"] = np.zeros(shape.n_outputs)
    return params


@dataclass
class ForwardCache:
    gnn: Optional[tuple]
    readout: Optional[tuple]
    hidden: List[tuple]
    out_x: np.ndarray


class QNetwork:
    def __init__(self, shape: NetworkShape, params: Params | None = None, seed: int = 0, schema: FeatureSchema | None = None):
        self.shape = shape
        self.schema = schema
        self.params: Params = params if params is not None else init_params(shape, np.random.default_rng(seed))

    @classmethod
    def build(cls, schema: FeatureSchema, settings: NetworkSettings | None = None, seed: int = 0, **overrides) -> "QNetwork":
        settings = settings or NetworkSettings.from_config()
        return cls(NetworkShape.from_settings(settings, schema, **overrides), seed=seed, schema=schema)

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "QNetwork":
        return QNetwork(self.shape, {k: v.copy() for k, v in self.params.items()}, schema=self.schema)

    def _graph(self, x: np.ndarray):
        s = self.shape
        width = s.n_nodes * (s.node_features + 1)
        blocks = x[:, :width].reshape(x.shape[0], s.n_nodes, s.node_features + 1)
        nodes = blocks[..., :-1]
        mask = blocks[..., -1] > 0.5
        # rsrp is the last node attribute
        edge_weights = np.where(mask, (nodes[..., -1] + 1.0) / 2.0, 0.0)
        return nodes, mask, edge_weights, x[:, width:]

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
        s = self.shape
        p = self.params
        x = np.atleast_2d(np.asarray(x, dtype=float))
        gnn_cache = readout_cache = None
        if s.variant == "mlp":
            h = x
        else:
            nodes, mask, edge_weights, dynamic = self._graph(x)
            if s.variant == "gcn":
                emb, gnn_cache = layers.gcn_forward(nodes, edge_weights, mask, p["gnn.W"])
            else:
                emb, gnn_cache = layers.gat_forward(nodes, mask, p["gnn.W"], p["gnn.a"], s.leaky_slope)
            pooled, readout_cache = layers.star_readout_forward(emb, mask)
            h = np.concatenate([pooled, dynamic], axis=-1)

        hidden = []
        for i in range(s.hidden_layers):
            z, lin_cache = layers.linear_forward(h, p[f"mlp.{i}.W"], p[f"mlp.{i}.b"])
            ln_cache = None
            if s.layer_norm:
                z, ln_cache = layers.layer_norm_forward(z, p[f"mlp.{i}.ln_gain"], p[f"mlp.{i}.ln_bias"], s.layer_norm_eps)
            h, act_cache = layers.relu_forward(z)
            hidden.append((lin_cache, ln_cache, act_cache))
        q, out_x = layers.linear_forward(h, p["out.W"], p["out.b"])
        return q, ForwardCache(gnn_cache, readout_cache, hidden, out_x)

    def backward(self, dq: np.ndarray, cache: ForwardCache) -> Params:
        s = self.shape
        p = self.params
        grads: Params = {}
        dh, g = layers.linear_backward(dq, cache.out_x, p["out.W"])
        grads["out.W"], grads["out.b"] = g["W"], g["b"]
        for i in reversed(range(s.hidden_layers)):
            lin_cache, ln_cache, act_cache = cache.hidden[i]
            dz = layers.relu_backward(dh, act_cache)
            if s.layer_norm:
                dz, g = layers.layer_norm_backward(dz, ln_cache, p[f"mlp.{i}.ln_gain"])
                grads[f"mlp.{i}.ln_gain"], grads[f"mlp.{i}.ln_bias"] = g["gain"], g["bias"]
            dh, g = layers.linear_backward(dz, lin_cache, p[f"mlp.{i}.W"])
            grads[f"mlp.{i}.W"], grads[f"mlp.{i}.b"] = g["W"], g["b"]

        if s.variant != "mlp":
            d_pooled = dh[:, : 2 * s.gnn_units]
            d_emb = layers.star_readout_backward(d_pooled, cache.readout)
            if s.variant == "gcn":
                grads["gnn.W"] = layers.gcn_backward(d_emb, cache.gnn)["W"]
            else:
                g = layers.gat_backward(d_emb, cache.gnn, p["gnn.W"], p["gnn.a"], s.leaky_slope)
                grads["gnn.W"], grads["gnn.a"] = g["W"], g["a"]
        return grads

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward_q(self, x)


def forward_q(net: QNetwork, encoded_state: np.ndarray) -> np.ndarray:
    """Q-values of every MCS; a single state gives shape (28,), a batch (B, 28)"""
    x = np.asarray(encoded_state, dtype=float)
    q, _ = net.forward(x)
    return q[0] if x.ndim == 1 else q


def gcn_forward(h0: np.ndarray, edge_weights: np.ndarray, mask: np.ndarray | None, W: np.ndarray) -> np.ndarray:
    mask = np.ones(np.shape(edge_weights), dtype=bool) if mask is None else mask
    return layers.gcn_forward(h0, edge_weights, mask, W)[0]


def gat_forward(h0: np.ndarray, mask: np.ndarray, W: np.ndarray, a: np.ndarray, slope: float = 0.2) -> np.ndarray:
    return layers.gat_forward(h0, mask, W, a, slope)[0]
