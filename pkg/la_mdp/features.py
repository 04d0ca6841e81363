"""
Feature encoding of MDP states.

Flat layout (fixed for a schema):

    node blocks   1 + K_I nodes, serving first, each
                  [site_mimo, site_mmimo, bandwidth_mhz, tx_power_w, cell_radius_m, rsrp_dbm, valid]
    ue block      [rx_type0..rx_type3, n_antennas, max_rank]
    dynamic block [attempt, serving_rsrp_dbm, csi{k}_cqi, csi{k}_rank (k < K_CSI), avg_cqi,
                   buffer_norm, expected_se, harq{k} (k < K_H), la{k}_mcs, la{k}_rank (k < K_LA)]

Every feature is min-max normalized to [-1, 1] with the schema bounds and
clipped. Absent neighbor slots are all zeros, so their valid flag reads 0
while a present node reads 1. The graph view is sliced out of the flat
vector, so replay only ever stores flat vectors.
"""

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np

from la_config import MdpSettings
from la_mdp.state import MDP, MdpState
from radio_sim.mcs_table import CQI_SE, MAX_RANK, N_MCS
from radio_sim.scenario import ReceiverType, SiteType

SCHEMA_VERSION = 1

NODE_FEATURES = ("site_mimo", "site_mmimo", "bandwidth_mhz", "tx_power_w", "cell_radius_m", "rsrp_dbm")
RSRP_BOUNDS = (-140.0, -44.0)

_NODE_BOUNDS = {
    "site_mimo": (0.0, 1.0),
    "site_mmimo": (0.0, 1.0),
    "bandwidth_mhz": (20.0, 100.0),
    "tx_power_w": (20.0, 100.0),
    "cell_radius_m": (166.0, 1200.0),
    "rsrp_dbm": RSRP_BOUNDS,
    "valid": (0.0, 1.0),
}


class EncodingMode(str, Enum):
    FLAT = "flat"
    GRAPH = "graph"


class SchemaMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GraphInput:
    nodes: np.ndarray  # (..., n_nodes, node_features)
    mask: np.ndarray  # (..., n_nodes) bool, serving node always set
    edge_weights: np.ndarray  # (..., n_nodes) in [0, 1], 0 where masked
    dynamic: np.ndarray  # (..., n_dynamic)


@dataclass(frozen=True)
class FeatureSchema:
    names: Tuple[str, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    n_nodes: int = 0
    node_width: int = 0
    params: Dict[str, float] = field(default_factory=dict, hash=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def has_graph(self) -> bool:
        return self.n_nodes > 0

    @property
    def node_features(self) -> int:
        """Node attributes without the valid flag"""
        return self.node_width - 1

    @property
    def graph_width(self) -> int:
        return self.n_nodes * self.node_width

    def manifest(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "names": list(self.names),
            "bounds": [[lo, hi] for lo, hi in zip(self.lower, self.upper)],
            "n_nodes": self.n_nodes,
            "node_width": self.node_width,
            "params": dict(self.params),
        }

    @property
    def schema_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.manifest(), sort_keys=True).encode("utf-8")).hexdigest()

    @classmethod
    def from_manifest(cls, manifest: dict) -> "FeatureSchema":
        if manifest.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatchError(f"Unsupported feature schema version: {manifest.get('schema_version')}")
        bounds = manifest["bounds"]
        return cls(
            names=tuple(manifest["names"]),
            lower=tuple(float(b[0]) for b in bounds),
            upper=tuple(float(b[1]) for b in bounds),
            n_nodes=int(manifest["n_nodes"]),
            node_width=int(manifest["node_width"]),
            params=dict(manifest.get("params", {})),
        )

    def save_manifest(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump({**self.manifest(), "hash": self.schema_hash}, f, indent=2)

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.clip(2.0 * (np.asarray(raw, dtype=float) - lo) / (hi - lo) - 1.0, -1.0, 1.0)

    def split_graph(self, x: np.ndarray) -> GraphInput:
        """Graph view of (a batch of) flat vectors"""
        if not self.has_graph:
            raise SchemaMismatchError("feature schema has no graph block")
        x = np.asarray(x, dtype=float)
        blocks = x[..., : self.graph_width].reshape(x.shape[:-1] + (self.n_nodes, self.node_width))
        nodes = blocks[..., :-1]
        mask = blocks[..., -1] > 0.5
        rsrp = nodes[..., NODE_FEATURES.index("rsrp_dbm")]
        edge_weights = np.where(mask, (rsrp + 1.0) / 2.0, 0.0)
        return GraphInput(nodes=nodes, mask=mask, edge_weights=edge_weights, dynamic=x[..., self.graph_width :])


def la_feature_schema(settings: MdpSettings | None = None) -> FeatureSchema:
    s = settings or MDP
    names: List[str] = []
    bounds: List[Tuple[float, float]] = []

    def add(name, lo_hi):
        names.append(name)
        bounds.append(lo_hi)

    for i in range(1 + s.k_interferers):
        for feat in NODE_FEATURES + ("valid",):
            add(f"node{i}_{feat}", _NODE_BOUNDS[feat])
    for rx in ReceiverType:
        add(f"ue_rx_{rx.value}", (0.0, 1.0))
    add("ue_n_antennas", (2.0, 4.0))
    add("ue_max_rank", (2.0, float(MAX_RANK)))
    add("attempt", (1.0, 5.0))
    add("serving_rsrp_dbm", RSRP_BOUNDS)
    for k in range(s.k_csi):
        add(f"csi{k}_cqi", (-1.0, 15.0))
        add(f"csi{k}_rank", (-1.0, float(MAX_RANK)))
    add("avg_cqi", (-1.0, 15.0))
    add("buffer_norm", (0.0, float(s.n_tti_cap)))
    add("expected_se", (0.0, float(CQI_SE[-1])))
    for k in range(s.k_harq):
        add(f"harq{k}", (-1.0, 1.0))
    for k in range(s.k_la):
        add(f"la{k}_mcs", (-1.0, float(N_MCS - 1)))
        add(f"la{k}_rank", (-1.0, float(MAX_RANK)))

    return FeatureSchema(
        names=tuple(names),
        lower=tuple(b[0] for b in bounds),
        upper=tuple(b[1] for b in bounds),
        n_nodes=1 + s.k_interferers,
        node_width=len(NODE_FEATURES) + 1,
        params=dict(k_interferers=s.k_interferers, k_csi=s.k_csi, k_harq=s.k_harq, k_la=s.k_la, aging_window=s.aging_window, n_tti_cap=s.n_tti_cap),
    )


def _node_raw(cell) -> List[float]:
    return [
        float(cell.site_type == SiteType.MIMO),
        float(cell.site_type == SiteType.MMIMO),
        cell.bandwidth_mhz,
        cell.tx_power_w,
        cell.cell_radius_m,
        cell.rsrp_dbm,
        1.0,
    ]


def encode_flat(state: MdpState, schema: FeatureSchema) -> np.ndarray:
    n_nodes = schema.n_nodes
    raw: List[float] = []
    present = [state.serving, *state.neighbors[: n_nodes - 1]]
    for cell in present:
        raw.extend(_node_raw(cell))
    raw.extend([0.0] * schema.node_width * (n_nodes - len(present)))

    raw.extend(float(state.ue.receiver_type == rx) for rx in ReceiverType)
    raw.extend([state.ue.n_antennas, state.ue.max_rank])
    raw.extend([state.attempt, state.serving_rsrp_dbm])
    for cqi, rank in state.csi_history:
        raw.extend([cqi, rank])
    raw.extend([state.rank_weighted_avg_cqi, state.buffer_norm, state.expected_se])
    raw.extend(state.harq_history)
    for mcs, rank in state.la_history:
        raw.extend([mcs, rank])

    if len(raw) != schema.size:
        raise SchemaMismatchError(f"state encodes to {len(raw)} features, schema expects {schema.size}")
    x = schema.normalize(np.asarray(raw, dtype=float))
    # absent nodes stay all-zero
    x[len(present) * schema.node_width : schema.graph_width] = 0.0
    return x


def encode_features(state: MdpState, mode: EncodingMode | str = EncodingMode.FLAT, schema: FeatureSchema | None = None):
    schema = schema or la_feature_schema()
    x = encode_flat(state, schema)
    if EncodingMode(mode) == EncodingMode.FLAT:
        return x
    return schema.split_graph(x)


def terminal_features(schema: FeatureSchema) -> np.ndarray:
    return np.zeros(schema.size)
