"""
Weight checkpoints.

A checkpoint is an `.npz` container: flat parameter arrays under `param/`,
optional Adam moments under `adam_m/` and `adam_v/`, and a JSON metadata
string under `__meta__` (container schema id, feature-schema hash and
manifest, network shape, snapshot id, Adam scalars). Loading refuses a
checkpoint whose feature-schema hash differs from the expected one.
"""

import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np

from la_mdp.features import FeatureSchema, SchemaMismatchError
from la_tools import get_logger
from learner.optimizer import AdamState
from learner.qnetwork import NetworkShape, QNetwork

logger = get_logger("Checkpoint")

CHECKPOINT_SCHEMA = "la-qnet/1"


def save_checkpoint(path: str | Path, net: QNetwork, schema: FeatureSchema, snapshot_id: int = 0, adam: Optional[AdamState] = None, extra: Optional[dict] = None) -> Path:
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "schema_id": CHECKPOINT_SCHEMA,
        "feature_schema_hash": schema.schema_hash,
        "feature_schema": schema.manifest(),
        "shape": asdict(net.shape),
        "snapshot_id": int(snapshot_id),
        "extra": extra or {},
    }
    arrays = {f"param/{k}": v for k, v in net.params.items()}
    if adam is not None:
        meta["adam"] = {k: getattr(adam, k) for k in ("lr", "beta1", "beta2", "eps", "weight_decay", "max_grad_norm", "step")}
        arrays.update({f"adam_m/{k}": v for k, v in adam.m.items()})
        arrays.update({f"adam_v/{k}": v for k, v in adam.v.items()})
    arrays["__meta__"] = np.array(json.dumps(meta))
    np.savez(path, **arrays)
    logger.info("CHECKPOINT_SAVED", extra=dict(path=str(path), snapshot=snapshot_id))
    return path


def read_meta(path: str | Path) -> dict:
    with np.load(path, allow_pickle=False) as data:
        return json.loads(str(data["__meta__"]))


def load_checkpoint(path: str | Path, expected_schema: Optional[FeatureSchema] = None, with_adam: bool = False):
    """
    Returns (net, schema, meta) or (net, schema, meta, adam) with `with_adam`.
    Raises SchemaMismatchError when the stored feature-schema hash differs from `expected_schema`.
    """
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("schema_id") != CHECKPOINT_SCHEMA:
            raise SchemaMismatchError(f"Unknown checkpoint schema: {meta.get('schema_id')}")
        schema = FeatureSchema.from_manifest(meta["feature_schema"])
        if schema.schema_hash != meta["feature_schema_hash"]:
            raise SchemaMismatchError("checkpoint manifest does not match its own feature-schema hash")
        if expected_schema is not None and expected_schema.schema_hash != meta["feature_schema_hash"]:
            raise SchemaMismatchError(
                f"feature schema {meta['feature_schema_hash'][:12]} in checkpoint, {expected_schema.schema_hash[:12]} expected"
            )
        params = {k[len("param/") :]: data[k].copy() for k in data.files if k.startswith("param/")}
        net = QNetwork(NetworkShape(**meta["shape"]), params, schema=schema)
        if not with_adam:
            return net, schema, meta
        adam = None
        if "adam" in meta:
            adam = AdamState(**meta["adam"])
            adam.m = {k[len("adam_m/") :]: data[k].copy() for k in data.files if k.startswith("adam_m/")}
            adam.v = {k[len("adam_v/") :]: data[k].copy() for k in data.files if k.startswith("adam_v/")}
        return net, schema, meta, adam
