"""
Published weight snapshots.

The learner publishes a frozen copy of its parameters; actors hold a
reference to one snapshot per forward pass and swap it at decision
boundaries. Publishing replaces the board's reference under a lock, so a
reader sees either the old or the new snapshot, never a mix.
"""

import threading
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from la_tools import get_logger
from learner.qnetwork import NetworkShape, Params, QNetwork

logger = get_logger("WeightBoard")


@dataclass(frozen=True)
class WeightSnapshot:
    snapshot_id: int
    shape: NetworkShape
    params: Params
    learner_step: int = 0

    @classmethod
    def of(cls, net: QNetwork, snapshot_id: int, learner_step: int = 0) -> "WeightSnapshot":
        params = {}
        for name, value in net.params.items():
            frozen = value.copy()
            frozen.flags.writeable = False
            params[name] = frozen
        return cls(snapshot_id, net.shape, params, learner_step)

    def to_network(self, schema=None) -> QNetwork:
        # forward passes never write to params, read-only arrays are fine
        return QNetwork(self.shape, dict(self.params), schema=schema)


class WeightBoard:
    def __init__(self, initial: Optional[WeightSnapshot] = None):
        self._lock = threading.Lock()
        self._current = initial
        self.published: List[int] = [] if initial is None else [initial.snapshot_id]
        self.adopted: Dict[int, int] = {}

    def publish(self, snapshot: WeightSnapshot):
        with self._lock:
            if self._current is not None and snapshot.snapshot_id <= self._current.snapshot_id:
                raise ValueError(f"snapshot id {snapshot.snapshot_id} does not advance past {self._current.snapshot_id}")
            self._current = snapshot
            self.published.append(snapshot.snapshot_id)

    def latest(self) -> Optional[WeightSnapshot]:
        with self._lock:
            return self._current

    @property
    def latest_id(self) -> int:
        snapshot = self.latest()
        return -1 if snapshot is None else snapshot.snapshot_id

    def report_adopted(self, actor_id: int, snapshot_id: int):
        with self._lock:
            self.adopted[actor_id] = snapshot_id

    def staleness(self) -> Dict[int, int]:
        """Snapshots each actor lags behind the latest publication"""
        with self._lock:
            latest = -1 if self._current is None else self._current.snapshot_id
            return {actor: latest - sid for actor, sid in self.adopted.items()}


def broadcast_weights(board: WeightBoard, net: QNetwork, snapshot_id: int, learner_step: int = 0) -> WeightSnapshot:
    snapshot = WeightSnapshot.of(net, snapshot_id, learner_step)
    board.publish(snapshot)
    logger.info("SNAPSHOT_PUBLISHED", extra=dict(snapshot=snapshot_id, step=learner_step))
    return snapshot


def params_equal(a: Params, b: Params) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)
