"""
Learner: prioritized sampling, TD updates, target refresh and snapshot publication.

Step accounting:
    step % target_update_interval == 0  -> hard target update
    step % publish_interval == 0        -> snapshot id += 1, broadcast
    every checkpoint_every_snapshots    -> checkpoint file
No gradient step happens before `warmup_transitions` transitions are stored.
"""

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Protocol, Sequence

import numpy as np

from channel_logger import ChannelLogger
from la_config import LearnerSettings, NetworkSettings, OptimizerSettings
from la_mdp.features import FeatureSchema
from la_tools import get_logger
from learner.checkpoint import save_checkpoint
from learner.loss import Batch, backward, td_loss
from learner.optimizer import AdamState, adam_step
from learner.qnetwork import QNetwork
from learner.target import TargetNetwork
from replay.memory import InsufficientDataError, SampledBatch
from replay.shard import SampleRef
from runtime.queues import BoundedQueue, QueueClosed
from runtime.stats import RunStats
from runtime.weights import WeightBoard, broadcast_weights

logger = get_logger("Learner")


class ReplayClient(Protocol):
    def __len__(self) -> int: ...

    def sample_batch(self, batch_size: int, replacement: bool = False) -> SampledBatch: ...

    def update_priorities(self, refs: Sequence[SampleRef], new_priorities: Sequence[float]) -> int: ...


@dataclass
class StepResult:
    step: int
    loss: float
    grad_norm: float
    target_updated: bool
    published: bool


class Learner:
    def __init__(
        self,
        net: QNetwork,
        memory: ReplayClient,
        schema: FeatureSchema,
        settings: Optional[LearnerSettings] = None,
        optimizer: Optional[OptimizerSettings] = None,
        network: Optional[NetworkSettings] = None,
        board: Optional[WeightBoard] = None,
        stats: Optional[RunStats] = None,
        out_dir: Optional[str | Path] = None,
        channel_logger: Optional[ChannelLogger] = None,
    ):
        self.settings = settings or LearnerSettings.from_config()
        self.optimizer_settings = optimizer or OptimizerSettings.from_config()
        self.double_dqn = (network or NetworkSettings.from_config()).double_dqn
        self.net = net
        self.memory = memory
        self.schema = schema
        self.board = board or WeightBoard()
        self.stats = stats
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.channel_logger = channel_logger

        self.adam = AdamState.from_settings(self.optimizer_settings, self.settings.batch_size)
        self.target = TargetNetwork(net, self.settings.target_update_interval)
        self.step = 0
        self.snapshot_id = 0
        self.checkpoints: List[Path] = []
        self.losses: List[float] = []
        broadcast_weights(self.board, self.net, self.snapshot_id, self.step)

    @property
    def warmed_up(self) -> bool:
        stored = len(self.memory)
        return stored >= self.settings.warmup_transitions and stored >= self.settings.batch_size

    def sample(self) -> SampledBatch:
        return self.memory.sample_batch(self.settings.batch_size)

    def train_on(self, sampled: SampledBatch) -> tuple[StepResult, np.ndarray]:
        """One gradient step; returns the result and |delta| for the priority update"""
        o = self.optimizer_settings
        batch = Batch.from_transitions(sampled.transitions)
        loss, abs_delta, graph = td_loss(
            batch,
            self.net,
            self.target.net,
            gamma=self.settings.gamma,
            kind=o.loss,
            is_weights=sampled.is_weights,
            huber_delta=o.huber_delta,
            double_dqn=self.double_dqn,
        )
        grads = backward(self.net, graph)
        grad_norm = adam_step(self.net.params, grads, self.adam)
        self.step += 1
        self.losses.append(loss)
        if self.stats is not None:
            self.stats.record_learner_step()

        target_updated = self.target.maybe_update(self.net, self.step)
        if target_updated:
            logger.info("TARGET_UPDATED", extra=dict(step=self.step))
        published = self.step % self.settings.publish_interval == 0
        if published:
            self.publish()
        if self.channel_logger is not None:
            self.channel_logger.log_to_learner(dict(step=self.step, loss=loss, grad_norm=grad_norm, snapshot=self.snapshot_id))
        return StepResult(self.step, loss, grad_norm, target_updated, published), abs_delta

    def train_step(self) -> Optional[StepResult]:
        """Sample, update, write priorities back; None while warming up"""
        if not self.warmed_up:
            return None
        try:
            sampled = self.sample()
        except InsufficientDataError:
            return None
        result, abs_delta = self.train_on(sampled)
        self.memory.update_priorities(sampled.refs, abs_delta)
        return result

    def publish(self):
        self.snapshot_id += 1
        broadcast_weights(self.board, self.net, self.snapshot_id, self.step)
        if self.stats is not None:
            self.stats.record_snapshot()
        every = self.settings.checkpoint_every_snapshots
        if self.out_dir is not None and every > 0 and self.snapshot_id % every == 0:
            self.save()

    def save(self, name: Optional[str] = None) -> Optional[Path]:
        if self.out_dir is None:
            return None
        path = self.out_dir / "checkpoints" / (name or f"snapshot_{self.snapshot_id:06d}.npz")
        path = save_checkpoint(path, self.net, self.schema, self.snapshot_id, self.adam, extra=dict(step=self.step))
        self.checkpoints.append(path)
        return path


class Prefetcher(threading.Thread):
    """
    Keeps up to `depth` sampled batches ready and applies priority updates
    pushed back by the learner before drawing the next batch.
    """

    def __init__(self, learner: Learner, depth: int, stop: threading.Event):
        super().__init__(name="prefetch", daemon=True)
        self.learner = learner
        self.batches: BoundedQueue[SampledBatch] = BoundedQueue(depth)
        self.priority_updates: BoundedQueue[tuple] = BoundedQueue(max(depth * 4, 4))
        self.stop_event = stop

    def _apply_updates(self):
        while True:
            update = self.priority_updates.get(timeout=0)
            if update is None:
                return
            refs, priorities = update
            self.learner.memory.update_priorities(refs, priorities)

    def run(self):
        try:
            while not self.stop_event.is_set():
                self._apply_updates()
                if not self.learner.warmed_up:
                    self.stop_event.wait(0.05)
                    continue
                try:
                    sampled = self.learner.sample()
                except InsufficientDataError:
                    self.stop_event.wait(0.05)
                    continue
                while not self.batches.put(sampled, timeout=0.1):
                    self._apply_updates()
                    if self.stop_event.is_set():
                        return
        except QueueClosed:
            return


def run_learner(learner: Learner, stop: threading.Event, max_steps: Optional[int] = None, prefetch_depth: Optional[int] = None) -> int:
    """Threaded learner loop with a prefetch thread; returns the final step count"""
    prefetcher = Prefetcher(learner, prefetch_depth or learner.settings.prefetch_batches, stop)
    prefetcher.start()
    logger.info("LEARNER_STARTED", extra=dict(warmup=learner.settings.warmup_transitions, batch=learner.settings.batch_size))
    try:
        while not stop.is_set() and (max_steps is None or learner.step < max_steps):
            sampled = prefetcher.batches.get(timeout=0.1)
            if sampled is None:
                continue
            _, abs_delta = learner.train_on(sampled)
            prefetcher.priority_updates.put((sampled.refs, abs_delta))
    except QueueClosed:
        pass
    finally:
        stop.set()
        prefetcher.batches.close()
        prefetcher.priority_updates.close()
        prefetcher.join(timeout=5.0)
    logger.info("LEARNER_STOPPED", extra=dict(step=learner.step, snapshot=learner.snapshot_id))
    return learner.step
