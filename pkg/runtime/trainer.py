"""
Training orchestration.

threaded: one thread per actor, one ingest thread draining the bounded
          ingestion queue into replay, the learner with its prefetch thread,
          and periodic run-stats / replay-audit writers.
sync:     a single thread alternates one round of every actor (in actor
          order) with learner steps. With fixed seeds the run, and so every
          checkpoint, is reproducible bit for bit.
"""

import configparser
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, List, Literal, Optional

from channel_logger import ChannelLogger
from la_config import (
    ActorSettings,
    LearnerSettings,
    MdpSettings,
    NetworkSettings,
    OptimizerSettings,
    ReplaySettings,
    RunStatsSettings,
    SimSettings,
)
from la_mdp.environment import LaEnvironment
from la_mdp.features import FeatureSchema, la_feature_schema
from la_tools import get_logger
from learner.qnetwork import QNetwork
from radio_sim.scenario import ScenarioConfig
from replay.memory import ReplayMemory
from runtime.actor import ActorHandle, EnvFactory, actor_round, run_actor, scenario_envs
from runtime.learner_loop import Learner, run_learner
from runtime.queues import BoundedQueue, QueueClosed
from runtime.stats import PeriodicTask, RunStats
from runtime.weights import WeightBoard

logger = get_logger("Trainer")

ScenarioStream = Callable[[], Iterator[ScenarioConfig]]


@dataclass
class TrainingConfig:
    actors: ActorSettings
    learner: LearnerSettings
    replay: ReplaySettings
    network: NetworkSettings
    optimizer: OptimizerSettings
    mdp: MdpSettings
    sim: SimSettings
    run_stats: RunStatsSettings

    @classmethod
    def from_config(cls, cfg: Optional[configparser.ConfigParser] = None) -> "TrainingConfig":
        return cls(
            actors=ActorSettings.from_config(cfg),
            learner=LearnerSettings.from_config(cfg),
            replay=ReplaySettings.from_config(cfg),
            network=NetworkSettings.from_config(cfg),
            optimizer=OptimizerSettings.from_config(cfg),
            mdp=MdpSettings.from_config(cfg),
            sim=SimSettings.from_config(cfg),
            run_stats=RunStatsSettings.from_config(cfg),
        )

    def override(self, **sections) -> "TrainingConfig":
        """`override(mdp=dict(alpha=2.0))` returns a copy with updated section fields"""
        values = dict(self.__dict__)
        for name, updates in sections.items():
            values[name] = getattr(self, name).model_copy(update=updates)
        return TrainingConfig(**values)


@dataclass
class TrainingRun:
    learner: Learner
    memory: ReplayMemory
    actors: List[ActorHandle]
    stats: RunStats
    board: WeightBoard
    audit_rows: List[dict] = field(default_factory=list)
    final_checkpoint: Optional[Path] = None

    @property
    def net(self) -> QNetwork:
        return self.learner.net

    def conservation(self) -> dict:
        """Transitions emitted by actors versus inserted, still buffered locally, and dropped by timeout"""
        return dict(
            emitted=sum(a.emitted for a in self.actors),
            inserted=self.stats.inserted_transitions,
            local=sum(len(a.local_buffer) for a in self.actors),
            dropped_by_timeout=sum(a.discarded for a in self.actors),
        )


def _env_builder(schema: FeatureSchema, tc: TrainingConfig, alpha: float):
    def build(cfg: ScenarioConfig) -> LaEnvironment:
        return LaEnvironment(cfg, schema=schema, alpha=alpha, settings=tc.mdp, sim_settings=tc.sim)

    return build


def _audit(memory: ReplayMemory, stats: RunStats, channel_logger: Optional[ChannelLogger], rows: List[dict]):
    elapsed = round(stats.clock() - stats.started, 3)
    batch_rows = memory.audit()
    sizes = [r["size"] for r in batch_rows]
    for row in batch_rows:
        row.update(elapsed_s=elapsed, imbalance=max(sizes) - min(sizes))
        rows.append(row)
        if channel_logger is not None:
            channel_logger.log_to_replay(row)
    if channel_logger is not None:
        channel_logger.flush_buffer(ChannelLogger.REPLAY)


def build_run(
    scenarios: ScenarioStream,
    tc: TrainingConfig,
    seed: int = 0,
    out_dir: Optional[str | Path] = None,
    channel_logger: Optional[ChannelLogger] = None,
    schema: Optional[FeatureSchema] = None,
    memory=None,
    alpha: Optional[float] = None,
    env_factory_for: Optional[Callable[[int], EnvFactory]] = None,
) -> TrainingRun:
    """`env_factory_for(actor_id)` replaces the scenario-stream environments (e.g. the bandit task)"""
    schema = schema or la_feature_schema(tc.mdp)
    alpha = tc.mdp.alpha if alpha is None else alpha
    net = QNetwork.build(schema, tc.network, seed=seed)
    memory = memory if memory is not None else ReplayMemory(tc.replay, seed=seed)
    board = WeightBoard()
    stats = RunStats(channel_logger)
    learner = Learner(net, memory, schema, tc.learner, tc.optimizer, tc.network, board, stats, out_dir, channel_logger)
    build = _env_builder(schema, tc, alpha)
    n = tc.actors.n_actors
    factories = [env_factory_for(i) if env_factory_for is not None else scenario_envs(scenarios, i, n, build) for i in range(n)]
    actors = [ActorHandle.create(i, n, factories[i], tc.actors, seed=seed * 1000 + i) for i in range(n)]
    logger.info(
        "RUN_BUILT",
        extra=dict(actors=n, slots=tc.actors.env_slots, shards=tc.replay.n_shards, variant=tc.network.variant, params=net.n_params, alpha=alpha),
    )
    return TrainingRun(learner, memory, actors, stats, board)


def train(
    scenarios: ScenarioStream,
    tc: Optional[TrainingConfig] = None,
    mode: Literal["threaded", "sync"] = "threaded",
    seed: int = 0,
    out_dir: Optional[str | Path] = None,
    max_learner_steps: Optional[int] = None,
    max_seconds: Optional[float] = None,
    max_rounds: Optional[int] = None,
    learner_steps_per_round: int = 1,
    channel_logger: Optional[ChannelLogger] = None,
    memory=None,
    alpha: Optional[float] = None,
    schema: Optional[FeatureSchema] = None,
    env_factory_for: Optional[Callable[[int], EnvFactory]] = None,
) -> TrainingRun:
    tc = tc or TrainingConfig.from_config()
    if max_learner_steps is None and max_seconds is None and max_rounds is None:
        raise ValueError("training needs a stopping condition")
    run = build_run(scenarios, tc, seed, out_dir, channel_logger, schema=schema, memory=memory, alpha=alpha, env_factory_for=env_factory_for)
    if mode == "sync":
        _train_sync(run, max_learner_steps, max_rounds, learner_steps_per_round, channel_logger)
    elif mode == "threaded":
        _train_threaded(run, tc, max_learner_steps, max_seconds, max_rounds, channel_logger)
    else:
        raise ValueError(f"Unknown training mode: {mode}")
    run.final_checkpoint = run.learner.save("final.npz")
    _audit(run.memory, run.stats, channel_logger, run.audit_rows)
    run.stats.tick()
    run.stats.flush()
    if channel_logger is not None:
        channel_logger.flush_all_buffers()
    logger.info("TRAINING_FINISHED", extra=dict(steps=run.learner.step, snapshot=run.learner.snapshot_id, **run.conservation()))
    return run


def _train_sync(run: TrainingRun, max_steps: Optional[int], max_rounds: Optional[int], steps_per_round: int, channel_logger):
    def sink(actor_id, batch):
        run.memory.insert_batch(actor_id, batch)
        run.stats.record_batch(actor_id, len(batch))
        run.stats.record_inserted(len(batch))

    rounds = 0
    while (max_rounds is None or rounds < max_rounds) and (max_steps is None or run.learner.step < max_steps):
        for handle in run.actors:
            actor_round(handle, sink, run.board, channel_logger, run.stats)
        for lag in run.board.staleness().values():
            run.stats.record_staleness(lag)
        for _ in range(steps_per_round):
            if run.learner.train_step() is None:
                break
            if max_steps is not None and run.learner.step >= max_steps:
                break
        rounds += 1


def _train_threaded(run: TrainingRun, tc: TrainingConfig, max_steps, max_seconds, max_rounds, channel_logger):
    stop = threading.Event()
    ingest: BoundedQueue[tuple] = BoundedQueue(tc.actors.ingest_queue_depth)

    def sink(actor_id, batch):
        ingest.put((actor_id, batch))
        run.stats.record_batch(actor_id, len(batch))

    def ingest_loop():
        try:
            while True:
                item = ingest.get(timeout=0.1)
                if item is None:
                    if stop.is_set():
                        return
                    continue
                actor_id, batch = item
                run.memory.insert_batch(actor_id, batch)
                run.stats.record_inserted(len(batch))
        except QueueClosed:
            return

    def poll_staleness():
        for lag in run.board.staleness().values():
            run.stats.record_staleness(lag)

    def actor_main(handle):
        try:
            run_actor(handle, sink, run.board, stop, max_rounds, channel_logger, run.stats)
        except QueueClosed:
            pass

    threads = [threading.Thread(target=ingest_loop, name="ingest", daemon=True)]
    threads += [threading.Thread(target=actor_main, args=(h,), name=f"actor{h.actor_id}", daemon=True) for h in run.actors]
    periodic = [
        PeriodicTask("run-stats", tc.run_stats.interval_s, lambda: (run.stats.tick(), run.stats.flush())),
        PeriodicTask("replay-audit", tc.run_stats.audit_interval_s, lambda: _audit(run.memory, run.stats, channel_logger, run.audit_rows)),
        PeriodicTask("staleness", tc.actors.snapshot_poll_s, poll_staleness),
    ]
    learner_thread = threading.Thread(target=run_learner, args=(run.learner, stop, max_steps), name="learner", daemon=True)
    for t in threads + periodic:
        t.start()
    learner_thread.start()

    deadline = None if max_seconds is None else time.monotonic() + max_seconds
    try:
        while not stop.is_set():
            if deadline is not None and time.monotonic() >= deadline:
                break
            if max_rounds is not None and not any(t.is_alive() for t in threads[1:]):
                break
            stop.wait(0.2)
    finally:
        stop.set()
        ingest.close()
        for t in threads + [learner_thread]:
            t.join(timeout=10.0)
        _drain(ingest, run)
        for task in periodic:
            task.stop()


def _drain(ingest: BoundedQueue, run: TrainingRun):
    """Insert batches still queued after the ingest thread stopped"""
    try:
        while True:
            item = ingest.get(timeout=0)
            if item is None:
                return
            actor_id, batch = item
            run.memory.insert_batch(actor_id, batch)
            run.stats.record_inserted(len(batch))
    except QueueClosed:
        return
