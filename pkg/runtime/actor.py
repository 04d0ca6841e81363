"""
Actors: epsilon_i-greedy interaction with several environment slots.

Each round visits the slots in a fixed order. A slot observes its decision
points, picks one MCS per decision with the actor's current snapshot, steps
its simulation and hands closed transitions to the local buffer. The buffer
is pushed as one batch exactly when it holds `local_buffer` transitions.
An exception inside a slot is contained to that slot: it is logged, counted
and the slot is rebuilt from the actor's scenario stream.
"""

import itertools
import threading
import traceback
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional

import numpy as np

from channel_logger import ChannelLogger
from la_config import ActorSettings
from la_mdp.environment import ActorEnvironment
from la_mdp.episodes import Transition
from la_tools import get_logger
from learner.exploration import epsilon_for_actor, epsilon_greedy
from learner.qnetwork import QNetwork, forward_q
from radio_sim.mcs_table import N_MCS
from runtime.stats import RunStats
from runtime.weights import WeightBoard

logger = get_logger("Actor")

BatchSink = Callable[[int, List[Transition]], None]
EnvFactory = Callable[[], ActorEnvironment]


@dataclass
class EnvSlot:
    index: int
    env: Optional[ActorEnvironment]
    crashes: int = 0
    episodes: int = 0


@dataclass
class ActorHandle:
    actor_id: int
    epsilon: float
    env_factory: EnvFactory
    local_buffer_size: int = 500
    seed: int = 0
    snapshot_id: int = -1
    net: Optional[QNetwork] = None
    slots: List[EnvSlot] = field(default_factory=list)
    local_buffer: List[Transition] = field(default_factory=list)
    rng: np.random.Generator = field(default=None)
    emitted: int = 0
    pushed: int = 0
    discarded: int = 0
    decisions: int = 0

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    @classmethod
    def create(
        cls,
        actor_id: int,
        n_actors: int,
        env_factory: EnvFactory,
        settings: Optional[ActorSettings] = None,
        seed: int = 0,
        epsilon: Optional[float] = None,
    ) -> "ActorHandle":
        settings = settings or ActorSettings.from_config()
        if epsilon is None:
            epsilon = epsilon_for_actor(actor_id, n_actors, settings.epsilon_base, settings.epsilon_alpha)
        handle = cls(actor_id, epsilon, env_factory, settings.local_buffer, seed=seed)
        handle.slots = [EnvSlot(i, None) for i in range(settings.env_slots)]
        return handle

    def adopt(self, board: WeightBoard) -> bool:
        """Swap to the latest published snapshot; True when it changed"""
        snapshot = board.latest()
        if snapshot is None or snapshot.snapshot_id == self.snapshot_id:
            return False
        self.net = snapshot.to_network()
        self.snapshot_id = snapshot.snapshot_id
        board.report_adopted(self.actor_id, self.snapshot_id)
        return True


def scenario_envs(stream_factory: Callable[[], Iterator], actor_id: int, n_actors: int, build: Callable) -> EnvFactory:
    """Env factory over the actor's stride of a reproducible scenario stream, restarted when exhausted"""
    state = {"it": None}

    def next_env():
        for _ in range(2):
            if state["it"] is None:
                state["it"] = itertools.islice(stream_factory(), actor_id, None, n_actors)
            try:
                return build(next(state["it"]))
            except StopIteration:
                state["it"] = None
        raise RuntimeError(f"scenario stream is empty for actor {actor_id}")

    return next_env


def _step_slot(handle: ActorHandle, slot: EnvSlot) -> List[Transition]:
    if slot.env is None or slot.env.done:
        if slot.env is not None:
            slot.episodes += 1
            handle.discarded += _open_entries(slot.env)
        slot.env = handle.env_factory()
    env = slot.env
    before = env.tracker.stats.discarded_awaiting
    obs = env.observe()
    if obs.decisions:
        if handle.net is None:
            actions = handle.rng.integers(0, N_MCS, size=len(obs.decisions))
        else:
            actions = epsilon_greedy(forward_q(handle.net, obs.features), handle.epsilon, handle.rng)
        handle.decisions += len(obs.decisions)
        env.act([int(a) for a in actions], handle.snapshot_id)
    else:
        env.act([], handle.snapshot_id)
    transitions = env.drain_transitions()
    for t in transitions:
        t.actor_id = handle.actor_id
    handle.discarded += env.tracker.stats.discarded_awaiting - before
    return transitions


def _open_entries(env: ActorEnvironment) -> int:
    """Transitions still waiting when an episode ends are never emitted"""
    return len(env.tracker.awaiting)


def actor_round(
    handle: ActorHandle,
    sink: BatchSink,
    board: Optional[WeightBoard] = None,
    channel_logger: Optional[ChannelLogger] = None,
    stats: Optional[RunStats] = None,
) -> int:
    """One pass over every slot; returns the number of batches pushed"""
    if board is not None:
        handle.adopt(board)
    pushed = 0
    for slot in handle.slots:
        discarded = handle.discarded
        try:
            transitions = _step_slot(handle, slot)
        except Exception as e:
            slot.crashes += 1
            slot.env = None
            if stats is not None:
                stats.record_crash(handle.actor_id)
            logger.error("ENV_SLOT_CRASHED", extra=dict(actor=handle.actor_id, slot=slot.index, error=str(e)))
            if channel_logger is not None:
                channel_logger.log_error(f"actor {handle.actor_id} slot {slot.index}: {e}", traceback.format_exc())
            continue
        finally:
            if stats is not None and handle.discarded > discarded:
                stats.record_dropped(handle.discarded - discarded)
        handle.emitted += len(transitions)
        handle.local_buffer.extend(transitions)
        while len(handle.local_buffer) >= handle.local_buffer_size:
            batch = handle.local_buffer[: handle.local_buffer_size]
            sink(handle.actor_id, batch)
            handle.local_buffer = handle.local_buffer[handle.local_buffer_size :]
            handle.pushed += len(batch)
            pushed += 1
    return pushed


def run_actor(
    handle: ActorHandle,
    sink: BatchSink,
    board: WeightBoard,
    stop: threading.Event,
    max_rounds: Optional[int] = None,
    channel_logger: Optional[ChannelLogger] = None,
    stats: Optional[RunStats] = None,
):
    """Actor loop for a worker thread"""
    logger.info("ACTOR_STARTED", extra=dict(actor=handle.actor_id, epsilon=f"{handle.epsilon:.3g}", slots=len(handle.slots)))
    rounds = 0
    while not stop.is_set() and (max_rounds is None or rounds < max_rounds):
        actor_round(handle, sink, board, channel_logger, stats)
        rounds += 1
        if all(slot.crashes > 0 and slot.env is None for slot in handle.slots) and rounds > 1:
            # all slots down
            stop.wait(0.1)
    logger.info("ACTOR_STOPPED", extra=dict(actor=handle.actor_id, rounds=rounds, emitted=handle.emitted, pushed=handle.pushed))
