"""
Episodes over HARQ packet lifespans.

An episode starts with the first attempt of a packet and ends on ACK or on the
last allowed attempt. Each attempt's (state, action) waits for its HARQ
feedback; a NACK that is not terminal waits again for the state of the next
attempt. Entries that wait longer than the timeout are discarded and counted,
never emitted with a made-up reward.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from la_mdp.reward import reward, se_on_success

Key = Tuple[int, int]  # (ue, harq process)


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: Optional[np.ndarray]
    done: bool
    initial_priority: Optional[float] = None
    actor_id: int = -1
    snapshot_id: int = -1

    def __post_init__(self):
        if self.initial_priority is not None and not self.initial_priority > 0:
            raise ValueError(f"initial priority must be positive: {self.initial_priority}")
        if self.next_state is None and not self.done:
            raise ValueError("non-terminal transition without next state")


@dataclass
class _Pending:
    state: np.ndarray
    action: int
    attempt: int
    t: int
    snapshot_id: int


@dataclass
class _Awaiting:
    state: np.ndarray
    action: int
    reward: float
    t: int
    snapshot_id: int


@dataclass
class EpisodeStats:
    feedbacks: int = 0
    emitted: int = 0
    discarded_awaiting: int = 0
    discarded_pending: int = 0
    episodes_closed: int = 0
    episode_lengths: Dict[int, int] = field(default_factory=dict)


class EpisodeTracker:
    def __init__(self, alpha: float = 0.5, timeout_tti: int = 100, n_features: int | None = None):
        self.alpha = alpha
        self.timeout_tti = timeout_tti
        self.n_features = n_features
        self.pending: Dict[Key, _Pending] = {}
        self.awaiting: Dict[Key, _Awaiting] = {}
        self.stats = EpisodeStats()
        self._ready: List[Transition] = []

    def on_action(self, key: Key, state: np.ndarray, action: int, attempt: int, t: int, snapshot_id: int = -1):
        if key in self.pending:
            raise RuntimeError(f"packet {key} already has a pending action")
        previous = self.awaiting.pop(key, None)
        if previous is not None:
            self._emit(Transition(previous.state, previous.action, previous.reward, state, False, snapshot_id=previous.snapshot_id))
        self.pending[key] = _Pending(state, int(action), int(attempt), t, snapshot_id)

    def on_feedback(self, key: Key, ack: bool, attempt: int, terminal: bool, tbs_bits: int, n_re_per_attempt, rank: int, t: int):
        pending = self.pending.pop(key, None)
        if pending is None:
            return
        self.stats.feedbacks += 1
        se = se_on_success(tbs_bits, n_re_per_attempt, rank) if ack else 0.0
        r = reward(attempt, ack, se, self.alpha)
        if terminal:
            self._emit(Transition(pending.state, pending.action, r, None, True, snapshot_id=pending.snapshot_id))
            self.stats.episodes_closed += 1
            self.stats.episode_lengths[attempt] = self.stats.episode_lengths.get(attempt, 0) + 1
        else:
            self.awaiting[key] = _Awaiting(pending.state, pending.action, r, t, pending.snapshot_id)

    def expire(self, t: int):
        for key in [k for k, a in self.awaiting.items() if t - a.t > self.timeout_tti]:
            del self.awaiting[key]
            self.stats.discarded_awaiting += 1
        for key in [k for k, p in self.pending.items() if t - p.t > self.timeout_tti]:
            del self.pending[key]
            self.stats.discarded_pending += 1

    def _emit(self, transition: Transition):
        if transition.next_state is None and self.n_features is not None:
            transition.next_state = np.zeros(self.n_features)
        self._ready.append(transition)
        self.stats.emitted += 1

    def drain(self) -> List[Transition]:
        ready, self._ready = self._ready, []
        return ready

    def audit(self) -> bool:
        """Every received feedback is emitted, discarded or still waiting"""
        s = self.stats
        return s.emitted + s.discarded_awaiting + len(self.awaiting) == s.feedbacks
