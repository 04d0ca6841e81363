"""
Run statistics: monotone counters sampled into rate rows.

Counters only grow; `tick` turns the deltas since the previous tick into
per-actor batches/minute, learner batches/second and transitions/second,
and records the snapshot staleness seen at that moment.
"""

import threading
import time
from collections import Counter, defaultdict
from typing import Callable, Dict, List, Optional

from channel_logger import ChannelLogger
from la_tools import get_logger, safe_output

logger = get_logger("RunStats")


class RunStats:
    def __init__(self, channel_logger: Optional[ChannelLogger] = None, clock: Callable[[], float] = time.monotonic):
        self.channel_logger = channel_logger
        self.clock = clock
        self._lock = threading.Lock()
        self.started = clock()

        self.actor_batches: Dict[int, int] = defaultdict(int)
        self.actor_transitions: Dict[int, int] = defaultdict(int)
        self.actor_crashes: Dict[int, int] = defaultdict(int)
        self.inserted_transitions = 0
        self.dropped_by_timeout = 0
        self.learner_steps = 0
        self.snapshots_published = 0
        self.staleness = Counter()

        self._last_tick = self.started
        self._last_actor_batches: Dict[int, int] = {}
        self._last_steps = 0
        self._last_transitions = 0
        self.rows: List[dict] = []

    def record_batch(self, actor_id: int, n_transitions: int):
        with self._lock:
            self.actor_batches[actor_id] += 1
            self.actor_transitions[actor_id] += n_transitions

    def record_inserted(self, n_transitions: int):
        with self._lock:
            self.inserted_transitions += n_transitions

    def record_dropped(self, n: int):
        with self._lock:
            self.dropped_by_timeout += n

    def record_crash(self, actor_id: int):
        with self._lock:
            self.actor_crashes[actor_id] += 1

    def record_learner_step(self, n: int = 1):
        with self._lock:
            self.learner_steps += n

    def record_snapshot(self):
        with self._lock:
            self.snapshots_published += 1

    def record_staleness(self, lag: int):
        with self._lock:
            self.staleness[int(lag)] += 1

    @property
    def emitted_transitions(self) -> int:
        with self._lock:
            return sum(self.actor_transitions.values())

    def tick(self) -> List[dict]:
        """One row per actor plus a learner row, rates over the time since the last tick"""
        now = self.clock()
        with self._lock:
            dt = max(now - self._last_tick, 1e-9)
            elapsed = now - self.started
            rows = []
            for actor in sorted(set(self.actor_batches) | set(self.actor_crashes)):
                delta = self.actor_batches[actor] - self._last_actor_batches.get(actor, 0)
                rows.append(
                    dict(
                        elapsed_s=round(elapsed, 3),
                        source=f"actor{actor}",
                        batches=self.actor_batches[actor],
                        batches_per_min=delta * 60.0 / dt,
                        transitions=self.actor_transitions[actor],
                        crashes=self.actor_crashes[actor],
                    )
                )
                self._last_actor_batches[actor] = self.actor_batches[actor]
            emitted = sum(self.actor_transitions.values())
            stale = sorted(self.staleness.elements())
            rows.append(
                dict(
                    elapsed_s=round(elapsed, 3),
                    source="learner",
                    learner_steps=self.learner_steps,
                    batches_per_s=(self.learner_steps - self._last_steps) / dt,
                    transitions_per_s=(emitted - self._last_transitions) / dt,
                    inserted=self.inserted_transitions,
                    dropped_by_timeout=self.dropped_by_timeout,
                    snapshots=self.snapshots_published,
                    staleness_max=stale[-1] if stale else 0,
                    staleness_median=stale[len(stale) // 2] if stale else 0,
                )
            )
            self._last_steps = self.learner_steps
            self._last_transitions = emitted
            self._last_tick = now
            self.rows.extend(rows)
        if self.channel_logger is not None:
            for row in rows:
                self.channel_logger.log_to_actors(row)
        return rows

    @safe_output(default_value=None)
    def flush(self):
        if self.channel_logger is not None:
            self.channel_logger.flush_buffer(ChannelLogger.ACTORS)


class PeriodicTask(threading.Thread):
    """Runs `fn` every `interval_s` seconds until stopped; failures are logged and skipped"""

    def __init__(self, name: str, interval_s: float, fn: Callable[[], None]):
        super().__init__(name=name, daemon=True)
        self.interval_s = interval_s
        self.fn = safe_output()(fn)
        self._stop_event = threading.Event()

    def run(self):
        while not self._stop_event.wait(self.interval_s):
            self.fn()

    def stop(self):
        self._stop_event.set()
        self.fn()
