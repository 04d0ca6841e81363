"""
A prioritized replay shard: circular storage plus a sum tree over p_i^alpha.

All public methods take the shard lock; each holds it for O(log capacity)
per transition touched. Slots carry a generation counter that bumps on every
overwrite, so a sample reference taken before an eviction is recognised as
stale and its priority update is skipped.
"""

import threading
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from la_mdp.episodes import Transition
from replay.sum_tree import MaxTree, MinTree, SumTree


@dataclass(frozen=True)
class SampleRef:
    shard: int
    slot: int
    generation: int


class Shard:
    def __init__(self, shard_id: int, capacity: int, alpha: float = 0.6, priority_eps: float = 1e-3, prioritized_eviction: bool = False):
        self.shard_id = shard_id
        self.capacity = capacity
        self.alpha = alpha
        self.priority_eps = priority_eps
        self.prioritized_eviction = prioritized_eviction
        self.lock = threading.Lock()

        self.storage: List[Optional[Transition]] = [None] * capacity
        self.generation = np.zeros(capacity, dtype=np.int64)
        self.priorities = np.zeros(capacity, dtype=float)
        self.sum_tree = SumTree(capacity)
        self.max_tree = MaxTree(capacity)
        self.min_tree = MinTree(capacity) if prioritized_eviction else None
        self.cursor = 0
        self.size = 0
        self.inserted = 0
        self.evicted = 0

    def __len__(self) -> int:
        return self.size

    def _set_priority(self, slot: int, priority: float):
        self.priorities[slot] = priority
        self.sum_tree.update(slot, priority**self.alpha)
        self.max_tree.update(slot, priority)
        if self.min_tree is not None:
            self.min_tree.update(slot, priority)

    def _next_slot(self) -> int:
        if self.size < self.capacity:
            slot = self.cursor
            self.cursor = (self.cursor + 1) % self.capacity
            self.size += 1
            return slot
        self.evicted += 1
        if self.min_tree is not None:
            return self.min_tree.argmin()
        slot = self.cursor
        self.cursor = (self.cursor + 1) % self.capacity
        return slot

    def max_priority(self) -> float:
        """Bootstrap priority of new transitions: the current maximum, 1.0 when empty"""
        return self.max_tree.root if self.size > 0 else 1.0

    def insert(self, transitions: Sequence[Transition]) -> List[SampleRef]:
        refs = []
        with self.lock:
            for t in transitions:
                priority = t.initial_priority if t.initial_priority is not None else self.max_priority()
                slot = self._next_slot()
                self.generation[slot] += 1
                self.storage[slot] = t
                self._set_priority(slot, priority)
                self.inserted += 1
                refs.append(SampleRef(self.shard_id, slot, int(self.generation[slot])))
        return refs

    def total_priority(self) -> float:
        with self.lock:
            return self.sum_tree.total

    def sample(self, count: int, rng: np.random.Generator, replacement: bool = False) -> List[Tuple[SampleRef, Transition, float]]:
        """
        Draw `count` slots with Pr(slot) = p^alpha / T_shard. Without replacement,
        drawn leaves are zeroed until the batch is complete; when the shard holds
        fewer transitions than `count` the remainder is drawn with replacement.
        Returns (ref, transition, p^alpha) triples.
        """
        out = []
        with self.lock:
            if count <= 0:
                return out
            if self.size == 0:
                raise ValueError(f"shard {self.shard_id} is empty")
            unique = count if replacement else min(count, self.size)
            masked = []
            for k in range(count):
                draw_without = not replacement and k < unique
                slot = self.sum_tree.find_prefix(rng.random() * self.sum_tree.total)
                leaf = self.priorities[slot] ** self.alpha
                out.append((SampleRef(self.shard_id, slot, int(self.generation[slot])), self.storage[slot], leaf))
                if draw_without:
                    masked.append(slot)
                    self.sum_tree.update(slot, 0.0)
                if k + 1 == unique and masked:
                    for s in masked:
                        self.sum_tree.update(s, self.priorities[s] ** self.alpha)
                    masked = []
        return out

    def update(self, ref: SampleRef, priority: float) -> bool:
        """Set a raw priority; False (no-op) when the slot was overwritten since sampling"""
        with self.lock:
            if self.generation[ref.slot] != ref.generation or self.storage[ref.slot] is None:
                return False
            self._set_priority(ref.slot, priority)
            return True

    def audit(self) -> Tuple[float, float]:
        """(tree total, naive sum of p^alpha over stored slots)"""
        with self.lock:
            stored = [i for i in range(self.capacity) if self.storage[i] is not None]
            naive = float(np.sum(self.priorities[stored] ** self.alpha)) if stored else 0.0
            return self.sum_tree.total, naive
