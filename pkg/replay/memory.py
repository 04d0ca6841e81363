"""
Sharded prioritized replay memory.

A batch is drawn in two stages: shard j with Pr = T_j / sum_k T_k, where T_j
is the shard's sum of p^alpha, then a transition inside the shard with
Pr = p^alpha / T_j. The product is the global prioritized probability
p^alpha / sum_k T_k. Per-shard draw counts use systematic rounding of the
expected counts, which keeps every shard's expected share exact.
"""

import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from la_config import ReplaySettings
from la_mdp.episodes import Transition
from la_tools import get_logger
from replay.shard import SampleRef, Shard

logger = get_logger("ReplayMemory")


class InsufficientDataError(RuntimeError):
    pass


@dataclass
class SampledBatch:
    transitions: List[Transition]
    is_weights: np.ndarray
    refs: List[SampleRef]
    probabilities: np.ndarray


class ReplayMemory:
    def __init__(
        self,
        settings: ReplaySettings | None = None,
        seed: int | None = None,
        fixed_mapping: Optional[Dict[int, int]] = None,
    ):
        self.settings = settings or ReplaySettings.from_config()
        s = self.settings
        self.alpha = s.priority_exponent
        self.beta = s.is_exponent
        self.priority_eps = s.priority_eps
        self.routing = s.routing
        self.fixed_mapping = dict(fixed_mapping or {})
        self.shards = [Shard(j, s.capacity, s.priority_exponent, s.priority_eps, s.prioritized_eviction) for j in range(s.n_shards)]
        self.rng = np.random.default_rng(seed)
        self._route_lock = threading.Lock()
        self._next_shard: Dict[int, int] = {}
        self._batches_sampled = 0
        self._cached_totals: Optional[np.ndarray] = None
        self.batches_inserted = np.zeros(s.n_shards, dtype=np.int64)

    @property
    def n_shards(self) -> int:
        return len(self.shards)

    def __len__(self) -> int:
        return sum(len(shard) for shard in self.shards)

    def sizes(self) -> List[int]:
        return [len(shard) for shard in self.shards]

    def route(self, actor_id: int) -> int:
        """Shard for the actor's next batch"""
        with self._route_lock:
            if self.routing == "fixed":
                return self.fixed_mapping.get(actor_id, actor_id % self.n_shards)
            shard = self._next_shard.get(actor_id, actor_id % self.n_shards)
            self._next_shard[actor_id] = (shard + 1) % self.n_shards
            return shard

    def insert_batch(self, actor_id: int, batch: Sequence[Transition]) -> int:
        if not batch:
            return -1
        shard = self.route(actor_id)
        self.shards[shard].insert(batch)
        with self._route_lock:
            self.batches_inserted[shard] += 1
        return shard

    def total_priority(self, shard: int | None = None) -> float:
        if shard is not None:
            return self.shards[shard].total_priority()
        return float(sum(s.total_priority() for s in self.shards))

    def _shard_totals(self) -> np.ndarray:
        period = max(1, self.settings.refresh_period)
        if self._cached_totals is None or self._batches_sampled % period == 0:
            self._cached_totals = np.array([s.total_priority() for s in self.shards])
        return self._cached_totals

    def allocate(self, totals: np.ndarray, batch_size: int) -> np.ndarray:
        """Systematic rounding of batch_size * T_j / T to integer counts summing to batch_size"""
        total = totals.sum()
        cumulative = np.concatenate([[0.0], np.cumsum(totals / total * batch_size)])
        cumulative[-1] = batch_size
        u = self.rng.random()
        points = u + np.arange(batch_size)
        return np.histogram(points, bins=cumulative)[0].astype(int)

    def sample_batch(self, batch_size: int, replacement: bool = False) -> SampledBatch:
        n_total = len(self)
        if n_total < batch_size or batch_size <= 0:
            raise InsufficientDataError(f"{n_total} transitions stored, batch of {batch_size} requested")
        totals = self._shard_totals()
        grand_total = float(totals.sum())
        if grand_total <= 0:
            raise InsufficientDataError("replay memory holds no priority mass")
        counts = self.allocate(totals, batch_size)
        self._batches_sampled += 1

        drawn: List[Tuple[SampleRef, Transition, float]] = []
        for j, count in enumerate(counts):
            if count > 0:
                drawn.extend(self.shards[j].sample(int(count), self.rng, replacement))
        order = self.rng.permutation(len(drawn))
        drawn = [drawn[i] for i in order]

        probabilities = np.array([leaf for _, _, leaf in drawn]) / grand_total
        weights = (n_total * probabilities) ** (-self.beta)
        weights /= weights.max()
        return SampledBatch(
            transitions=[t for _, t, _ in drawn],
            is_weights=weights,
            refs=[ref for ref, _, _ in drawn],
            probabilities=probabilities,
        )

    def update_priorities(self, refs: Sequence[SampleRef], new_priorities: Sequence[float]) -> int:
        """p <- |delta| + eps for every live reference; returns how many were applied"""
        applied = 0
        for ref, delta in zip(refs, new_priorities):
            if self.shards[ref.shard].update(ref, abs(float(delta)) + self.priority_eps):
                applied += 1
        return applied

    def audit(self) -> List[dict]:
        rows = []
        for shard in self.shards:
            tree_total, naive = shard.audit()
            rows.append(
                dict(
                    shard=shard.shard_id,
                    size=len(shard),
                    total_priority=tree_total,
                    naive_total=naive,
                    inserted=shard.inserted,
                    evicted=shard.evicted,
                    batches=int(self.batches_inserted[shard.shard_id]),
                )
            )
        return rows


def global_probabilities(memory: ReplayMemory) -> Dict[Tuple[int, int], float]:
    """Flat prioritized distribution p^alpha / sum over every stored transition, keyed by (shard, slot)"""
    leaves = {}
    for shard in memory.shards:
        for slot, t in enumerate(shard.storage):
            if t is not None:
                leaves[(shard.shard_id, slot)] = shard.priorities[slot] ** memory.alpha
    total = sum(leaves.values())
    return {k: v / total for k, v in leaves.items()}


def two_stage_probabilities(memory: ReplayMemory) -> Dict[Tuple[int, int], float]:
    """Pr(shard) * Pr(transition | shard) enumerated over every stored transition"""
    totals = np.array([s.sum_tree.total for s in memory.shards])
    grand = totals.sum()
    probs = {}
    for shard in memory.shards:
        if totals[shard.shard_id] <= 0:
            continue
        p_shard = totals[shard.shard_id] / grand
        for slot, t in enumerate(shard.storage):
            if t is not None:
                probs[(shard.shard_id, slot)] = p_shard * (shard.priorities[slot] ** memory.alpha) / totals[shard.shard_id]
    return probs
