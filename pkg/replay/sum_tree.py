"""
Array-backed segment trees over a fixed number of leaves.

The heap layout is 1-indexed: node i has children 2i and 2i+1, leaves occupy
[n, 2n) with n the capacity rounded up to a power of two. Updates recompute
every ancestor from its two children, so the root never accumulates rounding
drift from repeated deltas.
"""

import numpy as np


class SegmentTree:
    neutral = 0.0

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive: {capacity}")
        self.capacity = capacity
        n = 1
        while n < capacity:
            n *= 2
        self.n = n
        self.nodes = np.full(2 * n, self.neutral, dtype=float)

    def _combine(self, left: np.ndarray | float, right: np.ndarray | float):
        raise NotImplementedError

    def update(self, index: int, value: float):
        if not 0 <= index < self.capacity:
            raise IndexError(f"leaf {index} out of range [0, {self.capacity})")
        i = index + self.n
        self.nodes[i] = value
        i //= 2
        while i >= 1:
            self.nodes[i] = self._combine(self.nodes[2 * i], self.nodes[2 * i + 1])
            i //= 2

    def get(self, index: int) -> float:
        return float(self.nodes[index + self.n])

    def leaves(self, size: int | None = None) -> np.ndarray:
        return self.nodes[self.n : self.n + (self.capacity if size is None else size)]

    @property
    def root(self) -> float:
        return float(self.nodes[1])


class SumTree(SegmentTree):
    neutral = 0.0

    def _combine(self, left, right):
        return left + right

    @property
    def total(self) -> float:
        return self.root

    def find_prefix(self, value: float) -> int:
        """Leaf whose cumulative range [prefix, prefix + leaf) contains `value`; zero leaves are never returned"""
        total = self.root
        if total <= 0:
            raise ValueError("sampling from an empty tree")
        value = min(max(value, 0.0), np.nextafter(total, 0.0))
        i = 1
        while i < self.n:
            left = 2 * i
            if value < self.nodes[left] or self.nodes[left + 1] <= 0.0:
                i = left
            else:
                value -= self.nodes[left]
                i = left + 1
        return i - self.n


class MinTree(SegmentTree):
    neutral = np.inf

    def _combine(self, left, right):
        return min(left, right)

    def argmin(self) -> int:
        i = 1
        while i < self.n:
            i = 2 * i if self.nodes[2 * i] <= self.nodes[2 * i + 1] else 2 * i + 1
        return i - self.n


class MaxTree(SegmentTree):
    neutral = -np.inf

    def _combine(self, left, right):
        return max(left, right)
