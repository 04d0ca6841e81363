"""Bounded blocking queue used between actors, the ingest thread and the learner."""

from __future__ import annotations

import threading
import time
from typing import Generic, Optional, TypeVar

T = TypeVar("T")


class QueueClosed(Exception):
    pass


class BoundedQueue(Generic[T]):
    """Fixed-capacity ring buffer; `put` blocks while full (producer backpressure).

    `close` wakes every waiter: producers get QueueClosed, consumers drain what
    is left and then get QueueClosed.
    """

    def __init__(self, capacity: int) -> None:
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self._capacity = capacity
        self._buffer: list[Optional[T]] = [None] * capacity
        self._head = 0
        self._tail = 0
        self._size = 0
        self._closed = False
        self._lock = threading.Lock()
        self._not_empty = threading.Condition(self._lock)
        self._not_full = threading.Condition(self._lock)
        self.blocked_puts = 0
        self.blocked_s = 0.0

    @property
    def capacity(self) -> int:
        return self._capacity

    def put(self, item: T, timeout: Optional[float] = None) -> bool:
        """False on timeout"""
        with self._not_full:
            if self._size == self._capacity and not self._closed:
                self.blocked_puts += 1
                started = time.monotonic()
                deadline = None if timeout is None else started + timeout
                while self._size == self._capacity and not self._closed:
                    remaining = None if deadline is None else deadline - time.monotonic()
                    if remaining is not None and remaining <= 0:
                        self.blocked_s += time.monotonic() - started
                        return False
                    self._not_full.wait(remaining)
                self.blocked_s += time.monotonic() - started
            if self._closed:
                raise QueueClosed()
            self._buffer[self._tail] = item
            self._tail = (self._tail + 1) % self._capacity
            self._size += 1
            self._not_empty.notify()
            return True

    def get(self, timeout: Optional[float] = None) -> Optional[T]:
        """None on timeout"""
        with self._not_empty:
            deadline = None if timeout is None else time.monotonic() + timeout
            while self._size == 0:
                if self._closed:
                    raise QueueClosed()
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    return None
                self._not_empty.wait(remaining)
            item = self._buffer[self._head]
            self._buffer[self._head] = None
            self._head = (self._head + 1) % self._capacity
            self._size -= 1
            self._not_full.notify()
            return item

    def close(self):
        with self._lock:
            self._closed = True
            self._not_empty.notify_all()
            self._not_full.notify_all()

    @property
    def closed(self) -> bool:
        with self._lock:
            return self._closed

    def qsize(self) -> int:
        with self._lock:
            return self._size

    def empty(self) -> bool:
        return self.qsize() == 0

    def full(self) -> bool:
        return self.qsize() == self._capacity


__all__ = ["BoundedQueue", "QueueClosed"]
