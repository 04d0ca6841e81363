from runtime.queues import BoundedQueue, QueueClosed
from runtime.stats import PeriodicTask, RunStats
from runtime.weights import WeightBoard, WeightSnapshot, broadcast_weights

__all__ = [
    "BoundedQueue",
    "PeriodicTask",
    "QueueClosed",
    "RunStats",
    "WeightBoard",
    "WeightSnapshot",
    "broadcast_weights",
]
