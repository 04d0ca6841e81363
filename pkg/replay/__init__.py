from replay.memory import InsufficientDataError, ReplayMemory, SampledBatch, global_probabilities, two_stage_probabilities
from replay.shard import SampleRef, Shard
from replay.sum_tree import MaxTree, MinTree, SegmentTree, SumTree

__all__ = [
    "InsufficientDataError",
    "MaxTree",
    "MinTree",
    "ReplayMemory",
    "SampleRef",
    "SampledBatch",
    "SegmentTree",
    "Shard",
    "SumTree",
    "global_probabilities",
    "two_stage_probabilities",
]
