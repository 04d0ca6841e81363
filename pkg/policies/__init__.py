from policies.base_policy import LaPolicy
from policies.olla import OllaPolicy, OllaState, select_mcs, update_on_harq
from policies.q_policy import QPolicy
from policies.scripted import FixedMcsPolicy, InnerLoopPolicy, RandomMcsPolicy

__all__ = [
    "FixedMcsPolicy",
    "InnerLoopPolicy",
    "LaPolicy",
    "OllaPolicy",
    "OllaState",
    "QPolicy",
    "RandomMcsPolicy",
    "select_mcs",
    "update_on_harq",
]
