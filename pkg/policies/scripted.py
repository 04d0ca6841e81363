from typing import List, Optional

import numpy as np

from la_mdp.environment import Observation
from policies.base_policy import LaPolicy
from radio_sim.mcs_table import N_MCS, check_mcs
from radio_sim.simulation import Simulation


class FixedMcsPolicy(LaPolicy):
    name = "fixed"

    def __init__(self, mcs: int = 0, **kwargs):
        super().__init__(**kwargs)
        self.mcs = check_mcs(mcs)

    def choose(self, sim: Simulation, obs: Observation) -> List[int]:
        return [self.mcs] * len(obs.decisions)


class RandomMcsPolicy(LaPolicy):
    name = "random"

    def __init__(self, seed: Optional[int] = None, **kwargs):
        super().__init__(**kwargs)
        self.rng = np.random.default_rng(seed)

    def choose(self, sim: Simulation, obs: Observation) -> List[int]:
        return [int(a) for a in self.rng.integers(0, N_MCS, size=len(obs.decisions))]


class InnerLoopPolicy(LaPolicy):
    """MCS bound to the latest CQI, no offset"""

    name = "illa"

    def choose(self, sim: Simulation, obs: Observation) -> List[int]:
        return [sim.default_mcs(d) for d in obs.decisions]
