from typing import List, Optional

import numpy as np

from channel_logger import ChannelLogger
from la_mdp.environment import Observation
from learner.exploration import epsilon_greedy
from learner.qnetwork import QNetwork, forward_q
from policies.base_policy import LaPolicy
from radio_sim.simulation import Simulation


class QPolicy(LaPolicy):
    """epsilon-greedy over the Q-values of a network snapshot (greedy at epsilon 0)"""

    name = "rl"
    needs_features = True

    def __init__(
        self,
        net: QNetwork,
        epsilon: float = 0.0,
        seed: Optional[int] = None,
        name: Optional[str] = None,
        channel_logger: Optional[ChannelLogger] = None,
    ):
        super().__init__(channel_logger)
        self.net = net
        self.epsilon = epsilon
        self.rng = np.random.default_rng(seed)
        if name is not None:
            self.name = name

    def choose(self, sim: Simulation, obs: Observation) -> List[int]:
        q = forward_q(self.net, obs.features)
        return [int(a) for a in epsilon_greedy(q, self.epsilon, self.rng)]
