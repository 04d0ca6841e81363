from abc import ABC, abstractmethod
from typing import List, Optional

from channel_logger import ChannelLogger
from la_mdp.environment import LaEnvironment, Observation
from radio_sim.simulation import HarqFeedback, Simulation, TransmissionOutcome


class LaPolicy(ABC):
    """
    Abstraction over link-adaptation policies: state in, MCS out.

    # Callbacks order
    1. `reset` - called when a new simulation starts
    2. `on_feedback` - HARQ feedback delivered at the start of the TTI
    3. `choose` - one MCS per decision of the TTI
    4. `after_step` - transmissions of the TTI, after the clock advanced

    # How to add a policy
    1) create a class that inherits from `LaPolicy`
    2) register it in `bench/runner.py` `make_policy`
    3) add a section in the .ini file if it takes settings
    """

    name: str = "policy"
    # True when `choose` reads obs.features
    needs_features: bool = False

    def __init__(self, channel_logger: Optional[ChannelLogger] = None):
        self.channel_logger = channel_logger

    def reset(self, sim: Simulation):
        pass

    def on_feedback(self, sim: Simulation, feedback: List[HarqFeedback]):
        pass

    @abstractmethod
    def choose(self, sim: Simulation, obs: Observation) -> List[int]:
        """Return one MCS index per decision in `obs.decisions`"""

    def after_step(self, sim: Simulation, outcomes: List[TransmissionOutcome]):
        pass

    def run_episode(self, env: LaEnvironment, n_tti: Optional[int] = None) -> List[TransmissionOutcome]:
        """Drive `env` to its end (or `n_tti` TTIs) and return every transmission"""
        self.reset(env.sim)
        outcomes: List[TransmissionOutcome] = []
        steps = 0
        while not env.done and (n_tti is None or steps < n_tti):
            obs = env.observe()
            self.on_feedback(env.sim, obs.feedback)
            actions = self.choose(env.sim, obs) if obs.decisions else []
            step = env.act(actions)
            self.after_step(env.sim, step)
            outcomes.extend(step)
            steps += 1
        if self.channel_logger is not None:
            self.channel_logger.log_to_logs(f"Policy {self.name} ran {steps} TTIs, {len(outcomes)} transmissions")
        return outcomes
