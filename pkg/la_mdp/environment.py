"""
Link-adaptation environment: a Simulation seen through the MDP.

    obs = env.observe()              # decisions of this TTI with encoded states
    env.act(mcs_per_decision)        # consume actions, advance one TTI
    env.drain_transitions()          # transitions closed so far
"""

from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence

import numpy as np

from channel_logger import ChannelLogger
from la_config import MdpSettings, SimSettings
from la_mdp.episodes import EpisodeTracker, Transition
from la_mdp.features import FeatureSchema, encode_flat, la_feature_schema
from la_mdp.state import MDP, MdpState, build_state
from radio_sim.scenario import ScenarioConfig
from radio_sim.simulation import DecisionPoint, HarqFeedback, Simulation, TransmissionOutcome, build_simulation


@dataclass
class Observation:
    tti: int
    decisions: List[DecisionPoint]
    features: np.ndarray  # (n_decisions, n_features)
    states: List[MdpState]
    feedback: List[HarqFeedback]


class ActorEnvironment(Protocol):
    schema: FeatureSchema
    tracker: EpisodeTracker

    @property
    def done(self) -> bool: ...

    def observe(self) -> Observation: ...

    def act(self, actions: Sequence[int], snapshot_id: int = -1) -> List[TransmissionOutcome]: ...

    def drain_transitions(self) -> List[Transition]: ...


class LaEnvironment:
    def __init__(
        self,
        cfg: ScenarioConfig | dict,
        seed: int | None = None,
        schema: FeatureSchema | None = None,
        alpha: float | None = None,
        settings: MdpSettings | None = None,
        sim_settings: SimSettings | None = None,
        encode: bool = True,
        record: bool = True,
        channel_logger: ChannelLogger | None = None,
    ):
        self.settings = settings or MDP
        self.schema = schema or la_feature_schema(self.settings)
        self.alpha = self.settings.alpha if alpha is None else alpha
        self.encode = encode
        self.record = record
        self.sim_settings = sim_settings
        self.channel_logger = channel_logger
        self.sim: Simulation = build_simulation(cfg, seed, sim_settings=sim_settings, channel_logger=channel_logger)
        self.tracker = EpisodeTracker(self.alpha, self.settings.episode_timeout, self.schema.size)
        self._obs: Optional[Observation] = None

    @property
    def done(self) -> bool:
        return self.sim.t >= self.sim.cfg.duration_tti

    def reset(self, cfg: ScenarioConfig | dict | None = None, seed: int | None = None):
        self.sim = build_simulation(cfg if cfg is not None else self.sim.cfg, seed, sim_settings=self.sim_settings, channel_logger=self.channel_logger)
        self.tracker = EpisodeTracker(self.alpha, self.settings.episode_timeout, self.schema.size)
        self._obs = None

    def observe(self) -> Observation:
        sim = self.sim
        decisions = sim.schedule_tti()
        if self.record:
            for fb in sim.last_feedback:
                self.tracker.on_feedback((fb.ue, fb.process_id), fb.ack, fb.attempt, fb.terminal, fb.tbs_bits, fb.n_re_per_attempt, fb.rank, fb.tti)
        states: List[MdpState] = []
        features = np.zeros((len(decisions), self.schema.size))
        if self.encode:
            for i, d in enumerate(decisions):
                state = build_state(sim, d.ue, d.tti, d.attempt, self.settings)
                states.append(state)
                features[i] = encode_flat(state, self.schema)
        self._obs = Observation(sim.t, decisions, features, states, list(sim.last_feedback))
        return self._obs

    def act(self, actions: Sequence[int], snapshot_id: int = -1) -> List[TransmissionOutcome]:
        obs = self._obs if self._obs is not None and self._obs.tti == self.sim.t else self.observe()
        if len(actions) != len(obs.decisions):
            raise ValueError(f"{len(actions)} actions for {len(obs.decisions)} decisions")
        for i, (decision, mcs) in enumerate(zip(obs.decisions, actions)):
            self.sim.submit_action(decision.cell, int(mcs))
            if self.record:
                self.tracker.on_action((decision.ue, decision.process_id), obs.features[i], int(mcs), decision.attempt, decision.tti, snapshot_id)
        outcomes = self.sim.step_tti()
        if self.record:
            self.tracker.expire(self.sim.t)
        self._obs = None
        return outcomes

    def drain_transitions(self) -> List[Transition]:
        return self.tracker.drain()
