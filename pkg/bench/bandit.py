"""
Contextual-bandit sanity task.

A single stationary link per decision: the context is the SINR, drawn
uniformly from a range; the episode of every packet is one attempt, so the
reward is SE(mcs) on ACK and -alpha on NACK. The expected reward of each MCS
is known in closed form from the link curve, which gives an exact oracle
for the greedy policy a trained network should converge to.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from la_mdp.environment import Observation
from la_mdp.episodes import EpisodeTracker, Transition
from la_mdp.features import FeatureSchema
from la_tools import get_logger
from learner.qnetwork import QNetwork, forward_q
from radio_sim.link_model import bler_curve, bler_probability
from radio_sim.mcs_table import N_MCS, n_re_full_band, tbs_bits
from radio_sim.simulation import DecisionPoint, TransmissionOutcome

logger = get_logger("Bandit")

SINR_RANGE_DB: Tuple[float, float] = (-10.0, 35.0)
BANDIT_N_RE = n_re_full_band(51)


def bandit_schema(sinr_range_db: Tuple[float, float] = SINR_RANGE_DB) -> FeatureSchema:
    return FeatureSchema(names=("sinr_db",), lower=(float(sinr_range_db[0]),), upper=(float(sinr_range_db[1]),), params=dict(task="bandit"))


def success_se(n_re: int = BANDIT_N_RE) -> np.ndarray:
    """Reward on ACK for every MCS (rank 1, one attempt)"""
    return np.array([tbs_bits(m, n_re, 1) / n_re for m in range(N_MCS)])


def expected_rewards(sinr_db, alpha: float, n_re: int = BANDIT_N_RE) -> np.ndarray:
    """E[r | sinr, mcs] = (1 - BLER) * SE - BLER * alpha, shape (..., N_MCS)"""
    p = bler_curve(sinr_db)
    return (1.0 - p) * success_se(n_re) - p * alpha


def oracle_mcs(sinr_db, alpha: float, n_re: int = BANDIT_N_RE) -> np.ndarray:
    return np.argmax(expected_rewards(sinr_db, alpha, n_re), axis=-1)


class BanditEnvironment:
    """One-step link-adaptation episodes, usable in an actor slot"""

    def __init__(
        self,
        seed: int | Sequence[int] = 0,
        alpha: float = 0.5,
        n_links: int = 8,
        n_steps: int = 250,
        sinr_range_db: Tuple[float, float] = SINR_RANGE_DB,
        n_re: int = BANDIT_N_RE,
    ):
        self.schema = bandit_schema(sinr_range_db)
        self.alpha = alpha
        self.n_links = n_links
        self.n_steps = n_steps
        self.sinr_range_db = sinr_range_db
        self.n_re = n_re
        self.rng = np.random.default_rng(seed)
        self.tracker = EpisodeTracker(alpha, timeout_tti=1, n_features=self.schema.size)
        self.t = 0
        self._sinr: Optional[np.ndarray] = None
        self._obs: Optional[Observation] = None

    @property
    def done(self) -> bool:
        return self.t >= self.n_steps

    def observe(self) -> Observation:
        self._sinr = self.rng.uniform(*self.sinr_range_db, size=self.n_links)
        decisions = [DecisionPoint(self.t, 0, i, 0, 1, False, self.n_re, 1, 0, float("inf")) for i in range(self.n_links)]
        features = self.schema.normalize(self._sinr[:, None])
        self._obs = Observation(self.t, decisions, features, [], [])
        return self._obs

    def act(self, actions: Sequence[int], snapshot_id: int = -1) -> List[TransmissionOutcome]:
        obs = self._obs if self._obs is not None and self._obs.tti == self.t else self.observe()
        if len(actions) != len(obs.decisions):
            raise ValueError(f"{len(actions)} actions for {len(obs.decisions)} decisions")
        outcomes = []
        for i, mcs in enumerate(actions):
            mcs = int(mcs)
            sinr = float(self._sinr[i])
            ack = bool(self.rng.random() >= bler_probability(sinr, mcs))
            tbs = tbs_bits(mcs, self.n_re, 1)
            self.tracker.on_action((i, self.t), obs.features[i], mcs, 1, self.t, snapshot_id)
            self.tracker.on_feedback((i, self.t), ack, 1, True, tbs, (self.n_re,), 1, self.t)
            outcomes.append(TransmissionOutcome(self.t, 0, i, 0, mcs, 1, 1, ack, tbs, float(tbs), self.n_re, sinr, sinr, not ack, self.t))
        self.t += 1
        self._obs = None
        return outcomes

    def drain_transitions(self) -> List[Transition]:
        return self.tracker.drain()


def bandit_env_factory(actor_id: int, alpha: float = 0.5, seed: int = 0, **kwargs):
    """Endless supply of bandit episodes for one actor"""
    counter = {"episode": 0}

    def next_env() -> BanditEnvironment:
        counter["episode"] += 1
        return BanditEnvironment(seed=(seed, actor_id, counter["episode"]), alpha=alpha, **kwargs)

    return next_env


def greedy_agreement(net: QNetwork, alpha: float, n_points: int = 200, sinr_range_db: Tuple[float, float] = SINR_RANGE_DB) -> dict:
    """Share of an SINR grid where the greedy MCS equals the oracle, plus the mean regret"""
    grid = np.linspace(*sinr_range_db, n_points)
    schema = bandit_schema(sinr_range_db)
    greedy = np.argmax(forward_q(net, schema.normalize(grid[:, None])), axis=-1)
    best = oracle_mcs(grid, alpha)
    er = expected_rewards(grid, alpha)
    rows = np.arange(n_points)
    regret = er[rows, best] - er[rows, greedy]
    result = dict(agreement=float(np.mean(greedy == best)), mean_regret=float(regret.mean()), max_regret=float(regret.max()))
    logger.info("BANDIT_EVALUATED", extra=result)
    return result
