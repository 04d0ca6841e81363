"""
Outer-loop link adaptation.

An SINR offset integrates HARQ feedback: +step_ack on ACK, -step_nack on NACK,
with step_nack / step_ack = (1 - target) / target so the offset is stationary
exactly at the BLER target. The MCS is the largest one whose link curve at
(estimated SINR + offset) meets the target.
"""

from dataclasses import dataclass, replace
from typing import Dict, List, Optional

import numpy as np

from channel_logger import ChannelLogger
from la_config import OllaSettings
from la_mdp.environment import Observation
from policies.base_policy import LaPolicy
from radio_sim.csi import latest_available
from radio_sim.link_model import LINK_CURVES, cqi_to_sinr_db, mcs_thresholds_db
from radio_sim.mcs_table import McsTable
from radio_sim.simulation import HarqFeedback, Simulation, TransmissionOutcome

# Threshold comparisons tolerate float noise in ln((1 - t) / t)
SELECT_TOL_DB = 1e-9


@dataclass(frozen=True)
class OllaState:
    offset_db: float
    step_ack_db: float
    step_nack_db: float
    bler_target: float
    clamp_db: float = 20.0

    @classmethod
    def from_target(cls, bler_target: float, step_ack_db: float = 0.1, clamp_db: float = 20.0, offset_db: float = 0.0) -> "OllaState":
        if not 0.0 < bler_target < 1.0:
            raise ValueError(f"BLER target must be in (0, 1): {bler_target}")
        return cls(offset_db, step_ack_db, step_ack_db * (1.0 - bler_target) / bler_target, bler_target, clamp_db)

    @classmethod
    def from_settings(cls, settings: OllaSettings) -> "OllaState":
        return cls.from_target(settings.bler_target, settings.step_ack_db, settings.offset_clamp_db)


def update_on_harq(s: OllaState, ack: bool) -> OllaState:
    offset = s.offset_db + s.step_ack_db if ack else s.offset_db - s.step_nack_db
    return replace(s, offset_db=float(np.clip(offset, -s.clamp_db, s.clamp_db)))


def select_mcs(s: OllaState, sinr_est_db: float, table: Optional[McsTable] = None, curves=LINK_CURVES) -> int:
    thresholds = mcs_thresholds_db(s.bler_target, curves)
    n_mcs = len(table) if table is not None else len(thresholds)
    allowed = int(np.searchsorted(thresholds[:n_mcs], sinr_est_db + s.offset_db + SELECT_TOL_DB, side="right"))
    return max(allowed - 1, 0)


class OllaPolicy(LaPolicy):
    name = "olla"

    def __init__(self, settings: Optional[OllaSettings] = None, channel_logger: Optional[ChannelLogger] = None):
        super().__init__(channel_logger)
        self.settings = settings or OllaSettings.from_config()
        self.states: Dict[int, OllaState] = {}
        self.last_tx: Dict[int, int] = {}

    def state_of(self, ue: int) -> OllaState:
        if ue not in self.states:
            self.states[ue] = OllaState.from_settings(self.settings)
        return self.states[ue]

    def reset(self, sim: Simulation):
        self.states = {}
        self.last_tx = {}

    def on_feedback(self, sim: Simulation, feedback: List[HarqFeedback]):
        for fb in feedback:
            self.states[fb.ue] = update_on_harq(self.state_of(fb.ue), fb.ack)

    def choose(self, sim: Simulation, obs: Observation) -> List[int]:
        actions = []
        idle_reset = self.settings.reset_after_idle_tti
        for d in obs.decisions:
            ue = sim.ues[d.ue]
            if d.is_retransmission:
                actions.append(ue.harq.processes[d.process_id].mcs_history[0])
                continue
            if idle_reset > 0 and d.tti - self.last_tx.get(d.ue, d.tti) > idle_reset:
                self.states[d.ue] = OllaState.from_settings(self.settings)
            report = latest_available(ue.csi_reports, d.tti)
            if report is None:
                actions.append(0)
                continue
            actions.append(select_mcs(self.state_of(d.ue), cqi_to_sinr_db(report.cqi)))
        return actions

    def after_step(self, sim: Simulation, outcomes: List[TransmissionOutcome]):
        for o in outcomes:
            self.last_tx[o.ue] = o.tti
