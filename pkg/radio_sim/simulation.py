"""
Per-TTI multi-cell downlink simulator.

A TTI runs in two phases so a policy can act between them:

    decisions = sim.schedule_tti()      # traffic, fading, due HARQ feedback, grants
    sim.submit_action(d.cell, mcs)      # one MCS per granted cell
    outcomes = sim.step_tti()           # transmissions, HARQ draws, CSI reports

Feedback delivered at the start of the TTI is exposed in `sim.last_feedback`
until the next `schedule_tti`. Trajectories depend only on (scenario, seed):
every random component draws from its own child stream of the seed.
"""

from collections import deque
from dataclasses import dataclass
from typing import Callable, Deque, Dict, List, Optional, Tuple

import numpy as np

from channel_logger import ChannelLogger
from la_config import SimSettings, TrafficSettings
from la_tools import get_logger
from radio_sim.csi import CqiReport, latest_available, measure_cqi
from radio_sim.deployment import LinkState, build_deployment, interference_coupling_db, neighbor_list
from radio_sim.harq import HarqEntity, HarqProcess
from radio_sim.link_model import fading_correlation, noise_power_dbm, watts_to_dbm
from radio_sim.mcs_table import CQI_TO_MCS, MAX_RANK, check_mcs, n_re_full_band, tbs_bits, tbs_max_bits_for
from radio_sim.scenario import ScenarioConfig, SiteType, validate_scenario
from radio_sim.scheduler import RoundRobinScheduler
from radio_sim.traffic import TrafficSource, make_source

logger = get_logger("Simulation")

HISTORY_DEPTH = 64


@dataclass(frozen=True)
class DecisionPoint:
    tti: int
    cell: int
    ue: int
    process_id: int
    attempt: int
    is_retransmission: bool
    n_re: int
    rank: int
    tbs_bits: int  # 0 until the first attempt fixes it
    buffer_bytes: float


@dataclass(frozen=True)
class TransmissionOutcome:
    tti: int
    cell: int
    ue: int
    process_id: int
    mcs: int
    rank: int
    attempt: int
    ack: bool
    tbs_bits: int
    payload_bits: float
    n_re: int
    sinr_db: float
    effective_sinr_db: float
    dropped: bool
    feedback_tti: int


@dataclass(frozen=True)
class HarqFeedback:
    tti: int
    cell: int
    ue: int
    process_id: int
    ack: bool
    attempt: int
    terminal: bool
    dropped: bool
    tbs_bits: int
    n_re_per_attempt: Tuple[int, ...]
    rank: int


class UeRuntime:
    def __init__(self, index: int, config, source: TrafficSource, serving: int, harq: HarqEntity, csi_offset: int):
        self.index = index
        self.config = config
        self.source = source
        self.serving = serving
        self.harq = harq
        self.csi_offset = csi_offset
        self.buffer_bytes = source.initial_buffer()
        self.csi_reports: Deque[CqiReport] = deque(maxlen=16)
        # (t_received, ack)
        self.harq_feedback: Deque[Tuple[int, bool]] = deque(maxlen=HISTORY_DEPTH)
        # (t_sent, mcs, rank)
        self.la_history: Deque[Tuple[int, int, int]] = deque(maxlen=HISTORY_DEPTH)
        self.delivered_bits = 0.0

    @property
    def full_buffer(self) -> bool:
        return self.source.full_buffer

    def has_new_data(self) -> bool:
        return self.buffer_bytes > 0 and self.harq.free_process() is not None

    def has_retransmission(self) -> bool:
        return self.harq.pending_retransmission() is not None

    def available_reports(self, t: int) -> List[CqiReport]:
        return [r for r in self.csi_reports if r.t_available <= t]


class Simulation:
    def __init__(
        self,
        cfg: ScenarioConfig,
        seed: int,
        sim_settings: SimSettings | None = None,
        traffic_settings: TrafficSettings | None = None,
        channel_logger: ChannelLogger | None = None,
    ):
        self.cfg = cfg
        self.seed = int(seed)
        self.settings = sim_settings or SimSettings.from_config()
        self.channel_logger = channel_logger
        s = self.settings

        streams = np.random.SeedSequence(self.seed).spawn(5)
        self.rng_drop, self.rng_fading, self.rng_csi, self.rng_harq, self.rng_traffic = (np.random.default_rng(x) for x in streams)

        self.deployment = build_deployment(cfg, self.rng_drop, s)
        self.n_cells = len(cfg.cells)
        self.n_ues = len(cfg.ues)

        self.n_re = [n_re_full_band(c.n_subbands, s.subcarriers_per_subband, s.data_symbols) for c in cfg.cells]
        self.tbs_max_bits = [tbs_max_bits_for(n, MAX_RANK) for n in self.n_re]
        self.noise_dbm = np.array([noise_power_dbm(c.bandwidth_mhz, s.thermal_noise_dbm_hz, s.noise_figure_db) for c in cfg.cells])
        self.tx_dbm = watts_to_dbm([c.tx_power_w for c in cfg.cells])
        self.mmimo = np.array([c.site_type == SiteType.MMIMO for c in cfg.cells])
        self.coupling_db = np.array([interference_coupling_db(c.site_type, s.mmimo_interference_coupling) for c in cfg.cells])

        self.rho = np.array([fading_correlation(u.speed_mps, s.carrier_freq_ghz) for u in cfg.ues])
        self.fading_db = self.rng_fading.normal(0.0, s.fading_sigma_db, size=(self.n_ues, self.n_cells))

        self.ues: List[UeRuntime] = []
        for i, ue_cfg in enumerate(cfg.ues):
            self.ues.append(
                UeRuntime(
                    index=i,
                    config=ue_cfg,
                    source=make_source(ue_cfg.traffic, cfg.traffic, traffic_settings),
                    serving=int(self.deployment.serving[i]),
                    harq=HarqEntity(s.harq_processes, s.max_transmissions),
                    csi_offset=i % s.csi_period,
                )
            )
        self._neighbors = [
            neighbor_list(self.deployment.rsrp_dbm[i], self.ues[i].serving, 8, s.rsrp_threshold_dbm) for i in range(self.n_ues)
        ]
        self.schedulers = [RoundRobinScheduler([u.index for u in self.ues if u.serving == c]) for c in range(self.n_cells)]

        self.t = 0
        self._scheduled_at: Optional[int] = None
        self._decisions: Dict[int, DecisionPoint] = {}
        self._actions: Dict[int, int] = {}
        self.last_feedback: List[HarqFeedback] = []

        logger.debug("SIMULATION_BUILT", extra=dict(scenario=cfg.name, seed=self.seed, cells=self.n_cells, ues=self.n_ues))

    # -- link views -------------------------------------------------------

    def link_state(self, ue: int) -> LinkState:
        serving = self.ues[ue].serving
        return LinkState(
            pathloss_db=float(self.deployment.pathloss_db[ue, serving]),
            shadowing_db=float(self.deployment.shadowing_db[ue, serving]),
            fast_fading_db=float(self.fading_db[ue, serving]),
            serving_cell=serving,
            neighbor_rsrp_dbm=tuple(self._neighbors[ue]),
        )

    def rsrp_dbm(self, ue: int, cell: int) -> float:
        return float(self.deployment.rsrp_dbm[ue, cell])

    def sinr_db(self, ue: int, active_cells) -> float:
        serving = self.ues[ue].serving
        rx = self.deployment.rsrp_dbm[ue] + self.fading_db[ue]
        signal = rx[serving] + (self.settings.mmimo_gain_db if self.mmimo[serving] else 0.0)
        interferers = [c for c in active_cells if c != serving]
        interference_mw = float(np.sum(np.power(10.0, (rx[interferers] + self.coupling_db[interferers]) / 10.0))) if interferers else 0.0
        noise_mw = float(np.power(10.0, self.noise_dbm[serving] / 10.0))
        return float(signal - 10.0 * np.log10(interference_mw + noise_mw))

    # -- TTI phases -------------------------------------------------------

    def schedule_tti(self) -> List[DecisionPoint]:
        if self._scheduled_at == self.t:
            return list(self._decisions.values())
        t = self.t

        for ue in self.ues:
            if not ue.full_buffer:
                ue.buffer_bytes += ue.source.arrivals(t, self.rng_traffic)

        noise = self.rng_fading.standard_normal((self.n_ues, self.n_cells))
        innovation = np.sqrt(np.maximum(1.0 - self.rho**2, 0.0))[:, None] * self.settings.fading_sigma_db
        self.fading_db = self.rho[:, None] * self.fading_db + innovation * noise

        self.last_feedback = []
        for ue in self.ues:
            for process in ue.harq.due_feedback(t):
                ack, terminal = process.deliver_feedback()
                ue.harq_feedback.append((t, ack))
                if ack:
                    ue.delivered_bits += process.payload_bits
                self.last_feedback.append(
                    HarqFeedback(
                        tti=t,
                        cell=ue.serving,
                        ue=ue.index,
                        process_id=process.process_id,
                        ack=ack,
                        attempt=process.attempt,
                        terminal=terminal,
                        dropped=terminal and not ack,
                        tbs_bits=process.packet_tbs_bits,
                        n_re_per_attempt=tuple(process.n_re_per_attempt),
                        rank=process.rank,
                    )
                )

        self._decisions = {}
        self._actions = {}
        for cell, scheduler in enumerate(self.schedulers):
            granted = scheduler.schedule(
                has_retx=lambda i: self.ues[i].has_retransmission(),
                has_data=lambda i: self.ues[i].has_new_data(),
            )
            if granted is None:
                continue
            self._decisions[cell] = self._decision_for(cell, self.ues[granted], t)
        self._scheduled_at = t
        return list(self._decisions.values())

    def _decision_for(self, cell: int, ue: UeRuntime, t: int) -> DecisionPoint:
        retx = ue.harq.pending_retransmission()
        if retx is not None:
            return DecisionPoint(t, cell, ue.index, retx.process_id, retx.attempt + 1, True, self.n_re[cell], retx.rank, retx.packet_tbs_bits, ue.buffer_bytes)
        process = ue.harq.free_process()
        return DecisionPoint(t, cell, ue.index, process.process_id, 1, False, self.n_re[cell], self.transmission_rank(ue.index, t), 0, ue.buffer_bytes)

    def transmission_rank(self, ue: int, t: int) -> int:
        report = latest_available(self.ues[ue].csi_reports, t)
        rank = report.rank if report is not None else 1
        return max(1, min(rank, self.ues[ue].config.max_rank))

    def default_mcs(self, decision: DecisionPoint) -> int:
        """Inner-loop choice: the MCS bound to the latest CQI, attempt MCS for retransmissions"""
        ue = self.ues[decision.ue]
        if decision.is_retransmission:
            return ue.harq.processes[decision.process_id].mcs_history[-1]
        report = latest_available(ue.csi_reports, decision.tti)
        return CQI_TO_MCS[report.cqi] if report is not None else 0

    def submit_action(self, cell: int, mcs: int):
        if cell not in self._decisions:
            raise KeyError(f"Cell {cell} has no grant at TTI {self.t}")
        self._actions[cell] = check_mcs(mcs)

    def step_tti(self) -> List[TransmissionOutcome]:
        """Advance the clock by one TTI and return this TTI's transmissions"""
        if self._scheduled_at != self.t:
            self.schedule_tti()
        t = self.t
        s = self.settings
        active = sorted(self._decisions)

        outcomes = []
        for cell in active:
            decision = self._decisions[cell]
            ue = self.ues[decision.ue]
            mcs = self._actions.get(cell)
            if mcs is None:
                mcs = self.default_mcs(decision)
            process: HarqProcess = ue.harq.processes[decision.process_id]
            if not decision.is_retransmission:
                tbs = tbs_bits(mcs, decision.n_re, decision.rank)
                buffer_bits = ue.buffer_bytes * 8.0
                payload = float(min(tbs, buffer_bits))
                if not ue.full_buffer:
                    ue.buffer_bytes = max(0.0, ue.buffer_bytes - payload / 8.0)
                process.start(tbs, payload, decision.rank)
            sinr = self.sinr_db(ue.index, active)
            ack, eff = process.transmit(mcs, decision.n_re, sinr, self.rng_harq, t + s.harq_delay)
            ue.la_history.append((t, mcs, process.rank))
            outcomes.append(
                TransmissionOutcome(
                    tti=t,
                    cell=cell,
                    ue=ue.index,
                    process_id=process.process_id,
                    mcs=mcs,
                    rank=process.rank,
                    attempt=process.attempt,
                    ack=ack,
                    tbs_bits=process.packet_tbs_bits,
                    payload_bits=process.payload_bits,
                    n_re=decision.n_re,
                    sinr_db=sinr,
                    effective_sinr_db=eff,
                    dropped=(not ack) and process.attempt >= process.max_transmissions,
                    feedback_tti=t + s.harq_delay,
                )
            )

        for ue in self.ues:
            if (t - ue.csi_offset) % s.csi_period == 0:
                report = measure_cqi(
                    self.sinr_db(ue.index, active),
                    ue.config.receiver_type,
                    ue.config.max_rank,
                    t,
                    self.rng_csi,
                    s.csi_delay,
                    s.rank_thresholds_db,
                )
                ue.csi_reports.append(report)

        if self.channel_logger is not None:
            for o in outcomes:
                self.channel_logger.log_to_sim(
                    dict(
                        tti=o.tti,
                        cell=self.cfg.cells[o.cell].cell_id,
                        ue=self.cfg.ues[o.ue].ue_id,
                        mcs=o.mcs,
                        ack=int(o.ack),
                        tbs=o.tbs_bits,
                        sinr_db=round(o.sinr_db, 4),
                    )
                )

        self.t += 1
        self._decisions = {}
        self._actions = {}
        return outcomes

    def run(self, chooser: Callable[["Simulation", DecisionPoint], int] | None = None, n_tti: int | None = None) -> List[TransmissionOutcome]:
        """Drive the simulation with `chooser(sim, decision) -> mcs` (inner-loop default)"""
        outcomes = []
        for _ in range(n_tti if n_tti is not None else self.cfg.duration_tti):
            for decision in self.schedule_tti():
                mcs = chooser(self, decision) if chooser is not None else self.default_mcs(decision)
                self.submit_action(decision.cell, mcs)
            outcomes.extend(self.step_tti())
        return outcomes


def build_simulation(cfg: ScenarioConfig | dict, seed: int | None = None, **kwargs) -> Simulation:
    """Validate the scenario and instantiate it; `seed` defaults to the scenario's own"""
    cfg = validate_scenario(cfg)
    return Simulation(cfg, cfg.seed if seed is None else seed, **kwargs)
