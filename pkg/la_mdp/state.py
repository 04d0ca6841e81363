"""
MDP state of one (UE, transmission attempt).

The semi-static block describes the serving cell, up to K_I neighbor cells and
the UE. The dynamic block holds the LA context with aging applied. Only
information available at the decision time is read: CSI reports by their
availability time, HARQ feedback by its reception time.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

from la_config import MdpSettings
from la_mdp.aging import SENTINEL, age_harq, age_hard
from la_mdp.reward import expected_se, normalize_buffer
from radio_sim.mcs_table import cqi_se
from radio_sim.scenario import ReceiverType, SiteType

MDP = MdpSettings.from_config()


@dataclass(frozen=True)
class CellDescriptor:
    cell_id: int
    site_type: SiteType
    bandwidth_mhz: float
    tx_power_w: float
    cell_radius_m: float
    rsrp_dbm: float


@dataclass(frozen=True)
class UeDescriptor:
    receiver_type: ReceiverType
    n_antennas: int
    max_rank: int


@dataclass(frozen=True)
class MdpState:
    serving: CellDescriptor
    neighbors: Tuple[CellDescriptor, ...]
    ue: UeDescriptor
    attempt: int
    serving_rsrp_dbm: float
    csi_history: Tuple[Tuple[int, int], ...]  # (aged cqi, aged rank), newest first
    rank_weighted_avg_cqi: float
    buffer_norm: float
    expected_se: float
    harq_history: Tuple[float, ...]  # soft-aged, newest first
    la_history: Tuple[Tuple[int, int], ...]  # (aged mcs, aged rank), newest first

    def __post_init__(self):
        if not 1 <= self.attempt <= 5:
            raise ValueError(f"attempt out of range: {self.attempt}")


def _cell_descriptor(sim, cell: int, rsrp: float) -> CellDescriptor:
    cfg = sim.cfg.cells[cell]
    return CellDescriptor(cfg.cell_id, cfg.site_type, cfg.bandwidth_mhz, cfg.tx_power_w, cfg.cell_radius_m, rsrp)


def _pad(items: List, k: int, filler) -> Tuple:
    return tuple(items[:k]) + (filler,) * max(0, k - len(items))


def build_state(sim, ue: int, t: int, attempt: int = 1, settings: Optional[MdpSettings] = None) -> MdpState:
    s = settings or MDP
    runtime = sim.ues[ue]
    link = sim.link_state(ue)
    serving = link.serving_cell
    window = s.aging_window

    neighbors = tuple(_cell_descriptor(sim, c, rsrp) for c, rsrp in link.neighbor_rsrp_dbm[: s.k_interferers])

    reports = [r for r in runtime.csi_reports if r.t_available <= t]
    reports.reverse()
    csi = [(age_hard(r.cqi, t - r.t_available, window), age_hard(r.rank, t - r.t_available, window)) for r in reports]
    fresh = [r for r in reports if t - r.t_available <= window]
    if fresh:
        avg_cqi = sum(r.cqi * r.rank for r in fresh) / sum(r.rank for r in fresh)
    else:
        avg_cqi = float(SENTINEL)

    harq = [age_harq(1.0 if ack else -1.0, t - t_rx, window) for t_rx, ack in reversed(runtime.harq_feedback) if t_rx <= t]
    la = [(age_hard(mcs, t - t_tx, window), age_hard(rank, t - t_tx, window)) for t_tx, mcs, rank in reversed(runtime.la_history) if t_tx <= t]

    cfg = runtime.config
    return MdpState(
        serving=_cell_descriptor(sim, serving, sim.rsrp_dbm(ue, serving)),
        neighbors=neighbors,
        ue=UeDescriptor(cfg.receiver_type, cfg.n_antennas, cfg.max_rank),
        attempt=attempt,
        serving_rsrp_dbm=sim.rsrp_dbm(ue, serving),
        csi_history=_pad(csi, s.k_csi, (SENTINEL, SENTINEL)),
        rank_weighted_avg_cqi=float(avg_cqi),
        buffer_norm=normalize_buffer(runtime.buffer_bytes, sim.tbs_max_bits[serving], s.n_tti_cap),
        expected_se=expected_se((cqi_se(r.cqi), r.rank) for r in fresh),
        harq_history=_pad(harq, s.k_harq, 0.0),
        la_history=_pad(la, s.k_la, (SENTINEL, SENTINEL)),
    )
