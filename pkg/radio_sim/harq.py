"""
HARQ with chase combining.

A process carries one packet from its first attempt until ACK or drop. The
TBS and rank are fixed by the first attempt; every attempt adds its linear
SINR to the combining accumulator.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from radio_sim.link_model import LINK_CURVES, bler_probability, db_to_linear, effective_sinr_db

N_MAX_TRANSMISSIONS = 5


class HarqStatus(str, Enum):
    IDLE = "idle"
    IN_FLIGHT = "in_flight"
    PENDING_RETX = "pending_retx"


@dataclass
class HarqProcess:
    process_id: int = 0
    max_transmissions: int = N_MAX_TRANSMISSIONS
    status: HarqStatus = HarqStatus.IDLE
    packet_tbs_bits: int = 0
    payload_bits: float = 0.0
    rank: int = 1
    attempt: int = 0
    accumulated_sinr_linear: float = 0.0
    n_re_per_attempt: List[int] = field(default_factory=list)
    mcs_history: List[int] = field(default_factory=list)
    feedback_tti: Optional[int] = None
    pending_ack: Optional[bool] = None

    @property
    def idle(self) -> bool:
        return self.status == HarqStatus.IDLE

    def start(self, tbs_bits: int, payload_bits: float, rank: int):
        if not self.idle:
            raise RuntimeError(f"HARQ process {self.process_id} is busy ({self.status})")
        self.packet_tbs_bits = int(tbs_bits)
        self.payload_bits = float(payload_bits)
        self.rank = int(rank)
        self.attempt = 0
        self.accumulated_sinr_linear = 0.0
        self.n_re_per_attempt = []
        self.mcs_history = []

    def effective_sinr_db(self, current_sinr_linear: float) -> float:
        return effective_sinr_db(self.accumulated_sinr_linear, current_sinr_linear)

    def transmit(self, mcs: int, n_re: int, sinr_db: float, rng: np.random.Generator, feedback_tti: int, curves=LINK_CURVES) -> tuple[bool, float]:
        """
        Send one attempt, draw the decode outcome on the combined SINR.
        Returns (ack, effective_sinr_db); feedback is delivered at `feedback_tti`.
        """
        if self.attempt >= self.max_transmissions:
            raise RuntimeError(f"HARQ process {self.process_id} exceeded {self.max_transmissions} attempts")
        current = float(db_to_linear(sinr_db))
        eff_db = self.effective_sinr_db(current)
        ack = bool(rng.random() >= bler_probability(eff_db, mcs, curves))
        self.accumulated_sinr_linear += current
        self.attempt += 1
        self.n_re_per_attempt.append(int(n_re))
        self.mcs_history.append(int(mcs))
        self.status = HarqStatus.IN_FLIGHT
        self.feedback_tti = feedback_tti
        self.pending_ack = ack
        return ack, eff_db

    def deliver_feedback(self) -> tuple[bool, bool]:
        """Apply the pending outcome. Returns (ack, terminal)"""
        if self.status != HarqStatus.IN_FLIGHT:
            raise RuntimeError(f"No feedback pending on HARQ process {self.process_id}")
        ack = bool(self.pending_ack)
        terminal = ack or self.attempt >= self.max_transmissions
        self.status = HarqStatus.IDLE if terminal else HarqStatus.PENDING_RETX
        self.feedback_tti = None
        self.pending_ack = None
        return ack, terminal

    @property
    def dropped(self) -> bool:
        return self.attempt >= self.max_transmissions


class HarqEntity:
    """The HARQ processes of one UE"""

    def __init__(self, n_processes: int = 8, max_transmissions: int = N_MAX_TRANSMISSIONS):
        self.processes = [HarqProcess(process_id=i, max_transmissions=max_transmissions) for i in range(n_processes)]

    def free_process(self) -> Optional[HarqProcess]:
        for process in self.processes:
            if process.idle:
                return process
        return None

    def pending_retransmission(self) -> Optional[HarqProcess]:
        """Oldest-first is not tracked; lowest process id wins"""
        for process in self.processes:
            if process.status == HarqStatus.PENDING_RETX:
                return process
        return None

    def due_feedback(self, t: int) -> List[HarqProcess]:
        return [p for p in self.processes if p.status == HarqStatus.IN_FLIGHT and p.feedback_tti is not None and p.feedback_tti <= t]

    @property
    def in_flight_bits(self) -> float:
        return sum(p.payload_bits for p in self.processes if not p.idle)
