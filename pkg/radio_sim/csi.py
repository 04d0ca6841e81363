"""
CSI reporting: receiver-dependent SINR estimation, CQI quantization and rank.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from radio_sim.link_model import LINK_CURVES, sinr_to_cqi
from radio_sim.scenario import RECEIVER_ERRORS, ReceiverType

DEFAULT_RANK_THRESHOLDS_DB = (8.0, 16.0, 22.0)


@dataclass(frozen=True)
class CqiReport:
    cqi: int
    rank: int
    t_generated: int
    t_available: int

    def __post_init__(self):
        if not 0 <= self.cqi <= 15:
            raise ValueError(f"CQI out of range: {self.cqi}")
        if self.t_available <= self.t_generated:
            raise ValueError(f"report available at {self.t_available} before generation at {self.t_generated}")


def estimate_sinr_db(true_sinr_db: float, receiver_type: ReceiverType, rng: np.random.Generator | None, noiseless: bool = False) -> float:
    bias, sigma = RECEIVER_ERRORS[ReceiverType(receiver_type)]
    if noiseless:
        return true_sinr_db
    return true_sinr_db + bias + sigma * float(rng.standard_normal())


def reported_rank(sinr_db: float, max_rank: int, thresholds_db: Sequence[float] = DEFAULT_RANK_THRESHOLDS_DB) -> int:
    """1 + number of thresholds at or below the SINR, capped by max_rank"""
    rank = 1 + int(np.searchsorted(np.asarray(thresholds_db), sinr_db, side="right"))
    return max(1, min(rank, int(max_rank)))


def measure_cqi(
    true_sinr_db: float,
    receiver_type: ReceiverType,
    max_rank: int,
    t: int,
    rng: np.random.Generator | None = None,
    csi_delay: int = 4,
    rank_thresholds_db: Sequence[float] = DEFAULT_RANK_THRESHOLDS_DB,
    noiseless: bool = False,
    curves=LINK_CURVES,
) -> CqiReport:
    """
    Quantize a noisy SINR estimate into a report that becomes visible `csi_delay` TTIs later
    """
    if csi_delay < 1:
        raise ValueError(f"CSI delay must be at least one TTI: {csi_delay}")
    estimate = estimate_sinr_db(true_sinr_db, receiver_type, rng, noiseless)
    return CqiReport(
        cqi=sinr_to_cqi(estimate, curves),
        rank=reported_rank(estimate, max_rank, rank_thresholds_db),
        t_generated=t,
        t_available=t + csi_delay,
    )


def latest_available(reports: Sequence[CqiReport], t: int) -> CqiReport | None:
    """Newest report visible at t (reports are kept in generation order)"""
    for report in reversed(reports):
        if report.t_available <= t:
            return report
    return None
