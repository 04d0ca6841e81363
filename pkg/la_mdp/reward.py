"""
Reward of a transmission attempt and the SE bookkeeping it depends on.
"""

import math
from typing import Iterable, Sequence, Tuple


def reward(n: int, ack: bool, se_n: float, alpha: float) -> float:
    """SE of the packet on ACK, -alpha * n on NACK at attempt n"""
    if not 1 <= n <= 5:
        raise ValueError(f"attempt out of range [1, 5]: {n}")
    if ack:
        if se_n < 0:
            raise ValueError(f"negative spectral efficiency: {se_n}")
        return float(se_n)
    return -alpha * n


def se_on_success(tbs_bits: int, n_re_per_attempt: Sequence[int], rank: int) -> float:
    """Bits per RE per layer over the resources of every attempt"""
    if len(n_re_per_attempt) == 0:
        raise ValueError("no attempts recorded")
    if any(n <= 0 for n in n_re_per_attempt):
        raise ValueError(f"non-positive allocation in {list(n_re_per_attempt)}")
    return tbs_bits / (rank * sum(n_re_per_attempt))


def normalize_buffer(b_bytes: float, tbs_max_bits: int, n_tti_cap: float = 8.0) -> float:
    """Number of max-size transmissions needed to clear the buffer, clipped to the cap"""
    if b_bytes <= 0:
        return 0.0
    if math.isinf(b_bytes):
        return float(n_tti_cap)
    return min(float(n_tti_cap), 8.0 * b_bytes / tbs_max_bits)


def expected_se(reports: Iterable[Tuple[float, int]]) -> float:
    """Rank-weighted mean SE of the reports; 0.0 without any rank"""
    num = 0.0
    den = 0
    for se, rank in reports:
        if rank > 0:
            num += se * rank
            den += rank
    return num / den if den > 0 else 0.0
