"""
MCS and CQI tables

Modulation order and code rate pairs follow the 256QAM NR tables. Spectral
efficiency per layer is Qm * R. CQI k is bound to an MCS index whose link
curve defines the CQI threshold.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from cachetools import LRUCache, cached

N_MCS = 28
N_CQI = 16
MAX_RANK = 4

# (Qm, R x 1024)
_MCS_QM_R = (
    (2, 120), (2, 193), (2, 308), (2, 449), (2, 602),
    (4, 378), (4, 434), (4, 490), (4, 553), (4, 616), (4, 658),
    (6, 466), (6, 517), (6, 567), (6, 616), (6, 666), (6, 719), (6, 772), (6, 822), (6, 873),
    (8, 682.5), (8, 711), (8, 754), (8, 797), (8, 841), (8, 885), (8, 916.5), (8, 948),
)

# CQI 1..15 (CQI 0 is out of range)
_CQI_QM_R = (
    (2, 78), (2, 193), (2, 449),
    (4, 378), (4, 490), (4, 616),
    (6, 466), (6, 567), (6, 666), (6, 772), (6, 873),
    (8, 711), (8, 797), (8, 885), (8, 948),
)

# MCS index whose link curve gives the BLER of CQI k (index 0 unused)
CQI_TO_MCS = (0, 0, 1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27)


class McsRangeError(ValueError):
    pass


@dataclass(frozen=True)
class McsEntry:
    mcs_index: int
    modulation_order: int
    code_rate: float
    se_per_layer: float


@dataclass(frozen=True)
class McsTable:
    entries: Tuple[McsEntry, ...]
    tbs_max_bits: int

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def se(self) -> np.ndarray:
        return np.array([e.se_per_layer for e in self.entries])

    def se_of(self, mcs: int) -> float:
        check_mcs(mcs)
        return self.entries[mcs].se_per_layer


def check_mcs(mcs: int) -> int:
    if not 0 <= int(mcs) < N_MCS:
        raise McsRangeError(f"MCS index out of range [0, {N_MCS - 1}]: {mcs}")
    return int(mcs)


def _entries() -> Tuple[McsEntry, ...]:
    return tuple(McsEntry(i, qm, r / 1024.0, qm * r / 1024.0) for i, (qm, r) in enumerate(_MCS_QM_R))


MCS_SE = np.array([qm * r / 1024.0 for qm, r in _MCS_QM_R])
CQI_SE = np.array([0.0] + [qm * r / 1024.0 for qm, r in _CQI_QM_R])


def n_re_full_band(n_subbands: int, subcarriers_per_subband: int = 12, data_symbols: int = 13) -> int:
    return int(n_subbands) * subcarriers_per_subband * data_symbols


@cached(cache=LRUCache(maxsize=64))
def tbs_max_bits_for(n_re: int, max_rank: int = MAX_RANK) -> int:
    """Largest TBS of the table at the given allocation and rank"""
    return int(np.floor(n_re * MCS_SE[-1] * max_rank))


def build_mcs_table(n_re: int, max_rank: int = MAX_RANK) -> McsTable:
    return McsTable(entries=_entries(), tbs_max_bits=tbs_max_bits_for(n_re, max_rank))


def tbs_bits(mcs: int, n_re: int, rank: int, se_table: np.ndarray = MCS_SE) -> int:
    """Transport block size of an initial transmission: floor(n_re * SE(mcs) * rank)"""
    check_mcs(mcs)
    if n_re <= 0:
        return 0
    return int(np.floor(n_re * se_table[mcs] * rank))


def cqi_se(cqi: int) -> float:
    """Nominal spectral efficiency of a CQI index, 0 for CQI 0"""
    return float(CQI_SE[int(cqi)])
