"""
Per-run metrics computed from the transmissions of one simulation.

    throughput      acked TBS bits / simulated seconds / cells
    SE              acked TBS bits / resource elements x layers spent on all attempts
    BLER            1 - ACKs / transmissions
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from radio_sim.mcs_table import N_MCS
from radio_sim.simulation import TransmissionOutcome

TTI_S = 1e-3


@dataclass
class MetricsRow:
    scenario: str
    seed: int
    policy: str
    spec_hash: str
    n_cells: int
    duration_tti: int
    transmissions: int
    mean_cell_throughput_bps: float
    mean_se: float
    bler: float
    mean_mcs: float
    mcs_histogram: List[int] = field(default_factory=list)
    per_ue_throughput_bps: Dict[int, float] = field(default_factory=dict)
    per_ue_bler: Dict[int, float] = field(default_factory=dict)
    distance_m: Optional[float] = None

    @property
    def mcs_cdf(self) -> np.ndarray:
        counts = np.asarray(self.mcs_histogram, dtype=float)
        total = counts.sum()
        return np.cumsum(counts) / total if total > 0 else np.zeros(N_MCS)

    def key(self) -> tuple:
        """Pairing key across policies"""
        return (self.scenario, self.spec_hash, self.seed, self.distance_m)

    def to_csv_row(self) -> dict:
        row = asdict(self)
        row["mcs_histogram"] = ";".join(str(c) for c in self.mcs_histogram)
        row["per_ue_throughput_bps"] = ";".join(f"{ue}:{v:.1f}" for ue, v in sorted(self.per_ue_throughput_bps.items()))
        row["per_ue_bler"] = ";".join(f"{ue}:{v:.4f}" for ue, v in sorted(self.per_ue_bler.items()))
        row["distance_m"] = "" if self.distance_m is None else self.distance_m
        return row

    @classmethod
    def from_csv_row(cls, row: dict) -> "MetricsRow":
        def pairs(raw: str, cast):
            return {int(k): cast(v) for k, v in (item.split(":") for item in raw.split(";") if item)}

        return cls(
            scenario=row["scenario"],
            seed=int(row["seed"]),
            policy=row["policy"],
            spec_hash=row["spec_hash"],
            n_cells=int(row["n_cells"]),
            duration_tti=int(row["duration_tti"]),
            transmissions=int(row["transmissions"]),
            mean_cell_throughput_bps=float(row["mean_cell_throughput_bps"]),
            mean_se=float(row["mean_se"]),
            bler=float(row["bler"]),
            mean_mcs=float(row["mean_mcs"]),
            mcs_histogram=[int(c) for c in row["mcs_histogram"].split(";") if c],
            per_ue_throughput_bps=pairs(row.get("per_ue_throughput_bps", ""), float),
            per_ue_bler=pairs(row.get("per_ue_bler", ""), float),
            distance_m=float(row["distance_m"]) if row.get("distance_m") not in (None, "") else None,
        )


def compute_metrics(
    outcomes: Sequence[TransmissionOutcome],
    scenario: str,
    seed: int,
    policy: str,
    spec_hash: str,
    n_cells: int,
    duration_tti: int,
    n_ues: int,
    distance_m: Optional[float] = None,
) -> MetricsRow:
    seconds = duration_tti * TTI_S
    n = len(outcomes)
    ack = np.array([o.ack for o in outcomes], dtype=bool)
    mcs = np.array([o.mcs for o in outcomes], dtype=int)
    ue = np.array([o.ue for o in outcomes], dtype=int)
    tbs = np.array([o.tbs_bits for o in outcomes], dtype=float)
    layer_re = np.array([o.n_re * o.rank for o in outcomes], dtype=float)

    delivered = np.where(ack, tbs, 0.0)
    per_ue_bits = np.bincount(ue, weights=delivered, minlength=n_ues) if n else np.zeros(n_ues)
    per_ue_tx = np.bincount(ue, minlength=n_ues) if n else np.zeros(n_ues, dtype=int)
    per_ue_nack = np.bincount(ue, weights=(~ack).astype(float), minlength=n_ues) if n else np.zeros(n_ues)

    return MetricsRow(
        scenario=scenario,
        seed=int(seed),
        policy=policy,
        spec_hash=spec_hash,
        n_cells=n_cells,
        duration_tti=duration_tti,
        transmissions=n,
        mean_cell_throughput_bps=float(delivered.sum() / seconds / n_cells),
        mean_se=float(delivered.sum() / layer_re.sum()) if n else 0.0,
        bler=float(1.0 - ack.mean()) if n else 0.0,
        mean_mcs=float(mcs.mean()) if n else 0.0,
        mcs_histogram=np.bincount(mcs, minlength=N_MCS).tolist() if n else [0] * N_MCS,
        per_ue_throughput_bps={i: float(per_ue_bits[i] / seconds) for i in range(n_ues)},
        per_ue_bler={i: float(per_ue_nack[i] / per_ue_tx[i]) for i in range(n_ues) if per_ue_tx[i] > 0},
        distance_m=distance_m,
    )


def aggregate(rows: Sequence[MetricsRow]) -> Dict[str, float]:
    """Means over runs, pooled MCS histogram"""
    if not rows:
        return {}
    hist = np.sum([r.mcs_histogram for r in rows], axis=0)
    tx = sum(r.transmissions for r in rows)
    return dict(
        runs=len(rows),
        mean_cell_throughput_bps=float(np.mean([r.mean_cell_throughput_bps for r in rows])),
        mean_se=float(np.mean([r.mean_se for r in rows])),
        bler=float(sum(r.bler * r.transmissions for r in rows) / tx) if tx else 0.0,
        mean_mcs=float((hist * np.arange(len(hist))).sum() / hist.sum()) if hist.sum() else 0.0,
    )
