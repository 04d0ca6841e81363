"""
CSV series for every figure kind; rendering is left to whatever reads them.

    gains      box statistics of per-run gains over the baseline
    mcs-cdf    CDF of the selected MCS index per policy and scenario
    bler-cdf   empirical CDF of per-UE BLER per policy and scenario
    ingestion  batches per minute per actor over time
    alpha      BLER, MCS and throughput per robustness weight
    arch       gains per network architecture
"""

from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from bench.compare import compare_vs_baseline
from bench.metrics import MetricsRow, aggregate
from la_tools import get_logger, read_csv, write_csv

logger = get_logger("PlotData")

PLOT_KINDS = ("gains", "mcs-cdf", "bler-cdf", "ingestion", "alpha", "arch")


def _by_policy_scenario(rows: Sequence[MetricsRow]) -> Dict[tuple, List[MetricsRow]]:
    groups: Dict[tuple, List[MetricsRow]] = defaultdict(list)
    for row in rows:
        groups[(row.policy, row.scenario)].append(row)
    return groups


def gains_series(rows: Sequence[MetricsRow], baseline: str = "olla") -> List[dict]:
    base = [r for r in rows if r.policy == baseline]
    others = defaultdict(list)
    for r in rows:
        if r.policy != baseline:
            others[r.policy].append(r)
    series = []
    for policy in sorted(others):
        series.extend(compare_vs_baseline(others[policy], base))
    return series


def mcs_cdf_series(rows: Sequence[MetricsRow]) -> List[dict]:
    series = []
    for (policy, scenario), group in sorted(_by_policy_scenario(rows).items()):
        hist = np.sum([r.mcs_histogram for r in group], axis=0).astype(float)
        cdf = np.cumsum(hist) / hist.sum() if hist.sum() > 0 else np.zeros_like(hist)
        series.extend(dict(policy=policy, scenario=scenario, mcs=m, pmf=hist[m] / max(hist.sum(), 1.0), cdf=float(cdf[m])) for m in range(len(hist)))
    return series


def bler_cdf_series(rows: Sequence[MetricsRow]) -> List[dict]:
    series = []
    for (policy, scenario), group in sorted(_by_policy_scenario(rows).items()):
        values = np.sort([b for r in group for b in r.per_ue_bler.values()])
        n = len(values)
        series.extend(dict(policy=policy, scenario=scenario, bler=float(v), cdf=(i + 1) / n) for i, v in enumerate(values))
    return series


def ingestion_series(runstats: Sequence[dict]) -> List[dict]:
    """Actor rows of runstats.csv"""
    return [
        dict(elapsed_s=float(r["elapsed_s"]), actor=r["source"], batches_per_min=float(r["batches_per_min"]))
        for r in runstats
        if str(r.get("source", "")).startswith("actor") and r.get("batches_per_min") not in (None, "")
    ]


def alpha_series(rows_by_alpha: Dict[float, Sequence[MetricsRow]]) -> List[dict]:
    series = []
    for alpha in sorted(rows_by_alpha):
        summary = aggregate(rows_by_alpha[alpha])
        series.append(dict(alpha=alpha, bler=summary["bler"], mean_mcs=summary["mean_mcs"], mean_cell_throughput_bps=summary["mean_cell_throughput_bps"]))
    return series


def arch_series(arch_table: Sequence[dict]) -> List[dict]:
    keep = ("arch", "scenario", "metric", "median", "q1", "q3", "whisker_low", "whisker_high")
    return [{k: row[k] for k in keep} for row in arch_table]


def alpha_from_policy(policy: str) -> float:
    """`alpha=0.5` -> 0.5"""
    return float(policy.split("=", 1)[1])


def load_metrics(paths: Sequence[str | Path]) -> List[MetricsRow]:
    return [MetricsRow.from_csv_row(row) for path in paths for row in read_csv(path)]


def emit(kind: str, inputs: Sequence[str | Path], out_path: str | Path, baseline: str = "olla") -> int:
    """Read metrics / runstats / sweep CSVs and write the series of `kind`"""
    if kind == "ingestion":
        series = ingestion_series([row for path in inputs for row in read_csv(path)])
    elif kind == "arch":
        series = arch_series([row for path in inputs for row in read_csv(path)])
    else:
        rows = load_metrics(inputs)
        if kind == "gains":
            series = gains_series(rows, baseline)
        elif kind == "mcs-cdf":
            series = mcs_cdf_series(rows)
        elif kind == "bler-cdf":
            series = bler_cdf_series(rows)
        elif kind == "alpha":
            by_alpha: Dict[float, List[MetricsRow]] = defaultdict(list)
            for row in rows:
                if row.policy.startswith("alpha="):
                    by_alpha[alpha_from_policy(row.policy)].append(row)
            series = alpha_series(by_alpha)
        else:
            raise ValueError(f"Unknown plot kind '{kind}', expected one of {', '.join(PLOT_KINDS)}")
    written = write_csv(out_path, series)
    logger.info("PLOT_DATA_WRITTEN", extra=dict(kind=kind, rows=written, path=str(out_path)))
    return written
