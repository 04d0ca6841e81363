"""
Policy versus baseline comparison on paired runs.

Gains are relative, per run key (benchmark, spec hash, seed, distance):
    gain = 100 * (policy - baseline) / baseline
Box statistics use linear quantiles and whiskers reaching the furthest
sample within 2 x IQR of the quartiles; anything beyond is an outlier.
"""

from collections import defaultdict
from typing import Dict, List, Sequence

import numpy as np

from bench.metrics import MetricsRow

GAIN_METRICS = ("mean_cell_throughput_bps", "mean_se")
WHISKER_IQR = 2.0


class UnpairedRowsError(ValueError):
    pass


def relative_gain(value: float, baseline: float) -> float:
    if baseline == 0:
        return 0.0 if value == 0 else float(np.sign(value) * np.inf)
    return 100.0 * (value - baseline) / baseline


def paired_gains(rows_policy: Sequence[MetricsRow], rows_baseline: Sequence[MetricsRow], metric: str = "mean_cell_throughput_bps") -> Dict[tuple, float]:
    baseline = {r.key(): r for r in rows_baseline}
    gains = {}
    for row in rows_policy:
        base = baseline.get(row.key())
        if base is None:
            raise UnpairedRowsError(f"no baseline run for {row.key()}")
        gains[row.key()] = relative_gain(getattr(row, metric), getattr(base, metric))
    return gains


def boxplot_stats(values: Sequence[float], whisker_iqr: float = WHISKER_IQR) -> dict:
    x = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if x.size == 0:
        return dict(n=0, median=np.nan, mean=np.nan, q1=np.nan, q3=np.nan, iqr=np.nan, whisker_low=np.nan, whisker_high=np.nan, outliers=[])
    q1, median, q3 = np.percentile(x, [25, 50, 75])
    iqr = q3 - q1
    low_fence, high_fence = q1 - whisker_iqr * iqr, q3 + whisker_iqr * iqr
    inside = x[(x >= low_fence) & (x <= high_fence)]
    return dict(
        n=int(x.size),
        median=float(median),
        mean=float(x.mean()),
        q1=float(q1),
        q3=float(q3),
        iqr=float(iqr),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=sorted(float(v) for v in x[(x < low_fence) | (x > high_fence)]),
    )


def compare_vs_baseline(rows_policy: Sequence[MetricsRow], rows_baseline: Sequence[MetricsRow], metrics: Sequence[str] = GAIN_METRICS) -> List[dict]:
    """Gain table: one row per (benchmark, policy, metric) with box statistics of the per-run gains"""
    by_scenario: Dict[str, List[MetricsRow]] = defaultdict(list)
    for row in rows_policy:
        by_scenario[row.scenario].append(row)
    table = []
    for scenario, rows in sorted(by_scenario.items()):
        for metric in metrics:
            gains = paired_gains(rows, rows_baseline, metric)
            stats = boxplot_stats(list(gains.values()))
            outliers = stats.pop("outliers")
            table.append(
                dict(
                    scenario=scenario,
                    policy=rows[0].policy,
                    baseline=_baseline_name(rows_baseline),
                    metric=metric,
                    **stats,
                    outliers=";".join(f"{v:.3f}" for v in outliers),
                )
            )
    return table


def _baseline_name(rows: Sequence[MetricsRow]) -> str:
    names = sorted({r.policy for r in rows})
    return names[0] if len(names) == 1 else "+".join(names)
