from bench.benchmarks import BENCHMARK_IDS, BenchmarkSpec, UnknownBenchmarkError, benchmark_registry, get_benchmark
from bench.compare import boxplot_stats, compare_vs_baseline, paired_gains
from bench.metrics import MetricsRow, compute_metrics
from bench.randomization import RandomizationSpace, generate_training_scenarios
from bench.runner import PolicySpec, make_policy, run_benchmark

__all__ = [
    "BENCHMARK_IDS",
    "BenchmarkSpec",
    "MetricsRow",
    "PolicySpec",
    "RandomizationSpace",
    "UnknownBenchmarkError",
    "benchmark_registry",
    "boxplot_stats",
    "compare_vs_baseline",
    "compute_metrics",
    "generate_training_scenarios",
    "get_benchmark",
    "make_policy",
    "paired_gains",
    "run_benchmark",
]
