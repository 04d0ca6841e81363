"""
Training presets and the train-then-evaluate sweeps built on them.

generalized   the full randomization space (configs x seeds)
specialized   B2a / B2b / B4 in equal parts, randomized over seeds only
"""

from pathlib import Path
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple

from bench.benchmarks import BenchmarkSpec, benchmark_registry
from bench.compare import compare_vs_baseline
from bench.metrics import MetricsRow
from bench.randomization import RandomizationSpace, scenario_seeds, training_stream
from bench.runner import PolicySpec, run_benchmark
from channel_logger import ChannelLogger
from la_config import BenchSettings
from la_tools import get_logger
from learner.qnetwork import ARCHITECTURE_GRID, arch_label
from radio_sim.scenario import ScenarioConfig
from runtime.trainer import ScenarioStream, TrainingConfig, train

logger = get_logger("Presets")

PresetName = Literal["generalized", "specialized"]
ALPHA_SWEEP: Tuple[float, ...] = (0.0, 0.5, 2.0)
SPECIALIZED_BENCHMARKS: Tuple[str, ...] = ("B2a", "B2b", "B4")


def specialized_stream(n_seeds: int = 160, master_seed: int = 2024, duration_tti: Optional[int] = None, settings: Optional[BenchSettings] = None) -> ScenarioStream:
    registry = benchmark_registry(settings)
    specs = [registry[b] for b in SPECIALIZED_BENCHMARKS]
    if duration_tti is not None:
        specs = [s.model_copy(update={"duration_tti": duration_tti}) for s in specs]
    # training seeds never overlap the small evaluation seed range
    seeds = [s + 1_000_000 for s in scenario_seeds(master_seed, n_seeds)]

    def stream() -> Iterator[ScenarioConfig]:
        for seed in seeds:
            for spec in specs:
                yield spec.scenario(seed)

    return stream


def preset_stream(
    name: PresetName = "generalized",
    space: Optional[RandomizationSpace] = None,
    n_configs: int = 250,
    n_seeds: int = 160,
    master_seed: int = 2024,
) -> ScenarioStream:
    if name == "generalized":
        return training_stream(space, n_configs, n_seeds, master_seed)
    if name == "specialized":
        return specialized_stream(n_seeds, master_seed, duration_tti=space.duration_tti if space is not None else None)
    raise ValueError(f"Unknown training preset: {name}")


def _train_and_eval(
    label: str,
    stream: ScenarioStream,
    tc: TrainingConfig,
    bench: BenchmarkSpec,
    seeds: Sequence[int],
    out_dir: Path,
    train_kwargs: dict,
    alpha: Optional[float] = None,
    workers: int = 1,
    channel_logger: Optional[ChannelLogger] = None,
) -> List[MetricsRow]:
    run = train(stream, tc, out_dir=out_dir, alpha=alpha, channel_logger=channel_logger, **train_kwargs)
    policy = PolicySpec(kind="checkpoint", checkpoint=str(run.final_checkpoint), label=label)
    return run_benchmark(bench, policy, seeds, workers=workers, mdp=tc.mdp, sim=tc.sim, channel_logger=channel_logger)


def sweep_alpha(
    stream: ScenarioStream,
    tc: TrainingConfig,
    bench: BenchmarkSpec,
    seeds: Sequence[int],
    out_dir: str | Path,
    alphas: Sequence[float] = ALPHA_SWEEP,
    train_kwargs: Optional[dict] = None,
    workers: int = 1,
    channel_logger: Optional[ChannelLogger] = None,
) -> Dict[float, List[MetricsRow]]:
    """Policies that differ only in the robustness weight"""
    results = {}
    for alpha in alphas:
        label = f"alpha={alpha:g}"
        logger.info("SWEEP_ALPHA", extra=dict(alpha=alpha, benchmark=bench.id))
        tc_alpha = tc.override(mdp=dict(alpha=alpha))
        results[alpha] = _train_and_eval(
            label, stream, tc_alpha, bench, seeds, Path(out_dir) / f"alpha_{alpha:g}", dict(train_kwargs or {}), alpha, workers, channel_logger
        )
    return results


def sweep_arch(
    stream: ScenarioStream,
    tc: TrainingConfig,
    bench: BenchmarkSpec,
    seeds: Sequence[int],
    out_dir: str | Path,
    grid: Sequence[Tuple[int, int, bool]] = ARCHITECTURE_GRID,
    train_kwargs: Optional[dict] = None,
    workers: int = 1,
    channel_logger: Optional[ChannelLogger] = None,
) -> List[dict]:
    """Gain table over OLLA for every architecture of the grid"""
    baseline = run_benchmark(bench, PolicySpec(kind="olla"), seeds, workers=workers, mdp=tc.mdp, sim=tc.sim)
    table = []
    for layers, units, layer_norm in grid:
        label = arch_label(layers, units, layer_norm)
        logger.info("SWEEP_ARCH", extra=dict(arch=label, benchmark=bench.id))
        tc_arch = tc.override(network=dict(hidden_layers=layers, hidden_units=units, layer_norm=layer_norm))
        slug = f"{layers}x{units}" + ("_ln" if layer_norm else "")
        rows = _train_and_eval(label, stream, tc_arch, bench, seeds, Path(out_dir) / f"arch_{slug}", dict(train_kwargs or {}), None, workers, channel_logger)
        for entry in compare_vs_baseline(rows, baseline):
            table.append(dict(arch=label, **entry))
    return table
