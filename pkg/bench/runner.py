"""
Benchmark runner: one simulation per (benchmark, seed[, distance]) under a policy.

Policies are described by a `PolicySpec` and instantiated inside the worker,
so seeds can run in a process pool. RL checkpoints are evaluated greedily
and must carry the feature schema the environment encodes with.
"""

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict

from bench.benchmarks import BenchmarkSpec
from bench.metrics import MetricsRow, compute_metrics
from channel_logger import ChannelLogger
from la_config import MdpSettings, OllaSettings, SimSettings
from la_mdp.environment import LaEnvironment
from la_mdp.features import la_feature_schema
from la_tools import get_logger
from learner.checkpoint import load_checkpoint
from policies.base_policy import LaPolicy
from policies.olla import OllaPolicy
from policies.q_policy import QPolicy
from policies.scripted import FixedMcsPolicy, InnerLoopPolicy, RandomMcsPolicy

logger = get_logger("BenchRunner")

PolicyKind = Literal["olla", "checkpoint", "fixed", "random", "inner-loop"]


class PolicySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: PolicyKind = "olla"
    checkpoint: Optional[str] = None
    mcs: int = 0
    seed: int = 0
    label: Optional[str] = None

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "checkpoint":
            return Path(self.checkpoint).stem if self.checkpoint else "rl"
        if self.kind == "fixed":
            return f"fixed{self.mcs}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "PolicySpec":
        """`olla`, `random`, `inner-loop`, `fixed:<mcs>`, or a checkpoint path"""
        kind, _, arg = text.partition(":")
        if kind in ("olla", "random", "inner-loop"):
            return cls(kind=kind)
        if kind == "fixed":
            return cls(kind="fixed", mcs=int(arg or 0))
        return cls(kind="checkpoint", checkpoint=text)


def make_policy(spec: PolicySpec, mdp: Optional[MdpSettings] = None, olla: Optional[OllaSettings] = None) -> LaPolicy:
    """Raises SchemaMismatchError when a checkpoint was trained on other features"""
    if spec.kind == "olla":
        policy = OllaPolicy(olla)
    elif spec.kind == "fixed":
        policy = FixedMcsPolicy(spec.mcs)
    elif spec.kind == "random":
        policy = RandomMcsPolicy(spec.seed)
    elif spec.kind == "inner-loop":
        policy = InnerLoopPolicy()
    elif spec.kind == "checkpoint":
        if not spec.checkpoint:
            raise ValueError("checkpoint policy needs a checkpoint path")
        net, _, _ = load_checkpoint(spec.checkpoint, expected_schema=la_feature_schema(mdp))
        policy = QPolicy(net, epsilon=0.0, seed=spec.seed)
    else:
        raise ValueError(f"Unknown policy kind: {spec.kind}")
    policy.name = spec.name
    return policy


def run_one(
    bench: BenchmarkSpec,
    policy: PolicySpec,
    seed: int,
    distance_m: Optional[float] = None,
    mdp: Optional[MdpSettings] = None,
    sim: Optional[SimSettings] = None,
    olla: Optional[OllaSettings] = None,
) -> MetricsRow:
    mdp = mdp or MdpSettings.from_config()
    instance = make_policy(policy, mdp, olla)
    cfg = bench.scenario(seed, distance_m)
    env = LaEnvironment(cfg, settings=mdp, sim_settings=sim, encode=instance.needs_features, record=False)
    outcomes = instance.run_episode(env)
    return compute_metrics(
        outcomes,
        scenario=bench.id,
        seed=seed,
        policy=instance.name,
        spec_hash=bench.spec_hash,
        n_cells=len(cfg.cells),
        duration_tti=cfg.duration_tti,
        n_ues=len(cfg.ues),
        distance_m=distance_m,
    )


def _run_job(job: tuple) -> MetricsRow:
    return run_one(*job)


def run_benchmark(
    bench: BenchmarkSpec,
    policy: PolicySpec,
    seeds: Optional[Iterable[int]] = None,
    workers: int = 1,
    mdp: Optional[MdpSettings] = None,
    sim: Optional[SimSettings] = None,
    olla: Optional[OllaSettings] = None,
    channel_logger: Optional[ChannelLogger] = None,
) -> List[MetricsRow]:
    """
    One MetricsRow per seed (per distance and seed for distance sweeps),
    in job order whatever the worker count.
    """
    seeds = list(seeds) if seeds is not None else bench.seeds()
    distances: Sequence[Optional[float]] = bench.distances_m or (None,)
    # fail fast on a bad checkpoint before forking workers
    make_policy(policy, mdp, olla)
    jobs = [(bench, policy, seed, d, mdp, sim, olla) for d in distances for seed in seeds]
    logger.info("BENCHMARK_STARTED", extra=dict(benchmark=bench.id, policy=policy.name, runs=len(jobs), workers=workers))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_job, jobs))
    else:
        rows = [_run_job(job) for job in jobs]

    if channel_logger is not None:
        for row in rows:
            channel_logger.log_to_bench(row.to_csv_row())
        channel_logger.flush_buffer(ChannelLogger.BENCH)
    logger.info("BENCHMARK_FINISHED", extra=dict(benchmark=bench.id, policy=policy.name, runs=len(rows)))
    return rows


def run_b1_sweep(bench: BenchmarkSpec, policy: PolicySpec, seeds_per_location: Optional[int] = None, distances: Optional[Sequence[float]] = None, **kwargs) -> List[MetricsRow]:
    """Link curve of one UE moved away from its cell"""
    if distances is not None:
        bench = bench.model_copy(update={"distances_m": tuple(distances)})
    return run_benchmark(bench, policy, bench.seeds(seeds_per_location), **kwargs)
