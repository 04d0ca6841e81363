"""
Benchmark registry.

Benchmarks are frozen: only the simulation seed varies between runs of one
benchmark. Every spec hashes to a stable id that is recorded with each
metrics row, so rows from different registry versions never mix silently.

    B1          1 site, 1 MIMO cell, 1 outdoor FB UE placed at a given distance
    B2a / B2b   1 site, 3 cells, MIMO / mMIMO, FB, 80% indoor
    B3          1 site, 3 mMIMO cells, eMBB, 80% indoor
    B4          1 site, 3 mMIMO cells, FB, outdoor, 100-200 km/h
    B5          3 sites, 9 mMIMO cells, FB + eMBB + chat, 80% indoor
    B2b-9cell   B2b on 3 sites
"""

import hashlib
from typing import Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from la_config import BenchSettings
from radio_sim.scenario import ReceiverType, ScenarioConfig, SiteType, TrafficKind, TrafficProfile, UeConfig, trisector_cells

B1_DISTANCES_M: Tuple[float, ...] = (40.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0, 900.0, 1000.0, 1100.0, 1250.0)


class UnknownBenchmarkError(KeyError, ValueError):
    pass


class UeMix(BaseModel):
    """UEs per site by traffic kind"""

    model_config = ConfigDict(frozen=True)

    full_buffer: int = Field(0, ge=0)
    embb: int = Field(0, ge=0)
    chat: int = Field(0, ge=0)


class BenchmarkSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    description: str = ""
    n_sites: int = 1
    sectors: int = 3
    site_type: SiteType = SiteType.MIMO
    cell_radius_m: float = 166.0
    bandwidth_mhz: float = 20.0
    tx_power_w: float = 20.0
    ue_mix: UeMix = UeMix(full_buffer=10)
    n_antennas: int = 4
    max_rank: int = 4
    receiver_type: ReceiverType = ReceiverType.TYPE0
    # cycled over UEs
    speeds_mps: Tuple[float, ...] = (0.67,)
    indoor_probability: float = Field(0.8, ge=0.0, le=1.0)
    traffic: TrafficProfile = TrafficProfile()
    n_seeds: int = 20
    duration_tti: int = 5000
    distances_m: Tuple[float, ...] = ()

    @property
    def spec_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()[:16]

    @property
    def n_cells(self) -> int:
        return self.n_sites * self.sectors

    def _ues(self, distance_m: Optional[float]) -> Tuple[UeConfig, ...]:
        kinds = [TrafficKind.FULL_BUFFER] * self.ue_mix.full_buffer + [TrafficKind.EMBB] * self.ue_mix.embb + [TrafficKind.CHAT] * self.ue_mix.chat
        kinds = kinds * self.n_sites
        ues = []
        for i, kind in enumerate(kinds):
            ues.append(
                UeConfig(
                    ue_id=i,
                    n_antennas=self.n_antennas,
                    max_rank=self.max_rank,
                    receiver_type=self.receiver_type,
                    speed_mps=self.speeds_mps[i % len(self.speeds_mps)],
                    traffic=kind,
                    indoor=False if distance_m is not None else None,
                    initial_position=(float(distance_m), 0.0) if distance_m is not None else None,
                )
            )
        return tuple(ues)

    def scenario(self, seed: int, distance_m: Optional[float] = None) -> ScenarioConfig:
        cells = trisector_cells(
            self.n_sites,
            site_types=self.site_type,
            cell_radius_m=self.cell_radius_m,
            bandwidth_mhz=self.bandwidth_mhz,
            tx_power_w=self.tx_power_w,
            sectors=self.sectors,
        )
        name = self.id if distance_m is None else f"{self.id}@{distance_m:g}m"
        return ScenarioConfig(
            name=name,
            cells=cells,
            ues=self._ues(distance_m),
            indoor_probability=self.indoor_probability,
            traffic=self.traffic,
            duration_tti=self.duration_tti,
            seed=int(seed),
        )

    def seeds(self, n: Optional[int] = None, offset: int = 0) -> List[int]:
        return list(range(offset, offset + (n or self.n_seeds)))


def _registry(settings: BenchSettings) -> Dict[str, BenchmarkSpec]:
    common = dict(n_seeds=settings.n_seeds, duration_tti=settings.duration_tti)
    specs = [
        BenchmarkSpec(
            id="B1",
            description="1-site 1-cell MIMO, single outdoor FB UE swept over distance",
            sectors=1,
            cell_radius_m=1200.0,
            ue_mix=UeMix(full_buffer=1),
            indoor_probability=0.0,
            distances_m=B1_DISTANCES_M,
            n_seeds=settings.b1_seeds_per_location,
            duration_tti=settings.duration_tti,
        ),
        BenchmarkSpec(id="B2a", description="1-site 3-cell MIMO, FB, 80% indoor", site_type=SiteType.MIMO, **common),
        BenchmarkSpec(id="B2b", description="1-site 3-cell mMIMO, FB, 80% indoor", site_type=SiteType.MMIMO, **common),
        BenchmarkSpec(
            id="B3",
            description="1-site 3-cell mMIMO, eMBB, 80% indoor",
            site_type=SiteType.MMIMO,
            ue_mix=UeMix(embb=10),
            **common,
        ),
        BenchmarkSpec(
            id="B4",
            description="1-site 3-cell mMIMO, FB, outdoor, 100-200 km/h",
            site_type=SiteType.MMIMO,
            indoor_probability=0.0,
            speeds_mps=(27.78, 33.33, 38.89, 44.44, 50.0, 55.56),
            **common,
        ),
        BenchmarkSpec(
            id="B5",
            description="3-site 9-cell mMIMO, FB + eMBB + chat, 80% indoor",
            n_sites=3,
            site_type=SiteType.MMIMO,
            ue_mix=UeMix(full_buffer=4, embb=4, chat=4),
            **common,
        ),
        BenchmarkSpec(id="B2b-9cell", description="3-site 9-cell mMIMO, FB, 80% indoor", n_sites=3, site_type=SiteType.MMIMO, **common),
    ]
    return {s.id: s for s in specs}


BENCHMARK_IDS: Tuple[str, ...] = ("B1", "B2a", "B2b", "B3", "B4", "B5", "B2b-9cell")


def benchmark_registry(settings: Optional[BenchSettings] = None, overrides: Optional[Dict[str, dict]] = None) -> Dict[str, BenchmarkSpec]:
    """All benchmarks; `overrides` maps an id to field updates (e.g. a different B5 UE mix)"""
    registry = _registry(settings or BenchSettings.from_config())
    for bench_id, updates in (overrides or {}).items():
        base = registry.get(bench_id)
        if base is None:
            raise UnknownBenchmarkError(bench_id)
        registry[bench_id] = BenchmarkSpec.model_validate({**base.model_dump(), **updates})
    return registry


def get_benchmark(bench_id: str, settings: Optional[BenchSettings] = None, overrides: Optional[Dict[str, dict]] = None) -> BenchmarkSpec:
    registry = benchmark_registry(settings, overrides)
    try:
        return registry[bench_id]
    except KeyError:
        raise UnknownBenchmarkError(f"unknown benchmark '{bench_id}', known: {', '.join(BENCHMARK_IDS)}") from None


def benchmark_scenarios(spec: BenchmarkSpec, seeds: Optional[Iterable[int]] = None) -> List[ScenarioConfig]:
    """Every scenario a run of `spec` covers, B1 expanded over its distances"""
    seeds = list(seeds) if seeds is not None else spec.seeds()
    if spec.distances_m:
        return [spec.scenario(seed, d) for d in spec.distances_m for seed in seeds]
    return [spec.scenario(seed) for seed in seeds]
