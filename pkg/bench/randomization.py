"""
Domain randomization over deployment, traffic and UE parameters.

Every parameter is drawn independently and uniformly from its value set.
A scenario stream is the cross product of `n_configs` drawn parameter sets
and `n_seeds` simulation seeds in a permuted order: a prefix of the stream,
or an actor's stride of it, spans many deployments. Draws, seeds and order
are fully determined by the master seed. Chat traffic is never part of the
training space.
"""

from typing import Iterator, List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from radio_sim.scenario import (
    SUBBANDS_BY_BANDWIDTH,
    ReceiverType,
    ScenarioConfig,
    SiteType,
    TrafficKind,
    UeConfig,
    trisector_cells,
)

TrafficMix = Literal["FullBuffer", "Embb", "Mixed"]


class RandomizationSpace(BaseModel):
    """Value sets per randomized parameter; the first entry of each set is the test default"""

    model_config = ConfigDict(frozen=True)

    n_sites: int = 1
    sectors: int = 3
    site_type: Tuple[SiteType, ...] = (SiteType.MIMO, SiteType.MMIMO)
    cell_radius_m: Tuple[float, ...] = (166.0, 300.0, 600.0, 900.0, 1200.0)
    bandwidth_mhz: Tuple[float, ...] = (20.0, 40.0, 50.0, 80.0, 100.0)
    tx_power_w: Tuple[float, ...] = (20.0, 40.0, 50.0, 80.0, 100.0)
    ue_antennas: Tuple[int, ...] = (4, 2)
    max_rank: Tuple[int, ...] = (4, 2)
    traffic_mix: Tuple[TrafficMix, ...] = ("FullBuffer", "Embb", "Mixed")
    n_fb_ues: Tuple[int, ...] = (10, 1, 5)
    n_embb_ues: Tuple[int, ...] = (10, 5, 30, 50, 100)
    fb_speed_mps: Tuple[float, ...] = (0.67, 10.0, 15.0, 30.0)
    embb_speed_mps: Tuple[float, ...] = (0.67, 1.5, 3.0)
    receiver_type: Tuple[ReceiverType, ...] = (ReceiverType.TYPE0, ReceiverType.TYPE1, ReceiverType.TYPE2, ReceiverType.TYPE3)
    indoor_probability: Tuple[float, ...] = (0.8, 0.2, 0.4)
    duration_tti: int = 5000

    @field_validator("bandwidth_mhz")
    @classmethod
    def _known_bandwidths(cls, values):
        unknown = [b for b in values if b not in SUBBANDS_BY_BANDWIDTH]
        if unknown:
            raise ValueError(f"bandwidths without a sub-band pairing: {unknown}")
        return values

    @model_validator(mode="after")
    def _non_empty(self):
        for name, value in self:
            if isinstance(value, tuple) and not value:
                raise ValueError(f"value set '{name}' is empty")
        if min(self.max_rank) > max(self.ue_antennas):
            raise ValueError("no max_rank value fits any antenna count")
        return self

    def defaults(self) -> dict:
        """Test-scenario fixed values"""
        return {name: value[0] for name, value in self if isinstance(value, tuple)}


class ScenarioDraw(BaseModel):
    """One drawn parameter configuration, before seeding"""

    model_config = ConfigDict(frozen=True)

    index: int
    site_type: SiteType
    cell_radius_m: float
    bandwidth_mhz: float
    tx_power_w: float
    traffic_mix: TrafficMix
    indoor_probability: float
    ues: Tuple[UeConfig, ...]


def _pick(rng: np.random.Generator, values):
    return values[int(rng.integers(len(values)))]


def _draw_ue(rng: np.random.Generator, space: RandomizationSpace, ue_id: int, traffic: TrafficKind) -> UeConfig:
    antennas = _pick(rng, space.ue_antennas)
    ranks = [r for r in space.max_rank if r <= antennas] or [min(space.max_rank)]
    speeds = space.fb_speed_mps if traffic == TrafficKind.FULL_BUFFER else space.embb_speed_mps
    return UeConfig(
        ue_id=ue_id,
        n_antennas=antennas,
        max_rank=_pick(rng, ranks),
        receiver_type=_pick(rng, space.receiver_type),
        speed_mps=_pick(rng, speeds),
        traffic=traffic,
    )


def draw_config(rng: np.random.Generator, space: RandomizationSpace, index: int = 0) -> ScenarioDraw:
    mix = _pick(rng, space.traffic_mix)
    kinds: List[TrafficKind] = []
    if mix in ("FullBuffer", "Mixed"):
        kinds += [TrafficKind.FULL_BUFFER] * _pick(rng, space.n_fb_ues)
    if mix in ("Embb", "Mixed"):
        kinds += [TrafficKind.EMBB] * _pick(rng, space.n_embb_ues)
    return ScenarioDraw(
        index=index,
        site_type=_pick(rng, space.site_type),
        cell_radius_m=_pick(rng, space.cell_radius_m),
        bandwidth_mhz=_pick(rng, space.bandwidth_mhz),
        tx_power_w=_pick(rng, space.tx_power_w),
        traffic_mix=mix,
        indoor_probability=_pick(rng, space.indoor_probability),
        ues=tuple(_draw_ue(rng, space, i, kind) for i, kind in enumerate(kinds)),
    )


def draw_to_scenario(draw: ScenarioDraw, space: RandomizationSpace, seed: int) -> ScenarioConfig:
    cells = trisector_cells(
        space.n_sites,
        site_types=draw.site_type,
        cell_radius_m=draw.cell_radius_m,
        bandwidth_mhz=draw.bandwidth_mhz,
        tx_power_w=draw.tx_power_w,
        sectors=space.sectors,
    )
    return ScenarioConfig(
        name=f"train-{draw.index:04d}",
        cells=cells,
        ues=draw.ues,
        indoor_probability=draw.indoor_probability,
        duration_tti=space.duration_tti,
        seed=seed,
    )


def default_scenario(space: RandomizationSpace | None = None, seed: int = 0, n_ues: int | None = None) -> ScenarioConfig:
    """The space's default values as a single FB scenario"""
    space = space or RandomizationSpace()
    d = space.defaults()
    ues = tuple(
        UeConfig(ue_id=i, n_antennas=d["ue_antennas"], max_rank=min(d["max_rank"], d["ue_antennas"]), receiver_type=d["receiver_type"], speed_mps=d["fb_speed_mps"])
        for i in range(n_ues or d["n_fb_ues"])
    )
    draw = ScenarioDraw(
        index=0,
        site_type=d["site_type"],
        cell_radius_m=d["cell_radius_m"],
        bandwidth_mhz=d["bandwidth_mhz"],
        tx_power_w=d["tx_power_w"],
        traffic_mix="FullBuffer",
        indoor_probability=d["indoor_probability"],
        ues=ues,
    )
    return draw_to_scenario(draw, space, seed).model_copy(update={"name": "default"})


def scenario_seeds(master_seed: int, n_seeds: int) -> List[int]:
    rng = np.random.default_rng([master_seed, 1])
    return [int(s) for s in rng.choice(2**31 - 1, size=n_seeds, replace=False)]


def generate_training_scenarios(
    space: RandomizationSpace | None = None,
    n_configs: int = 250,
    n_seeds: int = 160,
    master_seed: int = 2024,
) -> Iterator[ScenarioConfig]:
    """
    Every (config, seed) pair exactly once, in a permuted order; the same
    master seed always yields the same stream
    """
    space = space or RandomizationSpace()
    rng = np.random.default_rng([master_seed, 0])
    draws = [draw_config(rng, space, index) for index in range(n_configs)]
    seeds = scenario_seeds(master_seed, n_seeds)
    order = np.random.default_rng([master_seed, 2]).permutation(n_configs * n_seeds)
    for k in order:
        config, seed = divmod(int(k), n_seeds)
        yield draw_to_scenario(draws[config], space, seeds[seed])


def training_stream(space: RandomizationSpace | None = None, n_configs: int = 250, n_seeds: int = 160, master_seed: int = 2024):
    """Zero-argument factory restarting the same stream, as actors expect"""

    def stream() -> Iterator[ScenarioConfig]:
        return generate_training_scenarios(space, n_configs, n_seeds, master_seed)

    return stream
