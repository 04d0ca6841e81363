"""
Downlink traffic sources.

`FullBuffer` keeps the UE backlogged forever (buffer is +inf). `Embb` and
`Chat` draw Poisson arrivals per TTI with log-normal sizes clipped to a
[min, max] range; the log-normal location is set so the unclipped mean
equals the configured mean.
"""

import math
from abc import ABC, abstractmethod

import numpy as np

from la_config import TrafficSettings
from radio_sim.scenario import TrafficKind, TrafficProfile

TTI_S = 1e-3


class TrafficSource(ABC):
    full_buffer: bool = False

    @abstractmethod
    def arrivals(self, t: int, rng: np.random.Generator) -> float:
        """Bytes arriving at TTI t"""

    def initial_buffer(self) -> float:
        return 0.0


class FullBuffer(TrafficSource):
    full_buffer = True

    def arrivals(self, t: int, rng: np.random.Generator) -> float:
        return 0.0

    def initial_buffer(self) -> float:
        return math.inf


class PoissonLognormal(TrafficSource):
    def __init__(self, rate_per_s: float, mean_kb: float, sigma: float, min_kb: float, max_kb: float):
        if rate_per_s < 0:
            raise ValueError(f"arrival rate must be >= 0: {rate_per_s}")
        if not 0 < min_kb <= max_kb:
            raise ValueError(f"invalid size range [{min_kb}, {max_kb}] KB")
        self.rate_per_s = rate_per_s
        self.mean_kb = mean_kb
        self.sigma = sigma
        self.min_kb = min_kb
        self.max_kb = max_kb
        self.mu = math.log(mean_kb) - sigma**2 / 2.0

    def sample_sizes_bytes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        kb = np.clip(rng.lognormal(self.mu, self.sigma, size=n), self.min_kb, self.max_kb)
        return kb * 1000.0

    def arrivals(self, t: int, rng: np.random.Generator) -> float:
        if self.rate_per_s == 0:
            return 0.0
        n = rng.poisson(self.rate_per_s * TTI_S)
        if n == 0:
            return 0.0
        return float(self.sample_sizes_bytes(n, rng).sum())


class Embb(PoissonLognormal):
    pass


class Chat(PoissonLognormal):
    """Small packets at a high arrival rate"""


def make_source(kind: TrafficKind, profile: TrafficProfile | None = None, settings: TrafficSettings | None = None) -> TrafficSource:
    settings = settings or TrafficSettings.from_config()
    profile = profile or TrafficProfile()
    if kind == TrafficKind.FULL_BUFFER:
        return FullBuffer()
    if kind == TrafficKind.EMBB:
        return Embb(
            rate_per_s=profile.embb_rate_per_s if profile.embb_rate_per_s is not None else settings.embb_rate_per_s,
            mean_kb=profile.embb_mean_kb if profile.embb_mean_kb is not None else settings.embb_mean_kb,
            sigma=settings.embb_sigma,
            min_kb=settings.embb_min_kb,
            max_kb=settings.embb_max_kb,
        )
    if kind == TrafficKind.CHAT:
        return Chat(
            rate_per_s=profile.chat_rate_per_s if profile.chat_rate_per_s is not None else settings.chat_rate_per_s,
            mean_kb=settings.chat_mean_kb,
            sigma=settings.chat_sigma,
            min_kb=settings.chat_min_kb,
            max_kb=settings.chat_max_kb,
        )
    raise ValueError(f"Unknown traffic kind: {kind}")


def traffic_step(source: TrafficSource, t: int, rng: np.random.Generator) -> float:
    return source.arrivals(t, rng)
