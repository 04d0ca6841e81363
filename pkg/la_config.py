# Link adaptation configuration
import configparser
import os
from pathlib import Path
from typing import ClassVar, Literal, Tuple

import dotenv
from pydantic import BaseModel, ConfigDict, Field

dotenv.load_dotenv()

ROOT_DIR = Path(__file__).resolve().parent
CONFIG_PATH = Path(os.getenv("LA_CONFIG_PATH", str(ROOT_DIR / "config.ini")))
OUTPUT_DIR = Path(os.getenv("LA_OUTPUT_DIR", "runs"))

LA_CONFIG = configparser.ConfigParser()
LA_CONFIG.read(CONFIG_PATH)


def load_config(*paths: str | Path) -> configparser.ConfigParser:
    """
    Build a config with the defaults from `config.ini` and the given INI files layered on top.
    Later files win. Missing files raise FileNotFoundError.
    """
    cfg = configparser.ConfigParser()
    cfg.read_dict(LA_CONFIG)
    for path in paths:
        if not Path(path).is_file():
            raise FileNotFoundError(f"Config file not found: {path}")
        cfg.read(path)
    return cfg


def _floats(raw: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in raw.split(",") if v.strip())


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    SECTION: ClassVar[str] = ""

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser | None = None, **overrides):
        cfg = cfg if cfg is not None else LA_CONFIG
        values = {}
        for name, field in cls.model_fields.items():
            if not cfg.has_option(cls.SECTION, name):
                continue
            raw = cfg.get(cls.SECTION, name)
            if field.annotation is bool:
                values[name] = cfg.getboolean(cls.SECTION, name)
            elif field.annotation is int:
                values[name] = cfg.getint(cls.SECTION, name)
            elif field.annotation is float:
                values[name] = cfg.getfloat(cls.SECTION, name)
            elif field.annotation == Tuple[float, ...]:
                values[name] = _floats(raw)
            else:
                values[name] = raw
        values.update(overrides)
        return cls(**values)


class SimSettings(Settings):
    SECTION: ClassVar[str] = "Simulation"

    carrier_freq_ghz: float = 3.5
    csi_period: int = 5
    csi_delay: int = 4
    harq_delay: int = 4
    max_transmissions: int = 5
    harq_processes: int = 8
    subcarriers_per_subband: int = 12
    data_symbols: int = 13
    thermal_noise_dbm_hz: float = -174.0
    noise_figure_db: float = 7.0
    shadowing_sigma_db: float = 8.0
    fading_sigma_db: float = 4.0
    mmimo_gain_db: float = 6.0
    mmimo_interference_coupling: float = 0.5
    indoor_penalty_db: float = 20.0
    min_distance_m: float = 10.0
    rsrp_threshold_dbm: float = -130.0
    rank_thresholds_db: Tuple[float, ...] = (8.0, 16.0, 22.0)


class LinkCurveSettings(Settings):
    SECTION: ClassVar[str] = "LinkCurves"

    slope_per_db: float = 2.0
    gamma50_mcs0_db: float = -6.5
    gamma50_spacing_db: float = 1.72
    cqi_bler_target: float = 0.1
    cqi0_backoff_db: float = 3.0


class TrafficSettings(Settings):
    SECTION: ClassVar[str] = "Traffic"

    embb_rate_per_s: float = 2.0
    embb_mean_kb: float = 150.0
    embb_sigma: float = 0.6
    embb_min_kb: float = 20.0
    embb_max_kb: float = 1000.0
    chat_rate_per_s: float = 50.0
    chat_mean_kb: float = 1.0
    chat_sigma: float = 0.5
    chat_min_kb: float = 0.05
    chat_max_kb: float = 8.0


class MdpSettings(Settings):
    SECTION: ClassVar[str] = "MDP"

    k_interferers: int = 8
    k_csi: int = 5
    k_harq: int = 8
    k_la: int = 4
    aging_window: int = 50
    n_tti_cap: int = 8
    alpha: float = 0.5
    episode_timeout: int = 100


class OllaSettings(Settings):
    SECTION: ClassVar[str] = "Olla"

    bler_target: float = Field(0.1, gt=0.0, lt=1.0)
    step_ack_db: float = 0.1
    offset_clamp_db: float = 20.0
    reset_after_idle_tti: int = 0


class ReplaySettings(Settings):
    SECTION: ClassVar[str] = "Replay"

    n_shards: int = 4
    capacity: int = 100_000
    priority_exponent: float = 0.6
    is_exponent: float = 0.4
    priority_eps: float = 1e-3
    routing: Literal["round_robin", "fixed"] = "round_robin"
    prioritized_eviction: bool = False
    refresh_period: int = 1


class NetworkSettings(Settings):
    SECTION: ClassVar[str] = "Network"

    variant: Literal["mlp", "gcn", "gat"] = "mlp"
    hidden_layers: int = 6
    hidden_units: int = 256
    layer_norm: bool = True
    gnn_units: int = 32
    leaky_slope: float = 0.2
    layer_norm_eps: float = 1e-9
    double_dqn: bool = False


class OptimizerSettings(Settings):
    SECTION: ClassVar[str] = "Optimizer"

    learning_rate: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-4
    weight_decay_per_sample: float = 0.02 / 512
    max_grad_norm: float = 20.0
    loss: Literal["mse", "huber"] = "huber"
    huber_delta: float = 1.0


class LearnerSettings(Settings):
    SECTION: ClassVar[str] = "Learner"

    gamma: float = 1.0
    batch_size: int = 512
    prefetch_batches: int = 16
    warmup_transitions: int = 45_000
    target_update_interval: int = 2500
    publish_interval: int = 512
    checkpoint_every_snapshots: int = 10


class ActorSettings(Settings):
    SECTION: ClassVar[str] = "Actors"

    n_actors: int = 4
    env_slots: int = 4
    local_buffer: int = 500
    epsilon_base: float = 0.4
    epsilon_alpha: float = 8.5
    ingest_queue_depth: int = 64
    snapshot_poll_s: float = 1.0


class BenchSettings(Settings):
    SECTION: ClassVar[str] = "Bench"

    n_seeds: int = 20
    duration_tti: int = 5000
    workers: int = 1
    b1_seeds_per_location: int = 50
    master_seed: int = 2024


class RunStatsSettings(Settings):
    SECTION: ClassVar[str] = "RunStats"

    interval_s: float = 10.0
    audit_interval_s: float = 60.0
