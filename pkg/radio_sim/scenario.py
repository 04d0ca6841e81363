"""
Declarative deployment description: cells, UEs, traffic and seed.

A `ScenarioConfig` is the domain-randomization unit. It is validated on
construction and serializes to a JSON tree (`model_dump_json`).
"""

import hashlib
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

# Bandwidth (MHz) -> number of sub-bands
SUBBANDS_BY_BANDWIDTH: Dict[float, int] = {20: 51, 40: 106, 50: 133, 80: 217, 100: 273}


class ScenarioError(ValueError):
    pass


class SiteType(str, Enum):
    MIMO = "MIMO"
    MMIMO = "mMIMO"


class ReceiverType(str, Enum):
    TYPE0 = "type0"
    TYPE1 = "type1"
    TYPE2 = "type2"
    TYPE3 = "type3"


class TrafficKind(str, Enum):
    FULL_BUFFER = "FullBuffer"
    EMBB = "Embb"
    CHAT = "Chat"


# Receiver-type CSI estimation (bias dB, sigma dB)
RECEIVER_ERRORS: Dict[ReceiverType, Tuple[float, float]] = {
    ReceiverType.TYPE0: (0.0, 0.5),
    ReceiverType.TYPE1: (1.0, 1.0),
    ReceiverType.TYPE2: (-1.0, 1.0),
    ReceiverType.TYPE3: (0.0, 2.0),
}


class CellConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    cell_id: int
    site_id: int
    site_type: SiteType = SiteType.MIMO
    carrier_freq_ghz: float = 3.5
    bandwidth_mhz: float = 20
    n_subbands: int = 51
    tx_power_w: float = Field(20.0, gt=0.0)
    cell_radius_m: float = Field(166.0, gt=0.0)
    position: Tuple[float, float] = (0.0, 0.0)
    azimuth_deg: float = 0.0

    @field_validator("carrier_freq_ghz")
    @classmethod
    def _fixed_carrier(cls, value: float) -> float:
        if value != 3.5:
            raise ValueError("carrier frequency is fixed at 3.5 GHz")
        return value

    @model_validator(mode="after")
    def _bandwidth_pair(self):
        expected = SUBBANDS_BY_BANDWIDTH.get(self.bandwidth_mhz)
        if expected is None:
            raise ValueError(f"bandwidth {self.bandwidth_mhz} MHz not in {sorted(SUBBANDS_BY_BANDWIDTH)}")
        if expected != self.n_subbands:
            raise ValueError(f"bandwidth {self.bandwidth_mhz} MHz requires {expected} sub-bands, got {self.n_subbands}")
        return self


class UeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    ue_id: int
    n_antennas: int = 4
    max_rank: int = 4
    receiver_type: ReceiverType = ReceiverType.TYPE0
    speed_mps: float = Field(0.67, ge=0.0)
    indoor: Optional[bool] = None
    traffic: TrafficKind = TrafficKind.FULL_BUFFER
    initial_position: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def _antennas(self):
        if self.n_antennas not in (2, 4):
            raise ValueError(f"n_antennas must be 2 or 4, got {self.n_antennas}")
        if self.max_rank not in (2, 4):
            raise ValueError(f"max_rank must be 2 or 4, got {self.max_rank}")
        if self.max_rank > self.n_antennas:
            raise ValueError(f"max_rank {self.max_rank} exceeds n_antennas {self.n_antennas}")
        return self


class TrafficProfile(BaseModel):
    """Per-scenario overrides of the traffic model (None keeps config.ini)"""

    model_config = ConfigDict(frozen=True)

    embb_rate_per_s: Optional[float] = Field(None, ge=0.0)
    embb_mean_kb: Optional[float] = Field(None, gt=0.0)
    chat_rate_per_s: Optional[float] = Field(None, ge=0.0)


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "scenario"
    cells: Tuple[CellConfig, ...]
    ues: Tuple[UeConfig, ...]
    indoor_probability: float = Field(0.8, ge=0.0, le=1.0)
    traffic: TrafficProfile = TrafficProfile()
    duration_tti: int = Field(5000, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _ids(self):
        if not self.cells:
            raise ValueError("scenario needs at least one cell")
        if not self.ues:
            raise ValueError("scenario needs at least one UE")
        if len({c.cell_id for c in self.cells}) != len(self.cells):
            raise ValueError("duplicate cell_id")
        if len({u.ue_id for u in self.ues}) != len(self.ues):
            raise ValueError("duplicate ue_id")
        return self

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return self.model_copy(update={"seed": int(seed)})

    def fingerprint(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()[:16]


def validate_scenario(data: dict | ScenarioConfig) -> ScenarioConfig:
    """Validate a scenario tree, turning pydantic errors into ScenarioError"""
    if isinstance(data, ScenarioConfig):
        return data
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(str(e)) from e


def trisector_cells(
    n_sites: int,
    site_types: List[SiteType] | SiteType = SiteType.MIMO,
    cell_radius_m: float | List[float] = 166.0,
    bandwidth_mhz: float | List[float] = 20,
    tx_power_w: float | List[float] = 20.0,
    sectors: int = 3,
) -> Tuple[CellConfig, ...]:
    """
    Sites on a triangle with inter-site distance 1.5 x cell radius, `sectors` cells each.
    Per-site parameters may be given as lists.
    """

    def per_site(value, i):
        return value[i] if isinstance(value, (list, tuple)) else value

    radius0 = float(per_site(cell_radius_m, 0))
    isd = 1.5 * radius0
    anchors = [(0.0, 0.0), (isd, 0.0), (isd / 2.0, isd * 3**0.5 / 2.0)]
    cells = []
    for site in range(n_sites):
        if site < len(anchors):
            position = anchors[site]
        else:
            ring = site // len(anchors) + 1
            ax, ay = anchors[site % len(anchors)]
            position = (ax + ring * isd, ay)
        bandwidth = per_site(bandwidth_mhz, site)
        for sector in range(sectors):
            cells.append(
                CellConfig(
                    cell_id=len(cells),
                    site_id=site,
                    site_type=per_site(site_types, site),
                    bandwidth_mhz=bandwidth,
                    n_subbands=SUBBANDS_BY_BANDWIDTH[bandwidth],
                    tx_power_w=per_site(tx_power_w, site),
                    cell_radius_m=per_site(cell_radius_m, site),
                    position=position,
                    azimuth_deg=sector * 360.0 / sectors if sectors > 1 else 0.0,
                )
            )
    return tuple(cells)
