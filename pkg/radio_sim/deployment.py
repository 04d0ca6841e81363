"""
Geometry of a deployment: UE drops, indoor flags and the slow link budget.

All arrays are indexed [ue, cell] in the order of `cfg.ues` and `cfg.cells`.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from la_config import SimSettings
from radio_sim.link_model import pathloss_db, rsrp_dbm, sector_gain_db, watts_to_dbm
from radio_sim.scenario import ScenarioConfig, SiteType


@dataclass(frozen=True)
class LinkState:
    """Slow link budget of one UE plus the current fast-fading draw on its serving link"""

    pathloss_db: float
    shadowing_db: float
    fast_fading_db: float
    serving_cell: int
    neighbor_rsrp_dbm: Tuple[Tuple[int, float], ...]  # strongest first


@dataclass
class Deployment:
    positions: np.ndarray  # (n_ue, 2)
    indoor: np.ndarray  # (n_ue,)
    distance_m: np.ndarray  # (n_ue, n_cell)
    pathloss_db: np.ndarray
    shadowing_db: np.ndarray
    antenna_gain_db: np.ndarray
    rsrp_dbm: np.ndarray
    serving: np.ndarray  # (n_ue,) cell index


def sectors_per_site(cfg: ScenarioConfig) -> dict:
    counts: dict = {}
    for cell in cfg.cells:
        counts[cell.site_id] = counts.get(cell.site_id, 0) + 1
    return counts


def drop_ues(cfg: ScenarioConfig, rng: np.random.Generator, min_distance_m: float = 10.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Uniform drop over the area of a randomly chosen cell (disk for omni cells,
    the cell's sector otherwise). Explicit initial positions and indoor flags win.
    """
    n_sectors = sectors_per_site(cfg)
    positions = np.zeros((len(cfg.ues), 2))
    indoor = np.zeros(len(cfg.ues), dtype=bool)
    for i, ue in enumerate(cfg.ues):
        cell = cfg.cells[int(rng.integers(len(cfg.cells)))]
        radius = max(cell.cell_radius_m * np.sqrt(rng.random()), min_distance_m)
        half_width = 180.0 / n_sectors[cell.site_id]
        angle = np.deg2rad(cell.azimuth_deg + rng.uniform(-half_width, half_width))
        dropped = (cell.position[0] + radius * np.cos(angle), cell.position[1] + radius * np.sin(angle))
        positions[i] = ue.initial_position if ue.initial_position is not None else dropped
        is_indoor = rng.random() < cfg.indoor_probability
        indoor[i] = ue.indoor if ue.indoor is not None else is_indoor
    return positions, indoor


def build_deployment(cfg: ScenarioConfig, rng: np.random.Generator, sim: SimSettings) -> Deployment:
    positions, indoor = drop_ues(cfg, rng, sim.min_distance_m)
    sites = np.array([c.position for c in cfg.cells], dtype=float)
    delta = positions[:, None, :] - sites[None, :, :]
    distance = np.hypot(delta[..., 0], delta[..., 1])

    # Sectors of one site share the shadowing draw
    site_ids = sorted({c.site_id for c in cfg.cells})
    site_shadow = rng.normal(0.0, sim.shadowing_sigma_db, size=(len(cfg.ues), len(site_ids)))
    shadowing = site_shadow[:, [site_ids.index(c.site_id) for c in cfg.cells]]

    pl = pathloss_db(distance, indoor[:, None], sim.indoor_penalty_db, sim.min_distance_m)

    n_sectors = sectors_per_site(cfg)
    bearing = np.rad2deg(np.arctan2(delta[..., 1], delta[..., 0]))
    gain = np.zeros_like(distance)
    for j, cell in enumerate(cfg.cells):
        if n_sectors[cell.site_id] > 1:
            gain[:, j] = sector_gain_db(bearing[:, j] - cell.azimuth_deg)

    tx_dbm = watts_to_dbm([c.tx_power_w for c in cfg.cells])
    rsrp = rsrp_dbm(tx_dbm[None, :], pl, shadowing, gain)
    return Deployment(
        positions=positions,
        indoor=indoor,
        distance_m=distance,
        pathloss_db=pl,
        shadowing_db=shadowing,
        antenna_gain_db=gain,
        rsrp_dbm=rsrp,
        serving=np.argmax(rsrp, axis=1),
    )


def neighbor_list(rsrp_row: np.ndarray, serving: int, k: int = 8, threshold_dbm: float = -130.0) -> List[Tuple[int, float]]:
    """Strongest non-serving cells above the threshold, descending by RSRP"""
    order = np.argsort(-rsrp_row, kind="stable")
    neighbors = [(int(j), float(rsrp_row[j])) for j in order if j != serving and rsrp_row[j] > threshold_dbm]
    return neighbors[:k]


def interference_coupling_db(site_type: SiteType, coupling: float) -> float:
    """mMIMO beams leak less power towards non-served UEs"""
    return 10.0 * np.log10(coupling) if site_type == SiteType.MMIMO else 0.0
