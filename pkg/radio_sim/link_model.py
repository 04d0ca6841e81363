"""
Link-level model: link curves, chase combining, pathloss and received power.
"""

import math

import numpy as np
from cachetools import LRUCache, cached

from la_config import LinkCurveSettings
from radio_sim.mcs_table import CQI_TO_MCS, N_CQI, N_MCS, check_mcs

LINK_CURVES = LinkCurveSettings.from_config()

SPEED_OF_LIGHT = 299_792_458.0


def gamma50_db(mcs: int | np.ndarray, curves: LinkCurveSettings = LINK_CURVES):
    """SINR at which the MCS reaches 50% BLER"""
    return curves.gamma50_mcs0_db + curves.gamma50_spacing_db * np.asarray(mcs, dtype=float)


def bler_probability(sinr_db: float, mcs: int, curves: LinkCurveSettings = LINK_CURVES) -> float:
    """Logistic link curve 1 / (1 + exp(k * (sinr - gamma50(mcs))))"""
    check_mcs(mcs)
    x = curves.slope_per_db * (sinr_db - float(gamma50_db(mcs, curves)))
    # exp overflows for very negative SINR
    if x < -700.0:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


def bler_curve(sinr_db: float | np.ndarray, curves: LinkCurveSettings = LINK_CURVES) -> np.ndarray:
    """BLER of every MCS at the given SINR(s), shape (..., N_MCS)"""
    sinr = np.asarray(sinr_db, dtype=float)[..., None]
    x = np.clip(curves.slope_per_db * (sinr - gamma50_db(np.arange(N_MCS), curves)), -700.0, 700.0)
    return 1.0 / (1.0 + np.exp(x))


@cached(cache=LRUCache(maxsize=32), key=lambda bler_target, curves=LINK_CURVES: (bler_target, curves))
def mcs_thresholds_db(bler_target: float, curves: LinkCurveSettings = LINK_CURVES) -> np.ndarray:
    """SINR at which each MCS reaches the BLER target: gamma50 + ln((1 - t) / t) / k"""
    thresholds = gamma50_db(np.arange(N_MCS), curves) + math.log((1.0 - bler_target) / bler_target) / curves.slope_per_db
    thresholds.setflags(write=False)
    return thresholds


@cached(cache=LRUCache(maxsize=8), key=lambda curves=LINK_CURVES: curves)
def cqi_thresholds_db(curves: LinkCurveSettings = LINK_CURVES) -> np.ndarray:
    """Threshold SINR of CQI 1..15, index 0 holds the CQI-0 stand-in"""
    mcs_thr = mcs_thresholds_db(curves.cqi_bler_target, curves)
    thresholds = np.array([mcs_thr[CQI_TO_MCS[k]] for k in range(N_CQI)], dtype=float)
    thresholds[0] = thresholds[1] - curves.cqi0_backoff_db
    thresholds.setflags(write=False)
    return thresholds


def sinr_to_cqi(sinr_db: float, curves: LinkCurveSettings = LINK_CURVES) -> int:
    """Largest CQI whose BLER at this SINR stays within the CQI target, floor 0"""
    thresholds = cqi_thresholds_db(curves)
    return int(np.searchsorted(thresholds[1:], sinr_db, side="right"))


def cqi_to_sinr_db(cqi: int, curves: LinkCurveSettings = LINK_CURVES) -> float:
    return float(cqi_thresholds_db(curves)[int(cqi)])


def effective_sinr_db(accumulated_sinr_linear: float, current_sinr_linear: float) -> float:
    """Chase combining: linear SINR of all attempts adds up"""
    if current_sinr_linear <= 0:
        raise ValueError(f"current SINR must be positive: {current_sinr_linear}")
    return 10.0 * math.log10(accumulated_sinr_linear + current_sinr_linear)


def db_to_linear(value_db):
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


def pathloss_db(distance_m, indoor, indoor_penalty_db: float = 20.0, min_distance_m: float = 10.0):
    """PL(d) = 128.1 + 37.6 log10(d_km), plus the indoor penalty"""
    d_km = np.maximum(np.asarray(distance_m, dtype=float), min_distance_m) / 1000.0
    return 128.1 + 37.6 * np.log10(d_km) + np.where(indoor, indoor_penalty_db, 0.0)


def watts_to_dbm(power_w):
    return 10.0 * np.log10(np.asarray(power_w, dtype=float) * 1000.0)


def rsrp_dbm(tx_power_dbm, pathloss, shadowing, antenna_gain_db=0.0):
    """Slow-scale received power: no fast fading"""
    return np.asarray(tx_power_dbm) - np.asarray(pathloss) - np.asarray(shadowing) + np.asarray(antenna_gain_db)


def sector_gain_db(angle_deg, half_power_beamwidth_deg: float = 65.0, max_attenuation_db: float = 30.0):
    """Horizontal sector pattern -min(12 (theta / hpbw)^2, Am)"""
    theta = (np.asarray(angle_deg, dtype=float) + 180.0) % 360.0 - 180.0
    return -np.minimum(12.0 * (theta / half_power_beamwidth_deg) ** 2, max_attenuation_db)


def noise_power_dbm(bandwidth_mhz: float, thermal_noise_dbm_hz: float = -174.0, noise_figure_db: float = 7.0) -> float:
    return thermal_noise_dbm_hz + 10.0 * math.log10(bandwidth_mhz * 1e6) + noise_figure_db


def fading_correlation(speed_mps: float, carrier_freq_ghz: float = 3.5, tti_s: float = 1e-3) -> float:
    """AR(1) coefficient from the coherence time 0.423 / f_doppler"""
    if speed_mps <= 0:
        return 1.0
    doppler_hz = speed_mps * carrier_freq_ghz * 1e9 / SPEED_OF_LIGHT
    coherence_s = 0.423 / doppler_hz
    return math.exp(-tti_s / coherence_s)
