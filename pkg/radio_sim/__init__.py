from radio_sim.csi import CqiReport, measure_cqi
from radio_sim.deployment import LinkState
from radio_sim.harq import HarqProcess
from radio_sim.link_model import bler_probability, effective_sinr_db, rsrp_dbm
from radio_sim.mcs_table import McsRangeError, McsTable, build_mcs_table, tbs_bits
from radio_sim.scenario import CellConfig, ScenarioConfig, ScenarioError, UeConfig, validate_scenario
from radio_sim.simulation import DecisionPoint, HarqFeedback, Simulation, TransmissionOutcome, build_simulation

__all__ = [
    "CellConfig",
    "CqiReport",
    "DecisionPoint",
    "HarqFeedback",
    "HarqProcess",
    "LinkState",
    "McsRangeError",
    "McsTable",
    "ScenarioConfig",
    "ScenarioError",
    "Simulation",
    "TransmissionOutcome",
    "UeConfig",
    "bler_probability",
    "build_mcs_table",
    "build_simulation",
    "effective_sinr_db",
    "measure_cqi",
    "rsrp_dbm",
    "tbs_bits",
    "validate_scenario",
]
