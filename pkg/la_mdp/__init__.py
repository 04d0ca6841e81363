from la_mdp.aging import age_harq, age_hard
from la_mdp.episodes import EpisodeTracker, Transition
from la_mdp.features import EncodingMode, FeatureSchema, GraphInput, SchemaMismatchError, encode_features, la_feature_schema
from la_mdp.reward import expected_se, normalize_buffer, reward, se_on_success
from la_mdp.state import MdpState, build_state

__all__ = [
    "EncodingMode",
    "EpisodeTracker",
    "FeatureSchema",
    "GraphInput",
    "MdpState",
    "SchemaMismatchError",
    "Transition",
    "age_harq",
    "age_hard",
    "build_state",
    "encode_features",
    "expected_se",
    "la_feature_schema",
    "normalize_buffer",
    "reward",
    "se_on_success",
]
