import numpy as np
import pytest

from bench.bandit import bandit_env_factory, bandit_schema
from bench.randomization import default_scenario
from la_config import ReplaySettings
from la_mdp.episodes import Transition
from runtime.trainer import TrainingConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_scenario():
    """Default test deployment, 3 FB UEs, short run"""
    return default_scenario(seed=5, n_ues=3).model_copy(update={"duration_tti": 80})


@pytest.fixture
def make_transition():
    def make(priority=None, n_features=4, reward=0.0, action=0, state=None):
        state = np.zeros(n_features) if state is None else np.asarray(state, dtype=float)
        return Transition(state, action, reward, None, True, initial_priority=priority)

    return make


@pytest.fixture
def replay_settings():
    def make(**overrides):
        values = dict(n_shards=2, capacity=16, priority_exponent=0.6, is_exponent=0.4, priority_eps=1e-3, routing="round_robin")
        values.update(overrides)
        return ReplaySettings(**values)

    return make


@pytest.fixture
def small_tc():
    """Desk-sized training configuration for the bandit task"""
    return TrainingConfig.from_config().override(
        actors=dict(n_actors=2, env_slots=2, local_buffer=16, ingest_queue_depth=8),
        learner=dict(batch_size=16, warmup_transitions=64, publish_interval=4, target_update_interval=10, prefetch_batches=2, checkpoint_every_snapshots=0),
        replay=dict(n_shards=2, capacity=4096),
        network=dict(variant="mlp", hidden_layers=2, hidden_units=16, layer_norm=True),
    )


@pytest.fixture
def bandit_factories():
    def make(alpha=0.5, seed=7, n_steps=20):
        return lambda actor_id: bandit_env_factory(actor_id, alpha=alpha, seed=seed, n_steps=n_steps)

    return make


@pytest.fixture
def bandit():
    return bandit_schema()
