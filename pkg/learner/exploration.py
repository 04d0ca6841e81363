import numpy as np


def epsilon_for_actor(i: int, n_actors: int = 40, base: float = 0.4, alpha: float = 8.5) -> float:
    """Fixed per-actor exploration rate base^(1 + i / (N - 1) * alpha)"""
    if not 0 <= i < n_actors:
        raise ValueError(f"actor index {i} out of range [0, {n_actors})")
    if n_actors == 1:
        return base
    return base ** (1.0 + i / (n_actors - 1) * alpha)


def epsilon_greedy(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Row-wise argmax, replaced by a uniform action with probability epsilon"""
    q_values = np.atleast_2d(q_values)
    greedy = np.argmax(q_values, axis=1)
    if epsilon <= 0:
        return greedy
    explore = rng.random(len(greedy)) < epsilon
    random_actions = rng.integers(0, q_values.shape[1], size=len(greedy))
    return np.where(explore, random_actions, greedy)
