"""
One-step TD loss over a replay batch.

    y     = r + gamma * (1 - done) * max_a Q_target(s', a)
    delta = Q(s, a) - y
    loss  = sum_i w_i * l(delta_i) / sum_i w_i

with l = delta^2 (mse) or the Huber function (0.5 delta^2 inside the threshold).
"""

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from learner.qnetwork import ForwardCache, Params, QNetwork


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    @classmethod
    def from_transitions(cls, transitions) -> "Batch":
        n_features = transitions[0].state.shape[-1]
        return cls(
            states=np.stack([t.state for t in transitions]),
            actions=np.array([t.action for t in transitions], dtype=int),
            rewards=np.array([t.reward for t in transitions], dtype=float),
            next_states=np.stack([t.next_state if t.next_state is not None else np.zeros(n_features) for t in transitions]),
            dones=np.array([t.done for t in transitions], dtype=float),
        )


@dataclass
class LossGraph:
    cache: ForwardCache
    q: np.ndarray
    actions: np.ndarray
    deltas: np.ndarray
    weights: np.ndarray
    kind: str
    huber_delta: float


def huber(delta: np.ndarray, threshold: float = 1.0) -> np.ndarray:
    a = np.abs(delta)
    return np.where(a <= threshold, 0.5 * delta**2, threshold * (a - 0.5 * threshold))


def td_targets(batch: Batch, target_net: QNetwork, gamma: float = 1.0, online_net: Optional[QNetwork] = None) -> np.ndarray:
    """Bootstrapped targets; passing `online_net` selects the double-DQN argmax"""
    live = batch.dones < 0.5
    bootstrap = np.zeros(len(batch))
    if np.any(live):
        q_next, _ = target_net.forward(batch.next_states[live])
        if online_net is not None:
            q_online, _ = online_net.forward(batch.next_states[live])
            bootstrap[live] = q_next[np.arange(len(q_next)), np.argmax(q_online, axis=1)]
        else:
            bootstrap[live] = q_next.max(axis=1)
    return batch.rewards + gamma * (1.0 - batch.dones) * bootstrap


def td_loss(
    batch: Batch,
    net: QNetwork,
    target_net: QNetwork,
    gamma: float = 1.0,
    kind: Literal["mse", "huber"] = "huber",
    is_weights: Optional[np.ndarray] = None,
    huber_delta: float = 1.0,
    double_dqn: bool = False,
):
    """Returns (loss, |delta| per sample, graph for `backward`)"""
    weights = np.ones(len(batch)) if is_weights is None else np.asarray(is_weights, dtype=float)
    y = td_targets(batch, target_net, gamma, net if double_dqn else None)
    q, cache = net.forward(batch.states)
    q_sa = q[np.arange(len(batch)), batch.actions]
    deltas = q_sa - y
    if kind == "mse":
        per_sample = deltas**2
    elif kind == "huber":
        per_sample = huber(deltas, huber_delta)
    else:
        raise ValueError(f"Unknown loss kind: {kind}")
    loss = float(np.sum(weights * per_sample) / np.sum(weights))
    graph = LossGraph(cache, q, batch.actions, deltas, weights, kind, huber_delta)
    return loss, np.abs(deltas), graph


def backward(net: QNetwork, graph: LossGraph) -> Params:
    """Gradients of the weighted TD loss w.r.t. every parameter of `net`"""
    if graph.kind == "mse":
        dl = 2.0 * graph.deltas
    else:
        dl = np.clip(graph.deltas, -graph.huber_delta, graph.huber_delta)
    dq = np.zeros_like(graph.q)
    dq[np.arange(len(graph.actions)), graph.actions] = graph.weights * dl / np.sum(graph.weights)
    return net.backward(dq, graph.cache)
