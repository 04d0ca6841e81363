"""
Adam with decoupled weight decay and global-norm gradient clipping.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from la_config import OptimizerSettings

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-4
    weight_decay: float = 0.02
    max_grad_norm: float = 20.0
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    @classmethod
    def from_settings(cls, settings: OptimizerSettings, batch_size: int) -> "AdamState":
        # per-sample decay scaled by the batch: 0.02/512 x 512 = 0.02
        return cls(
            lr=settings.learning_rate,
            beta1=settings.beta1,
            beta2=settings.beta2,
            eps=settings.eps,
            weight_decay=settings.weight_decay_per_sample * batch_size,
            max_grad_norm=settings.max_grad_norm,
        )


def global_norm(grads: Params) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_gradients(grads: Params, max_norm: float) -> tuple[Params, float]:
    """Scale all gradients by max_norm / norm when the global norm exceeds max_norm"""
    norm = global_norm(grads)
    if max_norm <= 0 or norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


def adam_step(params: Params, grads: Params, state: AdamState) -> float:
    """In-place update of `params`; returns the pre-clip gradient norm"""
    grads, norm = clip_gradients(grads, state.max_grad_norm)
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, g in grads.items():
        p = params[name]
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p *= 1.0 - state.lr * state.weight_decay
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return norm
