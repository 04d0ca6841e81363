from learner.checkpoint import load_checkpoint, save_checkpoint
from learner.exploration import epsilon_for_actor, epsilon_greedy
from learner.loss import Batch, LossGraph, backward, td_loss
from learner.optimizer import AdamState, adam_step, clip_gradients
from learner.qnetwork import QNetwork, forward_q, gat_forward, gcn_forward, param_count
from learner.target import TargetNetwork, hard_target_update

__all__ = [
    "AdamState",
    "Batch",
    "LossGraph",
    "QNetwork",
    "TargetNetwork",
    "adam_step",
    "backward",
    "clip_gradients",
    "epsilon_for_actor",
    "epsilon_greedy",
    "forward_q",
    "gat_forward",
    "gcn_forward",
    "hard_target_update",
    "load_checkpoint",
    "param_count",
    "save_checkpoint",
    "td_loss",
]
