"""Numpy neural networks and the DDPG / DQN agents."""

from .checkpoint import load_checkpoint, load_into, save_checkpoint, write_training_curve
from .ddpg import DdpgAgent, DdpgConfig, ddpg_act, ddpg_update, squash
from .dqn import DqnAgent, DqnConfig, action_mask, actions_to_y, dqn_act, dqn_update
from .mlp import Adam, Mlp, mlp_backward, mlp_forward
from .replay import ReplayBuffer

__all__ = [
    "Adam", "DdpgAgent", "DdpgConfig", "DqnAgent", "DqnConfig", "Mlp", "ReplayBuffer",
    "action_mask", "actions_to_y", "ddpg_act", "ddpg_update", "dqn_act", "dqn_update",
    "load_checkpoint", "load_into", "mlp_backward", "mlp_forward", "save_checkpoint",
    "squash", "write_training_curve",
]
