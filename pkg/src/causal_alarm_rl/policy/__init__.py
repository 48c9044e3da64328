"""Causal-mask policy learning over PPO and DQN."""

from causal_alarm_rl.policy.agents import (
    ActionChoice,
    CausalDQNAgent,
    CausalPPOAgent,
    Phase,
    make_agent,
    select_action,
)
from causal_alarm_rl.policy.checkpoint import load_checkpoint, save_checkpoint
from causal_alarm_rl.policy.dqn import DQNLearner, ReplayBuffer, dqn_update, masked_max, td_targets
from causal_alarm_rl.policy.mask import (
    CausalMask,
    CausalMaskProvider,
    NoMaskProvider,
    allow_all,
    build_mask,
    masked_distribution,
    masked_softmax,
)
from causal_alarm_rl.policy.mlp import (
    AdamState,
    PolicyNet,
    adam_step,
    clip_grad_norm,
    init_policy_net,
    mlp_backward,
    mlp_forward,
    mlp_forward_cached,
)
from causal_alarm_rl.policy.ppo import (
    PPOBatch,
    PPOLearner,
    RolloutBuffer,
    compute_gae,
    ppo_loss_and_grads,
    ppo_update,
)

__all__ = [
    "ActionChoice",
    "AdamState",
    "CausalDQNAgent",
    "CausalMask",
    "CausalMaskProvider",
    "CausalPPOAgent",
    "DQNLearner",
    "NoMaskProvider",
    "PPOBatch",
    "PPOLearner",
    "Phase",
    "PolicyNet",
    "ReplayBuffer",
    "RolloutBuffer",
    "adam_step",
    "allow_all",
    "build_mask",
    "clip_grad_norm",
    "compute_gae",
    "dqn_update",
    "init_policy_net",
    "load_checkpoint",
    "make_agent",
    "masked_distribution",
    "masked_max",
    "masked_softmax",
    "mlp_backward",
    "mlp_forward",
    "mlp_forward_cached",
    "ppo_loss_and_grads",
    "ppo_update",
    "save_checkpoint",
    "select_action",
    "td_targets",
]
