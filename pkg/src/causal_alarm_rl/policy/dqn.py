"""DQN with experience replay and a periodically synced target network."""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Tuple

import numpy as np
from loguru import logger

from causal_alarm_rl.config import TrainConfig
from causal_alarm_rl.policy.mlp import (
    AdamState,
    PolicyNet,
    adam_step,
    clip_grad_norm,
    mlp_backward,
    mlp_forward,
    mlp_forward_cached,
)


class ReplayBuffer:
    """FIFO replay memory; observations are stored as float32."""

    def __init__(self, capacity: int):
        self.memory: Deque[Tuple] = deque(maxlen=capacity)

    def push(self, obs, action: int, reward: float, next_obs, done: bool, next_mask) -> None:
        self.memory.append(
            (
                np.asarray(obs, dtype=np.float32),
                int(action),
                float(reward),
                np.asarray(next_obs, dtype=np.float32),
                bool(done),
                np.asarray(next_mask, dtype=bool),
            )
        )

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(len(self.memory), size=batch_size, replace=False)
        obs, actions, rewards, next_obs, dones, next_masks = zip(*(self.memory[i] for i in idx))
        return (
            np.stack(obs).astype(np.float64),
            np.asarray(actions),
            np.asarray(rewards),
            np.stack(next_obs).astype(np.float64),
            np.asarray(dones),
            np.stack(next_masks),
        )

    def __len__(self) -> int:
        return len(self.memory)


@dataclass
class DQNLearner:
    net: PolicyNet
    target_net: PolicyNet
    adam: AdamState = field(default_factory=AdamState)
    updates: int = 0

    @classmethod
    def from_net(cls, net: PolicyNet) -> "DQNLearner":
        return cls(net=net, target_net=net.copy())

    def sync_target(self) -> None:
        self.target_net = self.net.copy()


def masked_max(q: np.ndarray, allow: np.ndarray) -> np.ndarray:
    """Row-wise max of ``q`` over allowed actions (rows with nothing allowed fall back to all)."""
    allow = np.where(allow.any(axis=1, keepdims=True), allow, True)
    return np.where(allow, q, -np.inf).max(axis=1)


def td_targets(
    target_net: PolicyNet,
    rewards: np.ndarray,
    next_obs: np.ndarray,
    dones: np.ndarray,
    next_masks: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """``r + γ max_{a' allowed} Q_target(s', a')``; terminal rows get ``r``."""
    next_q, _ = mlp_forward(target_net, next_obs)
    bootstrap = masked_max(next_q, next_masks)
    return rewards + gamma * np.where(dones, 0.0, bootstrap)


def dqn_update(
    learner: DQNLearner,
    buffer: ReplayBuffer,
    config: TrainConfig,
    rng: np.random.Generator,
) -> Dict[str, float]:
    if len(buffer) < config.batch_size:
        return {"status": "skipped", "buffer": len(buffer)}

    obs, actions, rewards, next_obs, dones, next_masks = buffer.sample(config.batch_size, rng)
    targets = td_targets(learner.target_net, rewards, next_obs, dones, next_masks, config.gamma)

    q, _, cache = mlp_forward_cached(learner.net, obs)
    rows = np.arange(len(actions))
    td = q[rows, actions] - targets
    loss = float((td**2).mean())
    if not np.isfinite(loss):
        logger.warning(f"DQN update skipped: non-finite loss {loss}")
        return {"status": "aborted", "loss": loss}

    d_q = np.zeros_like(q)
    d_q[rows, actions] = 2.0 * td / len(actions)
    grads = mlp_backward(learner.net, cache, d_q)
    clip_grad_norm(grads, config.max_grad_norm)
    adam_step(
        learner.net.params,
        grads,
        learner.adam,
        config.lr,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_eps,
    )

    learner.updates += 1
    if learner.updates % config.target_sync == 0:
        learner.sync_target()
        logger.debug(f"Target network synced after {learner.updates} updates")
    return {"status": "success", "loss": loss}
