"""
Causal-aware agents.

Action selection during warm-up repairs a uniformly random active alarm.
Afterwards, with probability ``eta_causal`` a random active alarm is repaired
regardless of the mask (interventions for ATT estimation); otherwise PPO
samples from the masked policy and DQN acts ε-greedily among allowed actions.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

import numpy as np
from loguru import logger

from causal_alarm_rl.config import TrainConfig
from causal_alarm_rl.core.types import Observation, Transition
from causal_alarm_rl.env.trajectory import sample_active_action
from causal_alarm_rl.policy.dqn import DQNLearner, ReplayBuffer, dqn_update
from causal_alarm_rl.policy.mask import CausalMask, masked_distribution
from causal_alarm_rl.policy.mlp import PolicyNet, init_policy_net, mlp_forward
from causal_alarm_rl.policy.ppo import PPOLearner, RolloutBuffer, ppo_update


class Phase(str, Enum):
    WARMUP = "warmup"
    TRAIN = "train"


@dataclass
class ActionChoice:
    action: int
    source: str
    log_prob: float = 0.0
    value: float = 0.0


def select_action(
    net: PolicyNet,
    obs: Observation,
    mask: CausalMask,
    config: TrainConfig,
    rng: np.random.Generator,
    phase: Phase,
) -> ActionChoice:
    if phase == Phase.WARMUP:
        return ActionChoice(sample_active_action(obs, rng), "warmup", log_prob=-np.inf)

    logits, value = mlp_forward(net, obs)
    logits = logits[0]
    v = float(value[0]) if value is not None else 0.0

    if config.eta_causal > 0 and rng.random() < config.eta_causal:
        action = sample_active_action(obs, rng)
        if config.algo == "ppo" and mask.allow[action]:
            log_prob = float(np.log(masked_distribution(logits, mask)[action]))
        else:
            log_prob = -np.inf
        return ActionChoice(action, "explore", log_prob=log_prob, value=v)

    if config.algo == "ppo":
        probs = masked_distribution(logits, mask)
        action = int(rng.choice(probs.shape[0], p=probs))
        return ActionChoice(action, "policy", log_prob=float(np.log(probs[action])), value=v)

    allowed = np.flatnonzero(mask.allow)
    if rng.random() < config.eps_greedy:
        return ActionChoice(int(rng.choice(allowed)), "epsilon")
    return ActionChoice(int(np.argmax(np.where(mask.allow, logits, -np.inf))), "greedy")


class CausalPPOAgent:
    """Actor-critic with a shared trunk; updates every ``ppo_update_timestep`` post-warm-up steps."""

    def __init__(self, obs_size: int, num_actions: int, config: TrainConfig, rng: np.random.Generator):
        self.config = config
        self.learner = PPOLearner(
            init_policy_net(obs_size, num_actions, config.hidden_size, rng, value_head=True)
        )
        self.rollout = RolloutBuffer()

    @property
    def net(self) -> PolicyNet:
        return self.learner.net

    def act(self, obs: Observation, mask: CausalMask, rng: np.random.Generator, phase: Phase) -> ActionChoice:
        return select_action(self.net, obs, mask, self.config, rng, phase)

    def observe(
        self,
        choice: ActionChoice,
        mask: CausalMask,
        transition: Transition,
        next_mask: CausalMask,
        rng: np.random.Generator,
        phase: Phase,
    ) -> Optional[Dict[str, float]]:
        if phase == Phase.WARMUP:
            return None
        self.rollout.add(
            transition.obs,
            choice.action,
            choice.log_prob,
            choice.value,
            transition.reward,
            transition.done,
            mask.allow,
        )
        if len(self.rollout) < self.config.ppo_update_timestep:
            return None

        last_value = 0.0
        if not transition.done:
            _, value = mlp_forward(self.net, transition.next_obs)
            last_value = float(value[0])
        result = ppo_update(self.learner, self.rollout, self.config, rng, last_value)
        self.rollout.clear()
        logger.info(f"PPO update {self.learner.updates}: {result['status']}")
        return result


class CausalDQNAgent:
    """Q-network over all actions; the max in the TD target respects the next-state mask."""

    def __init__(self, obs_size: int, num_actions: int, config: TrainConfig, rng: np.random.Generator):
        self.config = config
        self.learner = DQNLearner.from_net(
            init_policy_net(obs_size, num_actions, config.hidden_size, rng, value_head=False)
        )
        self.replay = ReplayBuffer(config.buffer_size)
        self.steps = 0

    @property
    def net(self) -> PolicyNet:
        return self.learner.net

    def act(self, obs: Observation, mask: CausalMask, rng: np.random.Generator, phase: Phase) -> ActionChoice:
        return select_action(self.net, obs, mask, self.config, rng, phase)

    def observe(
        self,
        choice: ActionChoice,
        mask: CausalMask,
        transition: Transition,
        next_mask: CausalMask,
        rng: np.random.Generator,
        phase: Phase,
    ) -> Optional[Dict[str, float]]:
        self.replay.push(
            transition.obs,
            choice.action,
            transition.reward,
            transition.next_obs,
            transition.done,
            next_mask.allow,
        )
        self.steps += 1
        if phase == Phase.WARMUP or self.steps % self.config.dqn_update_timestep != 0:
            return None
        return dqn_update(self.learner, self.replay, self.config, rng)


def make_agent(obs_size: int, num_actions: int, config: TrainConfig, rng: np.random.Generator):
    if config.algo == "ppo":
        return CausalPPOAgent(obs_size, num_actions, config, rng)
    return CausalDQNAgent(obs_size, num_actions, config, rng)
