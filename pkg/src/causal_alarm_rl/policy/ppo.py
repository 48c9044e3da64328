"""
Masked PPO update.

Every stored step keeps the mask it was sampled under, so old and new
probabilities are both taken from the same masked softmax. Steps whose action
lies outside their stored mask (taken by ε-causal exploration) have zero old
probability; they are left out of the surrogate and only train the critic.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from loguru import logger

from causal_alarm_rl.config import TrainConfig
from causal_alarm_rl.policy.mask import masked_softmax
from causal_alarm_rl.policy.mlp import (
    AdamState,
    Params,
    PolicyNet,
    adam_step,
    clip_grad_norm,
    mlp_backward,
    mlp_forward_cached,
)


@dataclass
class RolloutBuffer:
    obs: List[np.ndarray] = field(default_factory=list)
    actions: List[int] = field(default_factory=list)
    log_probs: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    rewards: List[float] = field(default_factory=list)
    dones: List[bool] = field(default_factory=list)
    masks: List[np.ndarray] = field(default_factory=list)

    def add(self, obs, action, log_prob, value, reward, done, mask) -> None:
        self.obs.append(np.asarray(obs, dtype=np.float32))
        self.actions.append(int(action))
        self.log_probs.append(float(log_prob))
        self.values.append(float(value))
        self.rewards.append(float(reward))
        self.dones.append(bool(done))
        self.masks.append(np.asarray(mask, dtype=bool))

    def clear(self) -> None:
        for items in (self.obs, self.actions, self.log_probs, self.values, self.rewards, self.dones, self.masks):
            items.clear()

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class PPOLearner:
    net: PolicyNet
    adam: AdamState = field(default_factory=AdamState)
    updates: int = 0


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    last_value: float,
    gamma: float,
    lam: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """GAE(λ) advantages and returns; ``dones`` cut bootstrapping."""
    T = len(rewards)
    advantages = np.zeros(T)
    gae = 0.0
    for t in reversed(range(T)):
        next_value = last_value if t == T - 1 else values[t + 1]
        nonterminal = 1.0 - float(dones[t])
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        gae = delta + gamma * lam * nonterminal * gae
        advantages[t] = gae
    return advantages, advantages + values


@dataclass
class PPOBatch:
    obs: np.ndarray
    actions: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray
    masks: np.ndarray


def ppo_loss_and_grads(
    net: PolicyNet, batch: PPOBatch, config: TrainConfig
) -> Tuple[float, Params, Dict[str, float]]:
    """Clipped surrogate + value MSE - entropy bonus, with analytic gradients."""
    logits, values, cache = mlp_forward_cached(net, batch.obs)
    B = logits.shape[0]
    rows = np.arange(B)
    allow = batch.masks

    probs = masked_softmax(logits, allow)
    log_probs = np.where(allow, np.log(np.where(allow, probs, 1.0)), 0.0)
    new_logp = log_probs[rows, batch.actions]

    included = np.isfinite(batch.old_log_probs) & allow[rows, batch.actions]
    n_inc = max(int(included.sum()), 1)
    ratio = np.where(included, np.exp(new_logp - np.where(included, batch.old_log_probs, 0.0)), 1.0)
    adv = batch.advantages
    surr1 = ratio * adv
    surr2 = np.clip(ratio, 1.0 - config.clip, 1.0 + config.clip) * adv
    policy_loss = -np.where(included, np.minimum(surr1, surr2), 0.0).sum() / n_inc

    value_err = values - batch.returns
    value_loss = float((value_err**2).mean())
    entropy_rows = -(probs * log_probs).sum(axis=1)
    entropy = float(entropy_rows.mean())

    loss = policy_loss + config.value_coef * value_loss - config.entropy_coef * entropy

    # d(loss)/d(new_logp) is nonzero only where the unclipped branch is the minimum
    active = included & (surr1 <= surr2)
    d_logp = np.where(active, -ratio * adv / n_inc, 0.0)
    onehot = np.zeros_like(probs)
    onehot[rows, batch.actions] = 1.0
    d_logits = d_logp[:, None] * (onehot - probs)
    d_logits += (config.entropy_coef / B) * probs * (log_probs + entropy_rows[:, None])
    d_logits = np.where(allow, d_logits, 0.0)
    d_value = config.value_coef * 2.0 * value_err / B

    grads = mlp_backward(net, cache, d_logits, d_value)
    clipped_fraction = float(((np.abs(ratio - 1.0) > config.clip) & included).sum()) / n_inc
    diagnostics = {
        "policy_loss": float(policy_loss),
        "value_loss": value_loss,
        "entropy": entropy,
        "clip_fraction": clipped_fraction,
    }
    return float(loss), grads, diagnostics


def ppo_update(
    learner: PPOLearner,
    rollout: RolloutBuffer,
    config: TrainConfig,
    rng: np.random.Generator,
    last_value: float = 0.0,
) -> Dict[str, float]:
    """``k_epochs`` passes of minibatch Adam over the rollout; aborts on a non-finite loss."""
    n = len(rollout)
    if n == 0:
        return {"status": "skipped", "samples": 0}

    values = np.asarray(rollout.values)
    advantages, returns = compute_gae(
        np.asarray(rollout.rewards),
        values,
        np.asarray(rollout.dones),
        last_value,
        config.gamma,
        config.gae_lambda,
    )
    if n > 1:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

    obs = np.stack(rollout.obs).astype(np.float64)
    actions = np.asarray(rollout.actions)
    old_log_probs = np.asarray(rollout.log_probs)
    masks = np.stack(rollout.masks)

    saved_params = learner.net.copy()
    saved_adam = learner.adam.copy()
    losses = []
    for _ in range(config.k_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = PPOBatch(obs[idx], actions[idx], old_log_probs[idx], advantages[idx], returns[idx], masks[idx])
            loss, grads, diagnostics = ppo_loss_and_grads(learner.net, batch, config)
            if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.values()):
                learner.net.params = saved_params.params
                learner.adam = saved_adam
                logger.warning(f"PPO update aborted: non-finite loss {loss}")
                return {"status": "aborted", "loss": float(loss), "samples": n, **diagnostics}
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
            losses.append(loss)

    learner.updates += 1
    logger.debug(f"PPO update {learner.updates}: {n} samples, mean loss {np.mean(losses):.4f}")
    return {"status": "success", "loss": float(np.mean(losses)), "samples": n, **diagnostics}
