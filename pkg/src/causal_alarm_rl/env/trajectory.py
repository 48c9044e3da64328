"""Episode rollouts that produce ``Transition`` records."""

from typing import Callable, List, Optional

import numpy as np
from loguru import logger

from causal_alarm_rl.core.types import Observation, Transition, active_flags
from causal_alarm_rl.env.fault_alarm import FaultAlarmEnv, StepResult

ActionChooser = Callable[[Observation, np.random.Generator], int]


def sample_active_action(obs: Observation, rng: np.random.Generator) -> int:
    """Uniform over actions that repair an active alarm; uniform over all if none is active."""
    active = np.flatnonzero(active_flags(obs))
    if active.size == 0:
        return int(rng.integers(obs.shape[0] // 2))
    return int(rng.choice(active))


def make_transition(obs: Observation, result: StepResult) -> Transition:
    return Transition(
        obs=obs,
        action=result.info.action,
        reward=result.reward,
        next_obs=result.next_obs,
        treated_types=result.info.treated_types,
        type_activity=result.info.type_activity,
        next_type_activity=result.info.next_type_activity,
        exposure=result.info.exposure,
        post_exposure=result.info.post_exposure,
        new_events=result.info.new_type_events,
        done=result.done,
    )


def rollout_episode(
    env: FaultAlarmEnv,
    rng: np.random.Generator,
    choose: Optional[ActionChooser] = None,
) -> List[Transition]:
    """Reset ``env`` and play one episode; actions default to uniform active-alarm repairs."""
    choose = choose or sample_active_action
    obs = env.reset(rng)
    transitions: List[Transition] = []
    done = False
    while not done:
        result = env.step(choose(obs, rng), rng)
        transitions.append(make_transition(obs, result))
        obs, done = result.next_obs, result.done
    return transitions


def sample_trajectories(
    env: FaultAlarmEnv,
    episodes: int,
    rng: np.random.Generator,
    choose: Optional[ActionChooser] = None,
) -> List[Transition]:
    transitions: List[Transition] = []
    for episode in range(episodes):
        batch = rollout_episode(env, rng, choose)
        transitions.extend(batch)
        logger.debug(f"Sampled episode {episode}: {len(batch)} steps")
    logger.info(f"Sampled {episodes} episodes, {len(transitions)} transitions")
    return transitions
