"""
Value types shared by the environment, discovery and policy layers.

Observations are flat float vectors of length ``2*N*V``: the first ``N*V``
entries are active flags, the rest are onset ages divided by ``step_max`` and
clipped to 1. Index ``n*V + v`` addresses device ``n``, alarm type ``v`` in
both halves, matching ``ActionId``.
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from causal_alarm_rl.errors import InvalidArgumentError

Observation = np.ndarray


@dataclass(frozen=True)
class ActionId:
    """Repair action for alarm type ``alarm_type`` on device ``device``."""

    index: int
    device: int
    alarm_type: int

    @classmethod
    def from_index(cls, index: int, num_nodes: int, num_types: int) -> "ActionId":
        if not 0 <= index < num_nodes * num_types:
            raise InvalidArgumentError(
                f"action index {index} outside [0, {num_nodes * num_types})"
            )
        device, alarm_type = divmod(int(index), num_types)
        return cls(int(index), device, alarm_type)

    @classmethod
    def from_pair(cls, device: int, alarm_type: int, num_nodes: int, num_types: int) -> "ActionId":
        if not (0 <= device < num_nodes and 0 <= alarm_type < num_types):
            raise InvalidArgumentError(
                f"(device={device}, type={alarm_type}) outside a {num_nodes}x{num_types} grid"
            )
        return cls(device * num_types + alarm_type, int(device), int(alarm_type))


def build_observation(counts: np.ndarray, age: np.ndarray, step_max: int) -> Observation:
    active = (counts > 0).astype(np.float64).ravel()
    ages = np.clip(age.astype(np.float64) / step_max, 0.0, 1.0).ravel()
    return np.concatenate([active, ages])


def active_flags(obs: Observation) -> np.ndarray:
    """Boolean ``N*V`` vector of currently active alarms."""
    obs = np.asarray(obs)
    return obs[: obs.shape[0] // 2] > 0.5


def type_activity_from_obs(obs: Observation, num_types: int) -> np.ndarray:
    """Number of devices with each alarm type active."""
    return active_flags(obs).reshape(-1, num_types).sum(axis=0).astype(np.int64)


@dataclass
class Transition:
    """
    One environment step, as stored in trajectory dumps and discovery buffers.

    ``exposure`` and ``post_exposure`` are the (V, K+1) per-hop exposures
    before and after the repair; ``new_events`` counts this step's arrivals
    per type, before the count cap.
    """

    obs: Observation
    action: int
    reward: float
    next_obs: Observation
    treated_types: np.ndarray
    type_activity: np.ndarray
    next_type_activity: np.ndarray
    exposure: np.ndarray
    post_exposure: np.ndarray
    new_events: np.ndarray
    done: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "obs": self.obs.tolist(),
            "action": int(self.action),
            "reward": float(self.reward),
            "next_obs": self.next_obs.tolist(),
            "treated_types": self.treated_types.astype(int).tolist(),
            "type_activity": self.type_activity.tolist(),
            "next_type_activity": self.next_type_activity.tolist(),
            "exposure": self.exposure.tolist(),
            "post_exposure": self.post_exposure.tolist(),
            "new_events": self.new_events.tolist(),
            "done": bool(self.done),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Transition":
        try:
            return cls(
                obs=np.asarray(data["obs"], dtype=np.float64),
                action=int(data["action"]),
                reward=float(data["reward"]),
                next_obs=np.asarray(data["next_obs"], dtype=np.float64),
                treated_types=np.asarray(data["treated_types"], dtype=bool),
                type_activity=np.asarray(data["type_activity"], dtype=np.int64),
                next_type_activity=np.asarray(data["next_type_activity"], dtype=np.int64),
                exposure=np.asarray(data["exposure"], dtype=np.float64),
                post_exposure=np.asarray(data["post_exposure"], dtype=np.float64),
                new_events=np.asarray(data["new_events"], dtype=np.int64),
                done=bool(data["done"]),
            )
        except KeyError as e:
            raise InvalidArgumentError(f"transition record is missing field {e}") from e

    @property
    def num_types(self) -> int:
        return self.type_activity.shape[0]
