"""FaultAlarmRL environment and rollout helpers."""

from causal_alarm_rl.env.fault_alarm import (
    ALARM_TYPE_NAMES,
    EnvState,
    FaultAlarmEnv,
    HawkesParams,
    StepInfo,
    StepResult,
    alarm_type_names,
    load_alarm_ground_truth,
    repair_reward,
    sample_hawkes_params,
)
from causal_alarm_rl.env.trajectory import (
    make_transition,
    rollout_episode,
    sample_active_action,
    sample_trajectories,
)

__all__ = [
    "ALARM_TYPE_NAMES",
    "EnvState",
    "FaultAlarmEnv",
    "HawkesParams",
    "StepInfo",
    "StepResult",
    "alarm_type_names",
    "load_alarm_ground_truth",
    "make_transition",
    "repair_reward",
    "rollout_episode",
    "sample_active_action",
    "sample_hawkes_params",
    "sample_trajectories",
]
