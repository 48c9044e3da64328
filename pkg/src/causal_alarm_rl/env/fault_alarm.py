"""
FaultAlarmRL: a topological Hawkes alarm simulator with repair actions.

Each step covers one counting interval of length ``delta_t``. Alarm counts
persist without decay; new events for device ``n`` and type ``v`` arrive as
``Poisson(λ_v(n) * delta_t)`` with

    λ_v(n) = μ_v + κ Σ_k Σ_{n'} Σ_{v'} Â^k[n', n] X[n', v'] α[v', v, k]

where α is zero off the ground-truth edges. A repair action clears one
(device, type) alarm before the next arrivals are drawn, which is an
intervention on that type.

Summing λ over devices gives a type-level rate that is linear in the
per-hop exposures ``Z[v', k] = Σ_{n'} X[n', v'] Σ_n Â^k[n', n]``:

    Σ_n λ_v(n) = N μ_v + κ Σ_{v'} Σ_k α[v', v, k] Z[v', k]

which is what discovery regresses new arrivals on.
"""

from dataclasses import dataclass, field
from importlib.resources import as_file, files
from typing import Optional, Sequence, Union

import numpy as np
from loguru import logger
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from causal_alarm_rl.config import EnvConfig
from causal_alarm_rl.core.graph import CausalGraph, default_type_names, load_graph
from causal_alarm_rl.core.topology import Topology
from causal_alarm_rl.core.types import ActionId, Observation, build_observation
from causal_alarm_rl.errors import (
    DegenerateConfigError,
    EpisodeFinishedError,
    InvalidArgumentError,
)

ALARM_TYPE_NAMES = (
    "MW_RDI",
    "LTI",
    "CLK_NO_TRACE_MODE",
    "S1_SYN_CHANGE",
    "LAG_MEMBER_DOWN",
    "PLA_MEMBER_DOWN",
    "ETH_LOS",
    "ETH_LINK_DOWN",
    "NE_COMMU_BREAK",
    "R_LOF",
    "TU_AIS",
    "RADIO_RSL_LOW",
    "MW_LOF",
    "MW_BER_SD",
    "BD_STATUS",
    "HARD_BAD",
    "POWER_ALM",
    "NE_NOT_LOGIN",
)


def load_alarm_ground_truth() -> CausalGraph:
    """The bundled 18-type alarm causal graph."""
    resource = files("causal_alarm_rl") / "data" / "alarm_ground_truth.csv"
    with as_file(resource) as path:
        return load_graph(path, type_names=ALARM_TYPE_NAMES)


def alarm_type_names(num_types: int, topology_free: bool = False) -> Sequence[str]:
    """Type names a run of this size uses: the bundled alarm names, or s0..s{V-1}."""
    if not topology_free and num_types == len(ALARM_TYPE_NAMES):
        return ALARM_TYPE_NAMES
    return tuple(default_type_names(num_types))


def repair_reward(n_before: int, n_after: int, t: int, step_max: int) -> float:
    """Fraction of active alarms cleared minus the elapsed-time penalty, clipped to [-1, 1]."""
    if n_before <= 0:
        raise InvalidArgumentError("a repair step needs at least one active alarm before it")
    return float(np.clip((n_before - n_after) / n_before - t / step_max, -1.0, 1.0))


@dataclass(frozen=True)
class HawkesParams:
    """Spontaneous rates ``mu`` (V,) and propagation intensities ``alpha`` (V, V, K+1)."""

    mu: np.ndarray
    alpha: np.ndarray


def sample_hawkes_params(
    config: EnvConfig, truth: CausalGraph, max_hop: int, rng: np.random.Generator
) -> HawkesParams:
    V = truth.num_types
    mu = rng.uniform(*config.mu_range, size=V)
    alpha = rng.uniform(*config.alpha_range, size=(V, V, max_hop + 1))
    alpha *= truth.adj[:, :, None]
    return HawkesParams(mu=mu, alpha=alpha)


@dataclass
class EnvState:
    counts: np.ndarray
    age: np.ndarray
    t: int = 0

    def copy(self) -> "EnvState":
        return EnvState(self.counts.copy(), self.age.copy(), self.t)

    @property
    def alarms_active(self) -> int:
        return int((self.counts > 0).sum())


@dataclass
class StepInfo:
    action: int
    treated_type: Optional[int]
    treated_types: np.ndarray
    new_events: int
    type_activity: np.ndarray
    next_type_activity: np.ndarray
    exposure: np.ndarray
    post_exposure: np.ndarray
    new_type_events: np.ndarray


@dataclass
class StepResult:
    next_obs: Observation
    reward: float
    done: bool
    alarms_active: int
    info: StepInfo = field(repr=False)


class FaultAlarmEnv:
    """The alarm MDP. One instance is single-threaded; randomness comes only from the passed generators."""

    def __init__(
        self,
        config: EnvConfig,
        truth_graph: CausalGraph,
        topology: Topology,
        rng: np.random.Generator,
    ):
        if truth_graph.num_types != config.num_types:
            raise InvalidArgumentError(
                f"truth graph has {truth_graph.num_types} types, config expects {config.num_types}"
            )
        if topology.num_nodes != config.num_nodes:
            raise InvalidArgumentError(
                f"topology has {topology.num_nodes} devices, config expects {config.num_nodes}"
            )

        if config.topology_free:
            topology = Topology.single_hop(config.num_nodes)
        elif topology.max_hop != config.max_hop:
            topology = Topology.from_adjacency(topology.adj, config.max_hop)

        self.config = config
        self.truth_graph = truth_graph
        self.topology = topology
        self.params = sample_hawkes_params(config, truth_graph, topology.max_hop, rng)
        self._powers = topology.stacked_powers()
        # w[k, n'] = Σ_n Â^k[n', n]
        self._hop_weights = self._powers.sum(axis=2)

        self.state = EnvState(
            counts=np.zeros((config.num_nodes, config.num_types), dtype=np.int64),
            age=np.zeros((config.num_nodes, config.num_types), dtype=np.int64),
        )
        self.done = True

        logger.debug(
            f"Created FaultAlarmEnv: N={config.num_nodes}, V={config.num_types}, "
            f"K={topology.max_hop}, edges={truth_graph.num_edges}"
        )

    @property
    def num_actions(self) -> int:
        return self.config.action_space_size

    @property
    def observation_size(self) -> int:
        return self.config.observation_size

    def observation(self) -> Observation:
        return build_observation(self.state.counts, self.state.age, self.config.step_max)

    def propagation(self, counts: Optional[np.ndarray] = None) -> np.ndarray:
        """Excitation term ``Σ_k (Â^k)ᵀ X α[:, :, k]`` as an (N, V) matrix, before κ."""
        X = (self.state.counts if counts is None else counts).astype(np.float64)
        total = np.zeros_like(X)
        for k in range(self._powers.shape[0]):
            total += (self._powers[k].T @ X) @ self.params.alpha[:, :, k]
        return total

    def intensity_matrix(self, counts: Optional[np.ndarray] = None) -> np.ndarray:
        return self.params.mu[None, :] + self.config.kernel_kappa * self.propagation(counts)

    def intensity(self, n: int, v: int) -> float:
        """λ_v(n) on the current counts."""
        if not (0 <= n < self.config.num_nodes and 0 <= v < self.config.num_types):
            raise InvalidArgumentError(f"(device={n}, type={v}) out of range")
        return float(self.intensity_matrix()[n, v])

    def type_activity(self) -> np.ndarray:
        """Number of devices with each alarm type active."""
        return (self.state.counts > 0).sum(axis=0).astype(np.int64)

    def type_exposure(self, counts: Optional[np.ndarray] = None) -> np.ndarray:
        """Per-hop exposure ``Z`` of shape (V, K+1) on ``counts`` (default: the current counts)."""
        X = (self.state.counts if counts is None else counts).astype(np.float64)
        return (self._hop_weights @ X).T

    def draw_arrivals(
        self,
        rng: np.random.Generator,
        counts: Optional[np.ndarray] = None,
        draws: Optional[int] = None,
    ) -> np.ndarray:
        """
        New events for one interval, ``Poisson(λ * delta_t)`` per (device, type).

        With ``draws`` set, returns ``draws`` independent samples stacked on a
        leading axis; the state is not touched either way.
        """
        rate = self.intensity_matrix(counts) * self.config.delta_t
        if draws is None:
            return rng.poisson(rate)
        return rng.poisson(rate, size=(draws,) + rate.shape)

    def set_state(self, counts: np.ndarray, age: Optional[np.ndarray] = None, t: int = 0) -> Observation:
        """Place the environment in an explicit state; ages default to 1 on active alarms."""
        counts = np.asarray(counts, dtype=np.int64)
        shape = (self.config.num_nodes, self.config.num_types)
        if counts.shape != shape:
            raise InvalidArgumentError(f"counts must have shape {shape}, got {counts.shape}")
        if (counts < 0).any() or (counts > self.config.count_cap).any():
            raise InvalidArgumentError(f"counts must lie in [0, {self.config.count_cap}]")
        if age is None:
            age = (counts > 0).astype(np.int64)
        age = np.asarray(age, dtype=np.int64)
        if not np.array_equal(age > 0, counts > 0):
            raise InvalidArgumentError("age must be positive exactly where counts are")
        if not 0 <= t <= self.config.step_max:
            raise InvalidArgumentError(f"t must lie in [0, {self.config.step_max}]")

        self.state = EnvState(counts.copy(), age.copy(), t)
        self.done = self.state.alarms_active == 0 or t == self.config.step_max
        return self.observation()

    def reset(self, rng: np.random.Generator) -> Observation:
        """Seed a fresh episode with a warm-up cascade; retried until an alarm is active."""
        retrying = Retrying(
            retry=retry_if_exception_type(DegenerateConfigError),
            stop=stop_after_attempt(self.config.max_reset_attempts),
            reraise=True,
        )
        obs = retrying(self._reset_once, rng)
        logger.debug(f"Reset: {self.state.alarms_active} active alarms")
        return obs

    def _reset_once(self, rng: np.random.Generator) -> Observation:
        cfg = self.config
        N, V = cfg.num_nodes, cfg.num_types
        counts = np.zeros((N, V), dtype=np.int64)
        age = np.zeros((N, V), dtype=np.int64)

        mu = self.params.mu
        type_p = mu / mu.sum() if mu.sum() > 0 else np.full(V, 1.0 / V)
        root_types = rng.choice(V, size=cfg.root_cause_num, p=type_p)
        root_devices = rng.integers(N, size=cfg.root_cause_num)
        onsets = rng.integers(cfg.warmup_time_range, size=cfg.root_cause_num)

        for step in range(cfg.warmup_time_range):
            due = onsets == step
            np.add.at(counts, (root_devices[due], root_types[due]), 1)
            lam = cfg.boost_scale * mu[None, :] + cfg.kernel_kappa * self.propagation(counts)
            counts = np.minimum(counts + rng.poisson(lam * cfg.delta_t), cfg.count_cap)
            age = np.where(counts > 0, age + 1, 0)

        self.state = EnvState(counts, age, 0)
        if self.state.alarms_active == 0:
            raise DegenerateConfigError(
                f"warm-up produced no active alarm (root_cause_num={cfg.root_cause_num})"
            )
        self.done = False
        return self.observation()

    def step(self, action: Union[int, ActionId], rng: np.random.Generator) -> StepResult:
        if self.done:
            raise EpisodeFinishedError("step() called on a finished episode; call reset() first")
        cfg = self.config
        if not isinstance(action, ActionId):
            action = ActionId.from_index(int(action), cfg.num_nodes, cfg.num_types)

        counts = self.state.counts.copy()
        age = self.state.age.copy()
        t = self.state.t
        n_before = int((counts > 0).sum())
        activity_before = (counts > 0).sum(axis=0).astype(np.int64)
        exposure = self.type_exposure(counts)

        treated = np.zeros(cfg.num_types, dtype=bool)
        treated_type = None
        n, v = action.device, action.alarm_type
        if counts[n, v] > 0:
            treated[v] = True
            treated_type = v
            counts[n, v] = 0
            age[n, v] = 0

        post_exposure = self.type_exposure(counts)
        new = self.draw_arrivals(rng, counts)
        counts = np.minimum(counts + new, cfg.count_cap)
        age = np.where(counts > 0, age + 1, 0)

        self.state = EnvState(counts, age, t + 1)
        n_after = self.state.alarms_active
        reward = repair_reward(n_before, n_after, t, cfg.step_max)
        self.done = n_after == 0 or self.state.t == cfg.step_max

        info = StepInfo(
            action=action.index,
            treated_type=treated_type,
            treated_types=treated,
            new_events=int(new.sum()),
            type_activity=activity_before,
            next_type_activity=self.type_activity(),
            exposure=exposure,
            post_exposure=post_exposure,
            new_type_events=new.sum(axis=0).astype(np.int64),
        )
        return StepResult(
            next_obs=self.observation(),
            reward=reward,
            done=self.done,
            alarms_active=n_after,
            info=info,
        )

    def __repr__(self) -> str:
        return (
            f"<FaultAlarmEnv(N={self.config.num_nodes}, V={self.config.num_types}, "
            f"t={self.state.t}, active={self.state.alarms_active})>"
        )
