"""
Small tabular MDPs, masked policies and exact policy evaluation.

Masks use ``1 = unmasked``. A masked policy is the base policy multiplied by
the mask and renormalized per state.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from causal_alarm_rl.errors import ContractViolationError, InvalidArgumentError

MAX_STATES = 12
MAX_ACTIONS = 6


@dataclass(frozen=True, eq=False)
class TabularMDP:
    P: np.ndarray
    R: np.ndarray
    gamma: float
    h0: np.ndarray
    r_max: float

    def __post_init__(self):
        S, A = self.R.shape
        if not (1 <= S <= MAX_STATES and 1 <= A <= MAX_ACTIONS):
            raise InvalidArgumentError(f"tabular MDP must have S<={MAX_STATES}, A<={MAX_ACTIONS}")
        if self.P.shape != (S, A, S):
            raise InvalidArgumentError(f"P has shape {self.P.shape}, expected {(S, A, S)}")
        if (self.P < 0).any() or not np.allclose(self.P.sum(axis=2), 1.0, atol=1e-12, rtol=0):
            raise InvalidArgumentError("transition rows must be distributions")
        if np.abs(self.R).max() > self.r_max:
            raise InvalidArgumentError(f"rewards exceed the declared bound {self.r_max}")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidArgumentError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.h0.shape != (S,) or (self.h0 < 0).any() or abs(self.h0.sum() - 1.0) > 1e-9:
            raise InvalidArgumentError("h0 must be a distribution over states")

    @property
    def num_states(self) -> int:
        return self.R.shape[0]

    @property
    def num_actions(self) -> int:
        return self.R.shape[1]


@dataclass(frozen=True, eq=False)
class MaskedTabularPolicy:
    base: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask).astype(bool)
        if self.base.shape != mask.shape:
            raise InvalidArgumentError("base policy and mask shapes differ")
        if not mask.any(axis=1).all():
            raise InvalidArgumentError("every state needs at least one unmasked action")
        if (self.base < 0).any() or not np.allclose(self.base.sum(axis=1), 1.0, atol=1e-9):
            raise InvalidArgumentError("base policy rows must be distributions")
        object.__setattr__(self, "mask", mask)

    @property
    def probs(self) -> np.ndarray:
        masked = self.base * self.mask
        totals = masked.sum(axis=1, keepdims=True)
        # all base mass on masked actions: fall back to uniform over unmasked ones
        uniform = self.mask / self.mask.sum(axis=1, keepdims=True)
        safe = np.where(totals > 0, totals, 1.0)
        return np.where(totals > 0, masked / safe, uniform)


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance ``½ Σ |p - q|``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidArgumentError(f"distributions have shapes {p.shape} and {q.shape}")
    for name, d in (("p", p), ("q", q)):
        if (d < 0).any() or abs(d.sum() - 1.0) > 1e-9:
            raise InvalidArgumentError(f"{name} is not a probability distribution")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True, eq=False)
class ValueResult:
    value: float
    state_values: np.ndarray
    occupancy: np.ndarray


PolicyLike = Union[np.ndarray, MaskedTabularPolicy]


def _policy_probs(policy: PolicyLike) -> np.ndarray:
    return policy.probs if isinstance(policy, MaskedTabularPolicy) else np.asarray(policy)


def exact_value(mdp: TabularMDP, policy: PolicyLike) -> ValueResult:
    """Solve ``(I - γ P_π) V = r_π``; also returns the normalized discounted occupancy ``ρ_π``."""
    pi = _policy_probs(policy)
    if pi.shape != mdp.R.shape:
        raise InvalidArgumentError(f"policy has shape {pi.shape}, MDP has {mdp.R.shape}")
    P_pi = np.einsum("sa,sat->st", pi, mdp.P)
    r_pi = (pi * mdp.R).sum(axis=1)
    system = np.eye(mdp.num_states) - mdp.gamma * P_pi
    try:
        V = np.linalg.solve(system, r_pi)
        visits = np.linalg.solve(system.T, mdp.h0)
    except np.linalg.LinAlgError as e:
        raise ContractViolationError(f"Bellman system is singular: {e}") from e
    occupancy = (1.0 - mdp.gamma) * visits[:, None] * pi
    return ValueResult(value=float(mdp.h0 @ V), state_values=V, occupancy=occupancy)


def masked_policy_iteration(mdp: TabularMDP, mask: np.ndarray, max_iter: int = 1000) -> MaskedTabularPolicy:
    """Optimal deterministic policy among unmasked actions; ties keep the current action."""
    mask = np.asarray(mask).astype(bool)
    if mask.shape != mdp.R.shape or not mask.any(axis=1).all():
        raise InvalidArgumentError("mask must match the MDP and leave an action in every state")

    S, A = mask.shape
    rows = np.arange(S)
    actions = np.argmax(mask, axis=1)
    for _ in range(max_iter):
        pi = np.zeros((S, A))
        pi[rows, actions] = 1.0
        V = exact_value(mdp, pi).state_values
        Q = mdp.R + mdp.gamma * mdp.P @ V
        Q = np.where(mask, Q, -np.inf)
        best = Q.max(axis=1)
        improved = np.where(Q[rows, actions] >= best - 1e-12, actions, np.argmax(Q, axis=1))
        if np.array_equal(improved, actions):
            break
        actions = improved
    else:
        raise ContractViolationError(f"policy iteration did not converge in {max_iter} iterations")

    pi = np.zeros((S, A))
    pi[rows, actions] = 1.0
    return MaskedTabularPolicy(pi, mask)


def random_tabular_mdp(
    rng: np.random.Generator,
    num_states: Optional[int] = None,
    num_actions: Optional[int] = None,
    r_max: float = 1.0,
) -> TabularMDP:
    S = num_states or int(rng.integers(2, MAX_STATES + 1))
    A = num_actions or int(rng.integers(2, MAX_ACTIONS + 1))
    P = rng.dirichlet(np.ones(S), size=(S, A))
    # renormalize in float64 so rows sum to 1 within 1e-12
    P /= P.sum(axis=2, keepdims=True)
    R = rng.uniform(-r_max, r_max, size=(S, A))
    gamma = float(rng.uniform(0.0, 0.99))
    h0 = rng.dirichlet(np.ones(S))
    return TabularMDP(P=P, R=R, gamma=gamma, h0=h0, r_max=r_max)


def random_mask(rng: np.random.Generator, num_states: int, num_actions: int) -> np.ndarray:
    mask = rng.random((num_states, num_actions)) < 0.5
    empty = ~mask.any(axis=1)
    mask[np.flatnonzero(empty), rng.integers(num_actions, size=int(empty.sum()))] = True
    return mask


def random_policy(rng: np.random.Generator, num_states: int, num_actions: int) -> np.ndarray:
    return rng.dirichlet(np.ones(num_actions), size=num_states)
