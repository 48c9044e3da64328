"""
Causal action masks.

The mask keeps repairs of the ``k`` root-most active alarm types: the
learned graph is restricted to active types, topologically ordered (ties by
type index), and its first ``k`` types are allowed on the devices where they
are active.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from causal_alarm_rl.core.graph import CausalGraph, order_from_adjacency
from causal_alarm_rl.core.types import Observation, active_flags
from causal_alarm_rl.errors import ContractViolationError, InvalidArgumentError


@dataclass(frozen=True, eq=False)
class CausalMask:
    allow: np.ndarray
    k: int

    @property
    def num_allowed(self) -> int:
        return int(self.allow.sum())


def allow_all(num_actions: int) -> CausalMask:
    return CausalMask(np.ones(num_actions, dtype=bool), 0)


def root_most_types(g: CausalGraph, active_types: np.ndarray, k: int) -> np.ndarray:
    """First ``k`` active types in the causal order of the active-induced subgraph."""
    types = np.flatnonzero(active_types)
    sub = g.adj[np.ix_(types, types)]
    order = order_from_adjacency(sub)
    return types[order[:k]]


def build_mask(g: CausalGraph, obs: Observation, k: int) -> CausalMask:
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    active = active_flags(obs)
    if not active.any():
        return CausalMask(np.ones(active.shape[0], dtype=bool), k)

    V = g.num_types
    by_device = active.reshape(-1, V)
    selected = np.zeros(V, dtype=bool)
    selected[root_most_types(g, by_device.any(axis=0), k)] = True
    allow = (by_device & selected[None, :]).ravel()
    return CausalMask(allow, k)


def masked_distribution(logits: np.ndarray, mask: CausalMask) -> np.ndarray:
    """Softmax over allowed actions; masked actions get exactly zero probability."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != mask.allow.shape:
        raise InvalidArgumentError(
            f"{logits.shape[0]} logits for a {mask.allow.shape[0]}-action mask"
        )
    return masked_softmax(logits[None, :], mask.allow[None, :])[0]


def masked_softmax(logits: np.ndarray, allow: np.ndarray) -> np.ndarray:
    """Row-wise masked softmax for (B, A) logits and allow flags."""
    if not allow.any(axis=-1).all():
        raise ContractViolationError("mask allows no action")
    z = np.where(allow, logits, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class CausalMaskProvider:
    """Builds masks from a learned graph that the training loop swaps in after each update."""

    def __init__(self, graph: CausalGraph, k: int):
        self.graph = graph
        self.k = k
        self.graph_reads = 0

    def __call__(self, obs: Observation) -> CausalMask:
        self.graph_reads += 1
        return build_mask(self.graph, obs, self.k)


class NoMaskProvider:
    """Plain baseline: every action allowed, the graph is never consulted."""

    def __init__(self, num_actions: int):
        self.num_actions = num_actions
        self.graph_reads = 0
        self.graph: Optional[CausalGraph] = None

    def __call__(self, obs: Observation) -> CausalMask:
        return allow_all(self.num_actions)
