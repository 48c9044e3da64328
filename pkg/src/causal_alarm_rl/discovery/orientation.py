"""Ancestor graph from ATT evidence."""

import numpy as np
from loguru import logger

from causal_alarm_rl.config import DiscoveryConfig
from causal_alarm_rl.core.graph import CausalGraph, find_cycle
from causal_alarm_rl.discovery.att import AttMatrix


def break_cycles(adj: np.ndarray, strength: np.ndarray) -> np.ndarray:
    """Delete the weakest edge of each remaining cycle (ties: smallest ``(i, j)``)."""
    adj = adj.copy()
    while True:
        cycle = find_cycle(adj)
        if cycle is None:
            return adj
        i, j = min(cycle, key=lambda e: (strength[e], e))
        adj[i, j] = False
        logger.debug(f"Removed edge {i}->{j} to break a cycle")


def orient(att: AttMatrix, config: DiscoveryConfig) -> CausalGraph:
    """
    Edge ``i -> j`` for every valid pair with ``|att[i, j]| > att_threshold``.

    When both directions pass only the stronger one is kept; an exact tie
    keeps the lower-to-higher index direction.
    """
    V = att.num_types
    strength = np.abs(att.att)
    adj = att.valid & (strength > config.att_threshold) & ~np.eye(V, dtype=bool)

    both = np.triu(adj & adj.T, k=1)
    for i, j in zip(*np.nonzero(both)):
        if strength[i, j] >= strength[j, i]:
            adj[j, i] = False
        else:
            adj[i, j] = False

    adj = break_cycles(adj, strength)
    return CausalGraph(adj, att.type_names)
