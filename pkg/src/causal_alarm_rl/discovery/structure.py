"""
Online structure update: counterfactual fit, ATT, orientation, then pruning.

Pairs with ATT evidence in either direction take the oriented edge; pairs
without evidence keep whatever the current graph says, and only evidence
edges are candidates for pruning.
"""

from typing import Optional, Sequence

import numpy as np
from loguru import logger

from causal_alarm_rl.config import DiscoveryConfig
from causal_alarm_rl.core.graph import CausalGraph
from causal_alarm_rl.discovery.att import estimate_att
from causal_alarm_rl.discovery.buffer import Buffer, as_log
from causal_alarm_rl.discovery.counterfactual import fit_counterfactual
from causal_alarm_rl.discovery.orientation import break_cycles, orient
from causal_alarm_rl.discovery.scoring import PoissonStructureScore
from causal_alarm_rl.errors import InvalidArgumentError


def prune(
    ancestor_graph: CausalGraph,
    buffer: Buffer,
    config: DiscoveryConfig,
    prunable: Optional[np.ndarray] = None,
) -> CausalGraph:
    """
    Greedy backward elimination.

    Each round removes the edge whose removal raises the score most, until
    no removal helps or ``max_prune_passes * |E|`` removals were made. Only
    edges flagged in ``prunable`` (default: all) are considered.
    """
    log = as_log(buffer)
    if log.num_types != ancestor_graph.num_types:
        raise InvalidArgumentError(
            f"graph has {ancestor_graph.num_types} types, buffer has {log.num_types}"
        )
    scorer = PoissonStructureScore(log, config)
    adj = ancestor_graph.adj.copy()
    candidates = adj.copy() if prunable is None else adj & np.asarray(prunable, dtype=bool)
    V = adj.shape[0]

    local = {j: scorer.local_loglik(j, np.flatnonzero(adj[:, j])) for j in range(V)}
    limit = config.max_prune_passes * max(int(adj.sum()), 1)
    removals = 0

    while removals < limit:
        best_gain, best_edge = 0.0, None
        for i, j in zip(*np.nonzero(candidates)):
            parents = np.flatnonzero(adj[:, j])
            reduced = scorer.local_loglik(j, parents[parents != i])
            gain = reduced - local[j] + scorer.penalty
            if gain > best_gain:
                best_gain, best_edge = gain, (int(i), int(j))
        if best_edge is None:
            break
        i, j = best_edge
        adj[i, j] = candidates[i, j] = False
        local[j] = scorer.local_loglik(j, np.flatnonzero(adj[:, j]))
        removals += 1
        logger.debug(f"Pruned {ancestor_graph.type_names[i]}->{ancestor_graph.type_names[j]} (gain {best_gain:.3f})")

    return ancestor_graph.with_adjacency(adj)


def update_structure(
    current: CausalGraph,
    buffer: Buffer,
    config: DiscoveryConfig,
    type_names: Optional[Sequence[str]] = None,
) -> CausalGraph:
    """One online update of the learned graph from the accumulated buffer."""
    if len(buffer) == 0:
        return current
    log = as_log(buffer)

    cf = fit_counterfactual(log, max_iter=config.score_max_iter)
    att = estimate_att(log, cf, config, type_names=type_names or current.type_names)
    evidence = att.valid | att.valid.T
    if not evidence.any():
        logger.debug("No valid ATT evidence; graph unchanged")
        return current

    oriented = orient(att, config)
    adj = np.where(evidence, oriented.adj, current.adj)

    # retained edges go first when a cycle has to be broken
    strength = np.where(evidence, np.abs(att.att), -1.0)
    adj = break_cycles(adj, strength)

    updated = prune(current.with_adjacency(adj), log, config, prunable=evidence & adj)
    logger.info(
        f"Structure updated on {len(log)} transitions: "
        f"{current.num_edges} -> {updated.num_edges} edges"
    )
    return updated
