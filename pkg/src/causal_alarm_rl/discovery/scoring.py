"""
Penalized Poisson likelihood score for type-level causal graphs.

For child type ``j`` the response is its new arrivals on transitions that did
not treat ``j``; the rate is ``b_j + Σ_{i ∈ Pa_j} Σ_k w_ijk * Z[i, k]`` on the
post-repair exposures ``Z``. The graph score is the summed maximized
log-likelihood minus ``alpha * |E|``.
"""

from typing import Dict, Sequence, Tuple

from loguru import logger

from causal_alarm_rl.config import DiscoveryConfig
from causal_alarm_rl.core.graph import CausalGraph, find_cycle
from causal_alarm_rl.discovery.buffer import Buffer, InterventionLog, as_log
from causal_alarm_rl.discovery.poisson import fit_linear_poisson
from causal_alarm_rl.errors import InvalidArgumentError


class PoissonStructureScore:
    """Local scores cached per ``(child, parents)``; one instance per buffer snapshot."""

    def __init__(self, log: InterventionLog, config: DiscoveryConfig):
        self.log = log
        self.config = config
        self.penalty = config.penalty_for(len(log))
        self._cache: Dict[Tuple[int, Tuple[int, ...]], float] = {}

    def local_loglik(self, child: int, parents: Sequence[int]) -> float:
        key = (int(child), tuple(sorted(int(p) for p in parents)))
        if key not in self._cache:
            self._cache[key] = self._fit(*key)
        return self._cache[key]

    def _fit(self, child: int, parents: Tuple[int, ...]) -> float:
        rows = ~self.log.treated[:, child]
        if not rows.any():
            return 0.0
        y = self.log.new_events[rows, child]
        X = self.log.post_exposure[rows][:, list(parents), :]
        return fit_linear_poisson(y, X, max_iter=self.config.score_max_iter).loglik

    def loglik(self, g: CausalGraph) -> float:
        return sum(self.local_loglik(j, g.parents(j)) for j in range(g.num_types))

    def score(self, g: CausalGraph) -> float:
        return self.loglik(g) - self.penalty * g.num_edges


def score_graph(g: CausalGraph, buffer: Buffer, config: DiscoveryConfig) -> float:
    """Penalized log-likelihood of ``g`` on ``buffer``; higher is better."""
    if find_cycle(g.adj) is not None:
        raise InvalidArgumentError("score_graph requires an acyclic graph")
    log = as_log(buffer)
    if log.num_types != g.num_types:
        raise InvalidArgumentError(
            f"graph has {g.num_types} types, buffer has {log.num_types}"
        )
    value = PoissonStructureScore(log, config).score(g)
    logger.debug(f"Score of {g!r}: {value:.4f}")
    return value
